//! Training pipelines and the trained linear model.
//!
//! `train_npdmd` is the main entry point: center the features, build the
//! factored scatter, assemble and solve the dual, recover the direction
//! through the scatter operator and fit the intercept by error count. The
//! mean-difference baseline and the Gaussian Bayes rule live here too since
//! they produce the same kind of model.

use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{center, Dataset};
use crate::dualqp::{build_h, solve_dual};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::scatter::{build_scatter, lambda_bound};

pub const MODEL_SCHEMA_VERSION: &str = "1";

/// Training knobs. `lambda_frac` is the dispersion weight as a fraction of
/// the admissible upper bound `1 / lambda_max(S_W)`, so any value in [0, 1)
/// is valid for every dataset; 0 recovers the soft-margin SVM.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lambda_frac: f64,
    pub c0: f64,
    pub tol: f64,
    pub max_passes: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda_frac: 0.0,
            c0: 1.0,
            tol: 1e-6,
            max_passes: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: String,
    pub method: String,
    pub w: Array1<f64>,
    pub b: f64,
    /// Dual coefficients in training order; empty for non-dual methods.
    pub alpha: Array1<f64>,
    pub support_indices: Vec<usize>,
    /// Training-set feature means; prediction re-centers with these.
    pub centering_mean: Array1<f64>,
    pub hyperparams: Hyperparams,
    /// Absolute dispersion weight the fraction resolved to.
    pub lambda: f64,
    pub source: String,
    pub converged: bool,
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl TrainedModel {
    /// Wraps an externally known direction (for example the Bayes rule) so it
    /// can go through the same prediction and metric paths.
    pub fn from_direction(method: &str, w: Array1<f64>, b: f64) -> TrainedModel {
        let d = w.len();
        TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION.to_string(),
            method: method.to_string(),
            w,
            b,
            alpha: Array1::zeros(0),
            support_indices: Vec::new(),
            centering_mean: Array1::zeros(d),
            hyperparams: Hyperparams::default(),
            lambda: 0.0,
            source: String::new(),
            converged: true,
            kkt_violation: 0.0,
            iterations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// A zero direction classifies everything by the sign of `b` alone.
    pub fn is_degenerate(&self) -> bool {
        self.w.iter().all(|v| *v == 0.0)
    }

    /// Raw decision values `w . (x - mean) + b`, one per row.
    pub fn decision_values(&self, x: &ArrayView2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut scores = x.dot(&self.w);
        let offset = self.b - self.centering_mean.dot(&self.w);
        scores += offset;
        Ok(scores)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let model: TrainedModel =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported schema version {:?}",
                model.schema_version
            )));
        }
        Ok(model)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<TrainedModel> {
        TrainedModel::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Trains the dispersion-seeking margin classifier.
///
/// Non-convergence of the dual solver within the pass budget is not an
/// error: the model is still returned with `converged = false`.
pub fn train_npdmd(ds: &Dataset, hp: &Hyperparams) -> Result<TrainedModel> {
    if !(hp.lambda_frac >= 0.0 && hp.lambda_frac < 1.0) {
        return Err(Error::LambdaOutOfRange {
            lambda: hp.lambda_frac,
            bound: 1.0,
        });
    }
    assert!(hp.c0 > 0.0, "box constraint must be positive");

    let (centered, mean) = center(ds);
    let sm = build_scatter(&centered)?;
    let bound = lambda_bound(&sm);
    // zero scatter makes the dispersion term vanish; any weight acts as zero
    let lambda = if bound.is_finite() {
        hp.lambda_frac * bound
    } else {
        0.0
    };

    let mut dp = build_h(&centered, &sm, lambda, hp.c0)?.with_tol(hp.tol);
    if let Some(mp) = hp.max_passes {
        dp = dp.with_max_passes(mp);
    }
    let sol = solve_dual(&dp)?;

    let weighted = &centered.labels * &sol.alpha;
    let v = centered.features.t().dot(&weighted);
    let w = sm.smw_operator(lambda)?.apply_vec(&v.view());

    let scores = centered.features.dot(&w);
    let b = fit_intercept(&scores.view(), &centered.labels.view());
    let support_indices: Vec<usize> = sol
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > hp.tol)
        .map(|(i, _)| i)
        .collect();

    Ok(TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION.to_string(),
        method: "npdmd".to_string(),
        w,
        b,
        alpha: sol.alpha,
        support_indices,
        centering_mean: mean,
        hyperparams: hp.clone(),
        lambda,
        source: ds.source.clone(),
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
        iterations: sol.iterations,
    })
}

/// Mean-difference baseline: the direction joining the class means, with the
/// boundary halfway between them.
pub fn train_md(ds: &Dataset) -> Result<TrainedModel> {
    let (centered, mean) = center(ds);
    let sm = build_scatter(&centered)?;
    let w = &sm.mean_pos - &sm.mean_neg;
    let b = -0.5 * w.dot(&(&sm.mean_pos + &sm.mean_neg));
    Ok(TrainedModel {
        schema_version: MODEL_SCHEMA_VERSION.to_string(),
        method: "md".to_string(),
        w,
        b,
        alpha: Array1::zeros(0),
        support_indices: Vec::new(),
        centering_mean: mean,
        hyperparams: Hyperparams::default(),
        lambda: 0.0,
        source: ds.source.clone(),
        converged: true,
        kkt_violation: 0.0,
        iterations: 0,
    })
}

/// Optimal linear rule for two Gaussians with a shared covariance:
/// `w = Sigma^-1 (mu_pos - mu_neg)`, boundary at the midpoint.
pub fn bayes_rule(
    mu_pos: &ArrayView1<f64>,
    mu_neg: &ArrayView1<f64>,
    sigma: &ArrayView2<f64>,
) -> Result<(Array1<f64>, f64)> {
    let d = mu_pos.len();
    if mu_neg.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu_neg.len(),
        });
    }
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma.nrows(),
        });
    }
    let l = cholesky(sigma).ok_or(Error::SingularCovariance)?;
    let diff = (mu_pos - mu_neg).insert_axis(Axis(1));
    let w = cholesky_solve(&l, &diff.view()).index_axis_move(Axis(1), 0);
    let b = -0.5 * w.dot(&(mu_pos + mu_neg));
    Ok((w, b))
}

/// Class marks and raw scores for each row; ties on the boundary go to +1.
pub fn predict(model: &TrainedModel, x: &ArrayView2<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    let scores = model.decision_values(x)?;
    let labels = scores.mapv(|s| if s >= 0.0 { 1.0 } else { -1.0 });
    Ok((labels, scores))
}

/// Intercept minimizing the count of samples with `y (s + b) <= 0`.
///
/// The count is piecewise constant between the breakpoints `-s_i`, so the
/// scan walks the sorted breakpoints and keeps the widest minimizing open
/// interval, preferring the rightmost among equal widths; an unbounded
/// optimal interval is represented by a point one unit past its edge.
/// Boundary samples count as errors, which follows the training objective
/// rather than the prediction rule's tie handling.
pub fn fit_intercept(scores: &ArrayView1<f64>, labels: &ArrayView1<f64>) -> f64 {
    let n = scores.len();
    assert!(n >= 1, "need at least one score");
    assert_eq!(n, labels.len(), "scores and labels must align");

    // positives are wrong for b <= t, negatives for b >= t, with t = -s
    let mut pts: Vec<(f64, bool)> = (0..n).map(|i| (-scores[i], labels[i] > 0.0)).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n_pos = pts.iter().filter(|p| p.1).count();

    let mut errs = n_pos;
    let (mut best_errs, mut best_width, mut best_mid) = (errs, f64::INFINITY, pts[0].0 - 1.0);
    let mut idx = 0;
    while idx < n {
        let t = pts[idx].0;
        let mut pos_here = 0usize;
        let mut neg_here = 0usize;
        while idx < n && pts[idx].0 == t {
            if pts[idx].1 {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            idx += 1;
        }
        errs = errs + neg_here - pos_here;
        let (width, mid) = if idx < n {
            let next = pts[idx].0;
            (next - t, 0.5 * (t + next))
        } else {
            (f64::INFINITY, t + 1.0)
        };
        if errs < best_errs
            || (errs == best_errs
                && (width > best_width || (width == best_width && mid > best_mid)))
        {
            best_errs = errs;
            best_width = width;
            best_mid = mid;
        }
    }
    best_mid
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn analytic_dataset() -> Dataset {
        Dataset::new(
            array![[1.0], [-1.0]],
            array![1.0, -1.0],
            None,
            "pair".into(),
        )
        .unwrap()
    }

    fn random_dataset(n_pos: usize, n_neg: usize, d: usize, gap: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_pos + n_neg;
        let features = Array2::from_shape_fn((n, d), |(i, _)| {
            let shift = if i < n_pos { gap } else { -gap };
            shift + rng.random_range(-1.0..1.0)
        });
        let labels = Array1::from_shape_fn(n, |i| if i < n_pos { 1.0 } else { -1.0 });
        Dataset::new(features, labels, None, "blob".into()).unwrap()
    }

    #[test]
    fn analytic_training_recovers_unit_direction() {
        let hp = Hyperparams {
            c0: 10.0,
            ..Default::default()
        };
        let model = train_npdmd(&analytic_dataset(), &hp).unwrap();
        assert!(model.converged);
        assert!((model.w[0] - 1.0).abs() < 1e-10);
        assert!(model.b.abs() < 1e-10);
        assert_eq!(model.support_indices, vec![0, 1]);
        let (labels, scores) = predict(&model, &analytic_dataset().features.view()).unwrap();
        assert_eq!(labels.to_vec(), vec![1.0, -1.0]);
        assert!((scores[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn label_negation_flips_direction_and_intercept() {
        let ds = random_dataset(4, 5, 6, 0.8, 2);
        let flipped = Dataset::new(
            ds.features.clone(),
            ds.labels.mapv(|y| -y),
            None,
            "flipped".into(),
        )
        .unwrap();
        let hp = Hyperparams {
            lambda_frac: 0.5,
            c0: 5.0,
            ..Default::default()
        };
        let a = train_npdmd(&ds, &hp).unwrap();
        let b = train_npdmd(&flipped, &hp).unwrap();
        for (x, y) in a.w.iter().zip(b.w.iter()) {
            assert!((x + y).abs() < 1e-12);
        }
        assert!((a.b + b.b).abs() < 1e-12);
    }

    #[test]
    fn full_negation_keeps_direction_and_flips_intercept() {
        // negating features and labels relabels the same geometry, so the
        // dual problem is unchanged: w stays put and only b mirrors
        let ds = random_dataset(4, 5, 6, 0.8, 7);
        let negated = Dataset::new(
            ds.features.mapv(|v| -v),
            ds.labels.mapv(|y| -y),
            None,
            "negated".into(),
        )
        .unwrap();
        let hp = Hyperparams {
            lambda_frac: 0.3,
            c0: 2.0,
            ..Default::default()
        };
        let a = train_npdmd(&ds, &hp).unwrap();
        let b = train_npdmd(&negated, &hp).unwrap();
        for (x, y) in a.w.iter().zip(b.w.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.b + b.b).abs() < 1e-12);
    }

    #[test]
    fn direction_rebuilds_from_stored_alpha() {
        let ds = random_dataset(5, 6, 15, 0.5, 4);
        for frac in [0.0, 0.6, 0.99] {
            let hp = Hyperparams {
                lambda_frac: frac,
                c0: 1.0,
                ..Default::default()
            };
            let model = train_npdmd(&ds, &hp).unwrap();
            let (centered, _) = center(&ds);
            let sm = build_scatter(&centered).unwrap();
            let weighted = &centered.labels * &model.alpha;
            let v = centered.features.t().dot(&weighted);
            let w = sm.smw_operator(model.lambda).unwrap().apply_vec(&v.view());
            let scale = model.w.iter().map(|x| x.abs()).fold(1.0f64, f64::max);
            for (a, b) in model.w.iter().zip(w.iter()) {
                assert!((a - b).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn invalid_lambda_fraction_is_rejected() {
        let ds = analytic_dataset();
        for frac in [-0.1, 1.0, 1.5] {
            let hp = Hyperparams {
                lambda_frac: frac,
                ..Default::default()
            };
            assert!(matches!(
                train_npdmd(&ds, &hp),
                Err(Error::LambdaOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn intercept_examples() {
        // separable and symmetric: widest zero-error interval is (-2, 2)
        let b = fit_intercept(
            &array![2.0, 3.0, -2.0, -3.0].view(),
            &array![1.0, 1.0, -1.0, -1.0].view(),
        );
        assert_eq!(b, 0.0);

        // one unavoidable error; two optimal intervals tie on width and the
        // rightmost wins
        let b = fit_intercept(
            &array![1.0, -0.5, -1.0, 0.5].view(),
            &array![1.0, 1.0, -1.0, -1.0].view(),
        );
        assert!((b - 0.75).abs() < 1e-15);

        // a boundary score counts against the intercept that produces it
        let b = fit_intercept(&array![0.0].view(), &array![1.0].view());
        assert!(b > 0.0);
    }

    /// Direct evaluation of the error count at a candidate intercept.
    fn count_errors(scores: &[f64], labels: &[f64], b: f64) -> usize {
        scores
            .iter()
            .zip(labels)
            .filter(|(s, y)| **y * (**s + b) <= 0.0)
            .count()
    }

    #[test]
    fn intercept_matches_brute_force_on_random_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..100 {
            let n = rng.random_range(1..25);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let labels: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();

            // brute force: evaluate the count on every threshold interval
            let mut ts: Vec<f64> = scores.iter().map(|s| -s).collect();
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts.dedup();
            let mut candidates: Vec<(f64, f64)> = Vec::new(); // (b, width)
            candidates.push((ts[0] - 1.0, f64::INFINITY));
            for w in ts.windows(2) {
                candidates.push((0.5 * (w[0] + w[1]), w[1] - w[0]));
            }
            candidates.push((ts[ts.len() - 1] + 1.0, f64::INFINITY));
            let best = candidates
                .iter()
                .map(|&(b, width)| (count_errors(&scores, &labels, b), b, width))
                .min_by(|a, b| {
                    a.0.cmp(&b.0)
                        .then(b.2.partial_cmp(&a.2).unwrap())
                        .then(b.1.partial_cmp(&a.1).unwrap())
                })
                .unwrap();

            let got = fit_intercept(
                &Array1::from_vec(scores.clone()).view(),
                &Array1::from_vec(labels.clone()).view(),
            );
            let got_errs = count_errors(&scores, &labels, got);
            assert_eq!(got_errs, best.0, "case {case}: error count differs");
            assert!(
                (got - best.1).abs() < 1e-12,
                "case {case}: intercept {got} vs brute force {}",
                best.1
            );
        }
    }

    #[test]
    fn boundary_score_predicts_positive() {
        let model = TrainedModel::from_direction("test", array![1.0], -1.0);
        let (labels, scores) = predict(&model, &array![[1.0], [0.5]].view()).unwrap();
        assert_eq!(scores[0], 0.0);
        assert_eq!(labels[0], 1.0);
        assert_eq!(labels[1], -1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = TrainedModel::from_direction("test", array![1.0, 2.0], 0.0);
        let err = predict(&model, &array![[1.0]].view()).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn mean_difference_on_shifted_blobs() {
        let ds = Dataset::new(
            array![[2.0, 0.0], [4.0, 0.0], [-2.0, 1.0], [-4.0, 1.0]],
            array![1.0, 1.0, -1.0, -1.0],
            None,
            "md".into(),
        )
        .unwrap();
        let model = train_md(&ds).unwrap();
        // centered class means are (3,-0.5) and (-3,0.5)
        assert!((model.w[0] - 6.0).abs() < 1e-12);
        assert!((model.w[1] + 1.0).abs() < 1e-12);
        let (labels, _) = predict(&model, &ds.features.view()).unwrap();
        assert_eq!(labels.to_vec(), ds.labels.to_vec());
    }

    #[test]
    fn identical_class_means_are_degenerate() {
        let ds = Dataset::new(
            array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            array![1.0, 1.0, -1.0, -1.0],
            None,
            "deg".into(),
        )
        .unwrap();
        let model = train_md(&ds).unwrap();
        assert!(model.is_degenerate());
    }

    #[test]
    fn bayes_rule_with_identity_covariance() {
        let (w, b) = bayes_rule(
            &array![1.0, 0.0].view(),
            &array![-1.0, 0.0].view(),
            &Array2::eye(2).view(),
        )
        .unwrap();
        assert_eq!(w.to_vec(), vec![2.0, 0.0]);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn bayes_rule_matches_gaussian_elimination() {
        // independent route: solve Sigma w = diff by row reduction
        let sigma = array![[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.0]];
        let mu_p = array![1.0, -0.5, 2.0];
        let mu_n = array![0.0, 0.5, 1.0];
        let (w, _) = bayes_rule(&mu_p.view(), &mu_n.view(), &sigma.view()).unwrap();

        let mut aug = Array2::<f64>::zeros((3, 4));
        aug.slice_mut(ndarray::s![.., ..3]).assign(&sigma);
        for i in 0..3 {
            aug[(i, 3)] = mu_p[i] - mu_n[i];
        }
        for col in 0..3 {
            let piv = (col..3)
                .max_by(|&a, &b| aug[(a, col)].abs().partial_cmp(&aug[(b, col)].abs()).unwrap())
                .unwrap();
            if piv != col {
                for j in 0..4 {
                    aug.swap((col, j), (piv, j));
                }
            }
            for i in 0..3 {
                if i != col {
                    let f = aug[(i, col)] / aug[(col, col)];
                    for j in 0..4 {
                        aug[(i, j)] -= f * aug[(col, j)];
                    }
                }
            }
        }
        for i in 0..3 {
            let expect = aug[(i, 3)] / aug[(i, i)];
            assert!((w[i] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn bayes_rule_rejects_indefinite_covariance() {
        let sigma = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            bayes_rule(&array![1.0, 0.0].view(), &array![0.0, 0.0].view(), &sigma.view()),
            Err(Error::SingularCovariance)
        ));
    }

    #[test]
    fn json_round_trip_preserves_predictions_exactly() {
        let ds = random_dataset(6, 5, 8, 0.6, 13);
        let hp = Hyperparams {
            lambda_frac: 0.9,
            c0: 10.0,
            ..Default::default()
        };
        let model = train_npdmd(&ds, &hp).unwrap();
        let back = TrainedModel::from_json(&model.to_json()).unwrap();
        let (_, s1) = predict(&model, &ds.features.view()).unwrap();
        let (l2, s2) = predict(&back, &ds.features.view()).unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let (l1, _) = predict(&model, &ds.features.view()).unwrap();
        assert_eq!(l1, l2);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let model = TrainedModel::from_direction("test", array![1.0], 0.0);
        let text = model.to_json().replace("\"schema_version\": \"1\"", "\"schema_version\": \"9\"");
        assert!(matches!(
            TrainedModel::from_json(&text),
            Err(Error::ModelFormat(_))
        ));
    }
}
