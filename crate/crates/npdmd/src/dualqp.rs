//! The box-constrained dual program and its solver.
//!
//! Training reduces to
//!
//! `max_a  -1/2 a^T H a + sum(a)   s.t.  sum(a_i y_i) = 0,  0 <= a_i <= C0`
//!
//! with `H_ij = y_i y_j x_i^T (I - lambda S_W)^-1 x_j`. The solver is
//! pairwise coordinate ascent on the maximal violating pair: each step picks
//! the pair with the largest first-order optimality gap, solves the
//! two-variable subproblem in closed form and clips it to the box. Ties in
//! pair selection go to the lowest index, so solves are deterministic.

use std::cell::OnceCell;

use ndarray::{Array1, Array2, Axis};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::scatter::ScatterModel;

/// Above this sample count H is no longer materialized; rows are computed on
/// demand and cached. In the intended regime n stays far below this.
pub const DENSE_LIMIT: usize = 4096;

/// Guard for a quadratic coefficient that should be positive but is not,
/// within roundoff, because H is only positive semidefinite.
const TAU: f64 = 1e-12;

/// Refresh the maintained gradient from scratch this often to stop
/// accumulation of roundoff over long solves.
const REFRESH_EVERY: usize = 10_000;

enum HStorage {
    Dense(Array2<f64>),
    Lazy {
        x: Array2<f64>,
        scatter: ScatterModel,
        chol: Option<Array2<f64>>,
        rows: Vec<OnceCell<Vec<f64>>>,
    },
}

pub struct DualProblem {
    storage: HStorage,
    pub labels: Array1<f64>,
    pub c0: f64,
    pub tol: f64,
    pub max_passes: usize,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Array1<f64>,
    pub objective: f64,
    pub kkt_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// First-order optimality residuals at a candidate solution, split by the
/// condition they come from. `bias` is the multiplier estimate the residuals
/// are measured against.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub interior: f64,
    pub lower: f64,
    pub upper: f64,
    pub equality: f64,
    pub bias: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.interior.max(self.lower).max(self.upper).max(self.equality)
    }
}

/// Assembles the dual quadratic term for a centered dataset.
///
/// Dense up to `DENSE_LIMIT` samples with exact symmetrization; beyond that
/// rows are produced lazily through the factored scatter operator.
pub fn build_h(ds: &Dataset, sm: &ScatterModel, lambda: f64, c0: f64) -> Result<DualProblem> {
    build_h_with_dense_limit(ds, sm, lambda, c0, DENSE_LIMIT)
}

/// As `build_h` but with an explicit materialization threshold; exists so the
/// lazy path can be exercised at small n.
pub fn build_h_with_dense_limit(
    ds: &Dataset,
    sm: &ScatterModel,
    lambda: f64,
    c0: f64,
    dense_limit: usize,
) -> Result<DualProblem> {
    let n = ds.n();
    assert_eq!(n, sm.n(), "scatter was built from a different sample count");
    assert!(c0 > 0.0, "box constraint must be positive");
    let labels = ds.labels.clone();
    let storage = if n <= dense_limit {
        let op = sm.smw_operator(lambda)?;
        let u = op.apply(&ds.features.t());
        let mut h = ds.features.dot(&u);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] *= labels[i] * labels[j];
            }
        }
        // exact symmetry: the two triangles differ by roundoff only
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
                h[(i, j)] = avg;
                h[(j, i)] = avg;
            }
        }
        // dot() may hand back a column-major result; rows must be sliceable
        HStorage::Dense(h.as_standard_layout().into_owned())
    } else {
        let chol = sm.smw_chol(lambda)?;
        HStorage::Lazy {
            x: ds.features.clone(),
            scatter: sm.clone(),
            chol,
            rows: (0..n).map(|_| OnceCell::new()).collect(),
        }
    };
    Ok(DualProblem {
        storage,
        labels,
        c0,
        tol: 1e-6,
        max_passes: 10_000 * n,
    })
}

impl DualProblem {
    /// Wraps an explicit quadratic term; used by baselines and tests.
    pub fn from_dense(h: Array2<f64>, labels: Array1<f64>, c0: f64) -> Result<DualProblem> {
        let n = labels.len();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.nrows(),
            });
        }
        assert!(c0 > 0.0, "box constraint must be positive");
        Ok(DualProblem {
            storage: HStorage::Dense(h.as_standard_layout().into_owned()),
            labels,
            c0,
            tol: 1e-6,
            max_passes: 10_000 * n.max(1),
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        self.tol = tol;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, HStorage::Dense(_))
    }

    pub fn h_at(&self, i: usize, j: usize) -> f64 {
        self.h_row(i)[j]
    }

    fn h_row(&self, i: usize) -> &[f64] {
        match &self.storage {
            HStorage::Dense(h) => h.row(i).to_slice().expect("dense H is row-major"),
            HStorage::Lazy { rows, .. } => rows[i].get_or_init(|| self.compute_row(i)),
        }
    }

    fn compute_row(&self, i: usize) -> Vec<f64> {
        let HStorage::Lazy {
            x, scatter, chol, ..
        } = &self.storage
        else {
            unreachable!("rows are only computed for the lazy layout")
        };
        let xi = x.row(i);
        let u = match chol {
            None => xi.to_owned(),
            Some(l) => {
                let bxi = scatter.b.dot(&xi.insert_axis(Axis(1)));
                let z = cholesky_solve(l, &bxi.view());
                let mut u = xi.to_owned();
                u += &scatter.b.t().dot(&z.index_axis(Axis(1), 0));
                u
            }
        };
        let s = x.dot(&u);
        let yi = self.labels[i];
        (0..self.n()).map(|j| yi * self.labels[j] * s[j]).collect()
    }

    fn fresh_gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut g = vec![-1.0; n];
        for i in 0..n {
            let row = self.h_row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * alpha[j];
            }
            g[i] += acc;
        }
        g
    }
}

/// Maximal violating pair under the maintained gradient `g` of the
/// minimization form. Returns the pair and the optimality gap.
fn select_pair(labels: &Array1<f64>, alpha: &[f64], g: &[f64], c0: f64) -> (usize, usize, f64) {
    let n = alpha.len();
    let mut i_up = usize::MAX;
    let mut m_up = f64::NEG_INFINITY;
    let mut i_low = usize::MAX;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let score = -labels[t] * g[t];
        let up = if labels[t] > 0.0 {
            alpha[t] < c0
        } else {
            alpha[t] > 0.0
        };
        let low = if labels[t] > 0.0 {
            alpha[t] > 0.0
        } else {
            alpha[t] < c0
        };
        if up && score > m_up {
            m_up = score;
            i_up = t;
        }
        if low && score < m_low {
            m_low = score;
            i_low = t;
        }
    }
    (i_up, i_low, m_up - m_low)
}

/// Closed-form two-variable update clipped to the box; exactly the classical
/// working-set step, which keeps `sum(a_i y_i)` invariant.
fn update_pair(
    labels: &Array1<f64>,
    alpha: &mut [f64],
    g: &[f64],
    c0: f64,
    i: usize,
    j: usize,
    qi: &[f64],
    qj: &[f64],
) {
    if labels[i] != labels[j] {
        let mut quad = qi[i] + qj[j] + 2.0 * qi[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-g[i] - g[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > 0.0 {
            if alpha[i] > c0 {
                alpha[i] = c0;
                alpha[j] = c0 - diff;
            }
        } else if alpha[j] > c0 {
            alpha[j] = c0;
            alpha[i] = c0 + diff;
        }
    } else {
        let mut quad = qi[i] + qj[j] - 2.0 * qi[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (g[i] - g[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c0 {
            if alpha[i] > c0 {
                alpha[i] = c0;
                alpha[j] = sum - c0;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > c0 {
            if alpha[j] > c0 {
                alpha[j] = c0;
                alpha[i] = sum - c0;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
}

/// Runs pairwise ascent from `a = 0`. Non-convergence within the pass budget
/// is reported through the `converged` flag, not an error; the best iterate
/// found is still returned.
pub fn solve_dual(dp: &DualProblem) -> Result<DualSolution> {
    let n = dp.n();
    let pos = dp.labels.iter().filter(|y| **y > 0.0).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }

    let mut alpha = vec![0.0f64; n];
    let mut g = vec![-1.0f64; n];
    let mut iterations = 0usize;
    let mut converged = false;
    // stop below tol so roundoff in the maintained gradient cannot push the
    // recomputed residual back over it
    let target = 0.9 * dp.tol;

    while iterations < dp.max_passes {
        let (i, j, gap) = select_pair(&dp.labels, &alpha, &g, dp.c0);
        if gap <= target {
            converged = true;
            break;
        }
        let qi = dp.h_row(i);
        let qj = dp.h_row(j);
        let old_i = alpha[i];
        let old_j = alpha[j];
        update_pair(&dp.labels, &mut alpha, &g, dp.c0, i, j, qi, qj);
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            g[t] += di * qi[t] + dj * qj[t];
        }
        iterations += 1;
        if iterations % REFRESH_EVERY == 0 {
            g = dp.fresh_gradient(&alpha);
        }
    }
    if !converged {
        let (_, _, gap) = select_pair(&dp.labels, &alpha, &g, dp.c0);
        converged = gap <= dp.tol;
    }

    let fresh = dp.fresh_gradient(&alpha);
    let sum_a: f64 = alpha.iter().sum();
    let quad: f64 = alpha.iter().zip(fresh.iter()).map(|(a, g)| a * g).sum();
    // a^T H a = a^T (g + 1), so L = sum(a) - (a^T g + sum(a)) / 2
    let objective = 0.5 * (sum_a - quad);
    let report = kkt_from_alpha(dp, &alpha, &fresh);

    Ok(DualSolution {
        alpha: Array1::from_vec(alpha),
        objective,
        kkt_violation: report.max_violation(),
        iterations,
        converged,
    })
}

/// Residuals of the stationarity, box and equality conditions at a solution.
pub fn kkt_report(dp: &DualProblem, sol: &DualSolution) -> KktReport {
    let alpha: Vec<f64> = sol.alpha.to_vec();
    let fresh = dp.fresh_gradient(&alpha);
    kkt_from_alpha(dp, &alpha, &fresh)
}

fn kkt_from_alpha(dp: &DualProblem, alpha: &[f64], grad_min: &[f64]) -> KktReport {
    let n = alpha.len();
    let c0 = dp.c0;
    // gradient of the maximization objective
    let gl: Vec<f64> = grad_min.iter().map(|g| -g).collect();

    // stationarity wants gl_i + bias * y_i == 0 on the interior, <= 0 at the
    // lower bound, >= 0 at the upper bound
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let y = dp.labels[i];
        if alpha[i] > 0.0 && alpha[i] < c0 {
            free_sum += -y * gl[i];
            free_count += 1;
        } else if alpha[i] <= 0.0 {
            // gl_i + bias*y <= 0
            if y > 0.0 {
                hi = hi.min(-gl[i]);
            } else {
                lo = lo.max(gl[i]);
            }
        } else {
            // gl_i + bias*y >= 0
            if y > 0.0 {
                lo = lo.max(-gl[i]);
            } else {
                hi = hi.min(gl[i]);
            }
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    };

    let mut interior = 0.0f64;
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for i in 0..n {
        let v = gl[i] + bias * dp.labels[i];
        if alpha[i] > 0.0 && alpha[i] < c0 {
            interior = interior.max(v.abs());
        } else if alpha[i] <= 0.0 {
            lower = lower.max(v.max(0.0));
        } else {
            upper = upper.max((-v).max(0.0));
        }
    }
    let equality = alpha
        .iter()
        .zip(dp.labels.iter())
        .map(|(a, y)| a * y)
        .sum::<f64>()
        .abs();

    KktReport {
        interior,
        lower,
        upper,
        equality,
        bias,
    }
}
