//! Evaluation measures: confusion matrix, correct classification rate, mean
//! within-group error, ROC/AUC, angle to a reference direction, and the
//! data-piling index.
//!
//! MWE is the unweighted mean of the two per-class error rates, which is the
//! definition under which balanced data gives ccr = 1 - mwe exactly. AUC is
//! rank-based with ties counted one half, equivalent to exhaustive pair
//! counting. The piling index is the pooled within-class standard deviation
//! of unit-direction projections divided by the between-class projection gap;
//! values near zero mean the classes have collapsed onto hyperplanes.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::classifier::TrainedModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Evaluation summary for one model on one labeled set. `confusion` rows are
/// true class, columns predicted, index 0 the positive class. `angle_deg` and
/// `piling_index` need a reference direction and raw features respectively,
/// so `evaluate` leaves them unset and callers fill them in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: [[u64; 2]; 2],
    pub ccr: f64,
    pub mwe: f64,
    pub auc: f64,
    pub angle_deg: Option<f64>,
    pub piling_index: Option<f64>,
}

/// One point of an ROC curve swept over raw decision scores.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Fraction of correct predictions. Works on single-class truth, unlike the
/// full report.
pub fn ccr(y_true: ArrayView1<f64>, y_pred: ArrayView1<f64>) -> f64 {
    let correct = y_true
        .iter()
        .zip(y_pred.iter())
        .filter(|(t, p)| t == p)
        .count();
    correct as f64 / y_true.len() as f64
}

/// Confusion counts, CCR, MWE, and AUC for +/-1 labels. `scores` are the raw
/// decision values that produced `y_pred`; only their ordering matters.
pub fn evaluate(
    y_true: ArrayView1<f64>,
    y_pred: ArrayView1<f64>,
    scores: ArrayView1<f64>,
) -> Result<EvalReport> {
    if y_pred.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    let mut confusion = [[0u64; 2]; 2];
    for (t, p) in y_true.iter().zip(y_pred.iter()) {
        let row = if *t > 0.0 { 0 } else { 1 };
        let col = if *p > 0.0 { 0 } else { 1 };
        confusion[row][col] += 1;
    }
    let n_pos = confusion[0][0] + confusion[0][1];
    let n_neg = confusion[1][0] + confusion[1][1];
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let total = (n_pos + n_neg) as f64;
    let ccr = (confusion[0][0] + confusion[1][1]) as f64 / total;
    let err_pos = confusion[0][1] as f64 / n_pos as f64;
    let err_neg = confusion[1][0] as f64 / n_neg as f64;
    let mwe = 0.5 * (err_pos + err_neg);
    Ok(EvalReport {
        confusion,
        ccr,
        mwe,
        auc: auc(y_true, scores)?,
        angle_deg: None,
        piling_index: None,
    })
}

/// Probability that a random positive outranks a random negative, ties at
/// one half. Computed from average ranks, which matches pair counting.
pub fn auc(y_true: ArrayView1<f64>, scores: ArrayView1<f64>) -> Result<f64> {
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    let n = y_true.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // Average 1-based rank within each tied run of scores.
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let n_pos = y_true.iter().filter(|t| **t > 0.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let rank_sum_pos: f64 = y_true
        .iter()
        .zip(ranks.iter())
        .filter(|(t, _)| **t > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// ROC points from raw scores, one per distinct score value, descending
/// thresholds, predicting positive at score >= threshold. Starts at the
/// all-negative corner (0, 0) with an infinite threshold.
pub fn roc_curve(y_true: ArrayView1<f64>, scores: ArrayView1<f64>) -> Result<Vec<RocPoint>> {
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    let n_pos = y_true.iter().filter(|t| **t > 0.0).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if y_true[order[i]] > 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: t,
        });
    }
    Ok(points)
}

/// Writes ROC points as CSV with a `fpr,tpr,threshold` header.
pub fn write_roc_csv<W: std::io::Write>(points: &[RocPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "fpr,tpr,threshold")?;
    for p in points {
        writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
    }
    Ok(())
}

/// Angle between two directions in degrees, in [0, 180]. The cosine is
/// clamped before arccos so parallel vectors cannot produce NaN.
pub fn angle_between(w: ArrayView1<f64>, w_ref: ArrayView1<f64>) -> Result<f64> {
    if w_ref.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: w_ref.len(),
        });
    }
    let nw = w.dot(&w).sqrt();
    let nr = w_ref.dot(&w_ref).sqrt();
    if nw == 0.0 || nr == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = (w.dot(&w_ref) / (nw * nr)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Pooled within-class standard deviation of unit-direction projections over
/// the between-class projection gap (or over 1 if the gap is zero). Near-zero
/// values mean each class has piled onto its own hyperplane.
pub fn piling_index(model: &TrainedModel, ds: &Dataset) -> Result<f64> {
    let norm = model.w.dot(&model.w).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if ds.features.ncols() != model.w.len() {
        return Err(Error::DimensionMismatch {
            expected: model.w.len(),
            got: ds.features.ncols(),
        });
    }
    let s = ds.features.dot(&model.w) / norm;
    let (mut sum_pos, mut n_pos) = (0.0f64, 0usize);
    let (mut sum_neg, mut n_neg) = (0.0f64, 0usize);
    for (si, yi) in s.iter().zip(ds.labels.iter()) {
        if *yi > 0.0 {
            sum_pos += si;
            n_pos += 1;
        } else {
            sum_neg += si;
            n_neg += 1;
        }
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let (m_pos, m_neg) = (sum_pos / n_pos as f64, sum_neg / n_neg as f64);
    let ss: f64 = s
        .iter()
        .zip(ds.labels.iter())
        .map(|(si, yi)| {
            let m = if *yi > 0.0 { m_pos } else { m_neg };
            (si - m) * (si - m)
        })
        .sum();
    let pooled_sd = (ss / s.len() as f64).sqrt();
    let gap = (m_pos - m_neg).abs();
    Ok(pooled_sd / if gap == 0.0 { 1.0 } else { gap })
}
