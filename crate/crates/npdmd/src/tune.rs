//! Hyperparameter selection by stratified k-fold cross-validation over a
//! (lambda-fraction, C0) grid, maximizing mean held-out CCR. Ties go to the
//! smaller lambda-fraction, then the smaller C0, independent of grid order.

use serde::{Deserialize, Serialize};

use crate::classifier::{predict, train_npdmd, Hyperparams};
use crate::dataset::{make_splits, Dataset};
use crate::error::{Error, Result};
use crate::metrics::ccr;

pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.0, 0.3, 0.6, 0.9, 0.99];
pub const DEFAULT_C0_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda_frac: f64,
    pub c0: f64,
}

/// One held-out evaluation: a grid point scored on one fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCell {
    pub lambda_frac: f64,
    pub c0: f64,
    pub fold: usize,
    pub ccr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: GridPoint,
    pub best_mean_ccr: f64,
    pub folds: usize,
    pub seed: u64,
    /// One row per (grid point, fold); k * |grid| rows in total.
    pub table: Vec<CvCell>,
}

/// Scores every (lambda-fraction, C0) pair by mean CCR over k stratified
/// folds and returns the winner with the full fold-by-fold table. `base`
/// supplies the solver settings (tol, max_passes) reused at every point.
pub fn cross_validate(
    ds: &Dataset,
    lambda_grid: &[f64],
    c0_grid: &[f64],
    k: usize,
    seed: u64,
    base: &Hyperparams,
) -> Result<CvOutcome> {
    if lambda_grid.is_empty() || c0_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let plan = make_splits(ds, k, true, seed)?;
    let folds: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            let (train_idx, test_idx) = plan.fold_indices(f);
            (ds.subset(&train_idx), ds.subset(&test_idx))
        })
        .collect();

    let mut table = Vec::with_capacity(lambda_grid.len() * c0_grid.len() * k);
    let mut best: Option<(GridPoint, f64)> = None;
    for &lambda_frac in lambda_grid {
        for &c0 in c0_grid {
            let hp = Hyperparams {
                lambda_frac,
                c0,
                ..base.clone()
            };
            let mut sum = 0.0;
            for (fold, (tr, te)) in folds.iter().enumerate() {
                let model = train_npdmd(tr, &hp)?;
                let (y_pred, _) = predict(&model, &te.features.view())?;
                let fold_ccr = ccr(te.labels.view(), y_pred.view());
                sum += fold_ccr;
                table.push(CvCell {
                    lambda_frac,
                    c0,
                    fold,
                    ccr: fold_ccr,
                });
            }
            let mean = sum / k as f64;
            let point = GridPoint { lambda_frac, c0 };
            let wins = match &best {
                None => true,
                Some((b, m)) => {
                    mean > *m
                        || (mean == *m
                            && (lambda_frac < b.lambda_frac
                                || (lambda_frac == b.lambda_frac && c0 < b.c0)))
                }
            };
            if wins {
                best = Some((point, mean));
            }
        }
    }
    let (best, best_mean_ccr) = best.expect("nonempty grid");
    Ok(CvOutcome {
        best,
        best_mean_ccr,
        folds: k,
        seed,
        table,
    })
}
