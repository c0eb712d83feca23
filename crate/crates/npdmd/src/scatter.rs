//! Within-class scatter kept in factored form.
//!
//! For n samples in d dimensions the scatter is `S_W = B^T K B` where row i
//! of `B` is the deviation of sample i from its class mean and `K` is the
//! diagonal of reciprocal class sizes. With d much larger than n, `S_W` is
//! never materialized: the largest eigenvalue comes from the n x n matrix
//! `K^(1/2) B B^T K^(1/2)`, and `(I - lambda S_W)^-1` is applied through the
//! Sherman-Morrison-Woodbury identity
//!
//! `(I - lambda B^T K B)^-1 V = V + B^T M^-1 B V`
//!
//! with `M = (1/lambda) K^-1 - B B^T`, which is positive definite exactly on
//! the admissible range `0 < lambda < 1 / lambda_max(S_W)`. Only n x n
//! systems are factored.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, sym_eigenvalues};

#[derive(Debug, Clone)]
pub struct ScatterModel {
    /// Mean of the +1 class.
    pub mean_pos: Array1<f64>,
    /// Mean of the -1 class.
    pub mean_neg: Array1<f64>,
    /// Class-mean deviations, one row per sample, dataset order.
    pub b: Array2<f64>,
    /// Reciprocal class size per sample: 1/n_+ or 1/n_-.
    pub k_diag: Array1<f64>,
    /// Largest eigenvalue of S_W; zero when every deviation vanishes.
    pub lambda_max: f64,
    bbt: Array2<f64>,
}

/// Reusable application of `(I - lambda S_W)^-1`; factors the inner n x n
/// system once so repeated right-hand sides cost O(n^2) each plus products
/// with `B`.
pub struct SmwOperator<'a> {
    scatter: &'a ScatterModel,
    lambda: f64,
    // None when lambda = 0 and the operator is the identity.
    chol: Option<Array2<f64>>,
}

pub fn build_scatter(ds: &Dataset) -> Result<ScatterModel> {
    let n = ds.n();
    let d = ds.dim();
    let n_pos = ds.n_pos();
    let n_neg = ds.n_neg();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut mean_pos = Array1::<f64>::zeros(d);
    let mut mean_neg = Array1::<f64>::zeros(d);
    for i in 0..n {
        if ds.labels[i] > 0.0 {
            mean_pos += &ds.features.row(i);
        } else {
            mean_neg += &ds.features.row(i);
        }
    }
    mean_pos /= n_pos as f64;
    mean_neg /= n_neg as f64;

    let mut b = Array2::<f64>::zeros((n, d));
    let mut k_diag = Array1::<f64>::zeros(n);
    for i in 0..n {
        let (mean, count) = if ds.labels[i] > 0.0 {
            (&mean_pos, n_pos)
        } else {
            (&mean_neg, n_neg)
        };
        let mut row = b.row_mut(i);
        row.assign(&ds.features.row(i));
        row -= mean;
        k_diag[i] = 1.0 / count as f64;
    }

    let bbt = b.dot(&b.t());
    // K^(1/2) B B^T K^(1/2) shares its spectrum with B^T K B = S_W.
    let sqrt_k = k_diag.mapv(f64::sqrt);
    let mut scaled = bbt.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= sqrt_k[i] * sqrt_k[j];
        }
    }
    let lambda_max = sym_eigenvalues(&scaled.view())[0].max(0.0);

    Ok(ScatterModel {
        mean_pos,
        mean_neg,
        b,
        k_diag,
        lambda_max,
        bbt,
    })
}

/// Upper end of the admissible lambda range. Infinite when the scatter is
/// zero (for example one sample per class), in which case any lambda >= 0 is
/// admissible and the operator is the identity.
pub fn lambda_bound(sm: &ScatterModel) -> f64 {
    if sm.lambda_max > 0.0 {
        1.0 / sm.lambda_max
    } else {
        f64::INFINITY
    }
}

impl ScatterModel {
    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.b.ncols()
    }

    /// Lower Cholesky factor of `(1/lambda) K^-1 - B B^T`, or `None` when
    /// lambda = 0 and no system needs solving. Checks the admissible range.
    pub(crate) fn smw_chol(&self, lambda: f64) -> Result<Option<Array2<f64>>> {
        let bound = lambda_bound(self);
        if !(lambda >= 0.0) || lambda >= bound {
            return Err(Error::LambdaOutOfRange { lambda, bound });
        }
        if lambda == 0.0 {
            return Ok(None);
        }
        let n = self.n();
        let mut m = -&self.bbt;
        for i in 0..n {
            m[(i, i)] += 1.0 / (lambda * self.k_diag[i]);
        }
        let chol = match cholesky(&m.view()) {
            Some(l) => l,
            None => {
                // borderline lambda near the bound: nudge the diagonal
                let jitter = 1e-10 * m.diag().sum() / n as f64;
                for i in 0..n {
                    m[(i, i)] += jitter;
                }
                cholesky(&m.view()).ok_or(Error::LambdaOutOfRange { lambda, bound })?
            }
        };
        Ok(Some(chol))
    }

    /// Factors the inner system for the given lambda.
    pub fn smw_operator(&self, lambda: f64) -> Result<SmwOperator<'_>> {
        Ok(SmwOperator {
            scatter: self,
            lambda,
            chol: self.smw_chol(lambda)?,
        })
    }
}

impl SmwOperator<'_> {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Applies the inverse to a d x m block of columns.
    pub fn apply(&self, v: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(
            v.nrows(),
            self.scatter.dim(),
            "column block must live in feature space"
        );
        match &self.chol {
            None => v.to_owned(),
            Some(l) => {
                let bv = self.scatter.b.dot(v);
                let z = cholesky_solve(l, &bv.view());
                let mut out = v.to_owned();
                out += &self.scatter.b.t().dot(&z);
                out
            }
        }
    }

    pub fn apply_vec(&self, v: &ArrayView1<f64>) -> Array1<f64> {
        let col = v.view().insert_axis(Axis(1));
        let out = self.apply(&col);
        out.index_axis(Axis(1), 0).to_owned()
    }
}

/// One-shot form of the operator: `(I - lambda S_W)^-1 v` for a column block.
pub fn smw_apply(sm: &ScatterModel, lambda: f64, v: &ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(sm.smw_operator(lambda)?.apply(v))
}
