//! Reference implementations the integration suite checks the library
//! against. Everything here recomputes results from first principles
//! (dense linear algebra, first-order methods, exhaustive search) and never
//! calls into the code paths under test.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Solves `A X = B` by Gaussian elimination with partial pivoting. Row
/// updates run on contiguous slices so the oracle stays usable at d = 500.
pub fn dense_solve(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let k = b.ncols();
    let mut m: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut x: Vec<Vec<f64>> = b.rows().into_iter().map(|r| r.to_vec()).collect();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        assert!(m[pivot][col].abs() > 1e-300, "singular system");
        m.swap(col, pivot);
        x.swap(col, pivot);
        let (m_top, m_rest) = m.split_at_mut(col + 1);
        let (x_top, x_rest) = x.split_at_mut(col + 1);
        let m_col = &m_top[col];
        let x_col = &x_top[col];
        let diag = m_col[col];
        for (m_row, x_row) in m_rest.iter_mut().zip(x_rest.iter_mut()) {
            let f = m_row[col] / diag;
            if f == 0.0 {
                continue;
            }
            for (dst, src) in m_row[col..].iter_mut().zip(m_col[col..].iter()) {
                *dst -= f * src;
            }
            for (dst, src) in x_row.iter_mut().zip(x_col.iter()) {
                *dst -= f * src;
            }
        }
    }
    for col in (0..n).rev() {
        let diag = m[col][col];
        for j in 0..k {
            x[col][j] /= diag;
        }
        let (x_top, x_rest) = x.split_at_mut(col);
        let x_col = &x_rest[0];
        for (row, x_row) in x_top.iter_mut().enumerate() {
            let f = m[row][col];
            if f == 0.0 {
                continue;
            }
            for (dst, src) in x_row.iter_mut().zip(x_col.iter()) {
                *dst -= f * src;
            }
        }
    }
    Array2::from_shape_fn((n, k), |(i, j)| x[i][j])
}

/// Within-class scatter assembled densely in feature space: the sum of the
/// two per-class biased covariance matrices.
pub fn dense_scatter(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Array2<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let mut s = Array2::zeros((d, d));
    for class in [1.0, -1.0] {
        let rows: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        if rows.is_empty() {
            continue;
        }
        let mut mean = Array1::zeros(d);
        for &i in &rows {
            mean += &x.row(i);
        }
        mean /= rows.len() as f64;
        for &i in &rows {
            let dev = &x.row(i) - &mean;
            for a in 0..d {
                if dev[a] == 0.0 {
                    continue;
                }
                for b in 0..d {
                    s[[a, b]] += dev[a] * dev[b] / rows.len() as f64;
                }
            }
        }
    }
    s
}

/// The dual objective in its maximization form, `sum(alpha) - alpha'H alpha / 2`.
pub fn dual_objective(h: &ArrayView2<f64>, alpha: &ArrayView1<f64>) -> f64 {
    alpha.sum() - 0.5 * alpha.dot(&h.dot(alpha))
}

/// Quadratic term of the soft-margin SVM dual on explicitly centered data:
/// `H_ij = y_i y_j <x_i - xbar, x_j - xbar>`.
pub fn svm_h(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Array2<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let mut mean = Array1::zeros(d);
    for i in 0..n {
        mean += &x.row(i);
    }
    mean /= n as f64;
    let xc = x - &mean;
    let gram = xc.dot(&xc.t());
    Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * gram[[i, j]])
}

/// Euclidean projection onto `{0 <= v <= c0} ∩ {y'v = 0}` by bisection on
/// the hyperplane multiplier; `y'clip(v - tau y)` is nonincreasing in tau.
fn project_box_hyperplane(v: &Array1<f64>, y: &ArrayView1<f64>, c0: f64) -> Array1<f64> {
    let residual = |tau: f64| -> f64 {
        v.iter()
            .zip(y.iter())
            .map(|(vi, yi)| (vi - tau * yi).clamp(0.0, c0) * yi)
            .sum()
    };
    let reach = c0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
    let (mut lo, mut hi) = (-reach, reach);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    Array1::from_iter(
        v.iter()
            .zip(y.iter())
            .map(|(vi, yi)| (vi - tau * yi).clamp(0.0, c0)),
    )
}

/// Accelerated projected gradient (with restart on objective increase) for
/// `max sum(alpha) - alpha'H alpha / 2` over the box-hyperplane polytope.
/// Step size 1/||H||_F is always admissible since the Frobenius norm bounds
/// the spectral norm.
pub fn reference_dual_solve(
    h: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    c0: f64,
) -> Array1<f64> {
    let n = y.len();
    let lip = h.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let mut alpha = project_box_hyperplane(&Array1::zeros(n), y, c0);
    let mut carry = alpha.clone();
    let mut t = 1.0f64;
    let mut best = dual_objective(h, &alpha.view());
    let mut stale = 0usize;
    for _ in 0..200_000 {
        let grad = h.dot(&carry) - 1.0;
        let next = project_box_hyperplane(&(&carry - &(&grad / lip)), y, c0);
        let obj = dual_objective(h, &next.view());
        if obj < best {
            // Restart the momentum; plain projected gradient steps are
            // monotone at this step size.
            carry = next.clone();
            t = 1.0;
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            carry = &next + &((&next - &alpha) * ((t - 1.0) / tn));
            t = tn;
        }
        alpha = next;
        if obj > best + 1e-14 * (1.0 + best.abs()) {
            best = obj;
            stale = 0;
        } else {
            stale += 1;
            if stale > 3_000 {
                break;
            }
        }
    }
    alpha
}

/// Global maximum of the dual objective over the feasible polytope by grid
/// search on the n-1 free coordinates (the last one is pinned by the
/// equality constraint), refined around the incumbent until the step drops
/// to `final_step`. Window shrinkage keeps a three-cell margin each pass.
pub fn grid_qp_max(
    h: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    c0: f64,
    final_step: f64,
) -> f64 {
    let n = y.len();
    assert!(n >= 2);
    let m = n - 1;
    const CELLS: usize = 12;
    let mut lo = vec![0.0f64; m];
    let mut width = vec![c0; m];
    let mut best_obj = f64::NEG_INFINITY;
    let mut best_pt = vec![0.0f64; m];
    loop {
        let steps: Vec<f64> = width.iter().map(|w| w / CELLS as f64).collect();
        let mut idx = vec![0usize; m];
        let mut alpha = Array1::zeros(n);
        'grid: loop {
            let mut partial = 0.0;
            for i in 0..m {
                let v = lo[i] + idx[i] as f64 * steps[i];
                alpha[i] = v;
                partial += y[i] * v;
            }
            let pinned = -partial * y[m];
            if (-1e-12..=c0 + 1e-12).contains(&pinned) {
                alpha[m] = pinned.clamp(0.0, c0);
                let obj = dual_objective(h, &alpha.view());
                if obj > best_obj {
                    best_obj = obj;
                    best_pt = alpha.to_vec()[..m].to_vec();
                }
            }
            for i in 0..m {
                idx[i] += 1;
                if idx[i] <= CELLS {
                    continue 'grid;
                }
                idx[i] = 0;
            }
            break;
        }
        if steps.iter().all(|s| *s <= final_step) {
            return best_obj;
        }
        for i in 0..m {
            let half = 3.0 * steps[i];
            let center = best_pt[i];
            let new_lo = (center - half).max(0.0);
            let new_hi = (center + half).min(c0);
            lo[i] = new_lo;
            width[i] = new_hi - new_lo;
        }
    }
}

/// Intercept oracle: enumerates every open interval between sorted score
/// breakpoints (plus the two unbounded ends), counts errors of
/// `y (s + b) <= 0` at an interior point, and applies the published
/// tie-break in full: fewest errors, then widest interval, then the
/// rightmost one; midpoint representative, one unit past the edge when
/// unbounded.
pub fn intercept_scan(scores: &[f64], labels: &[f64]) -> f64 {
    let n = scores.len();
    assert!(n > 0);
    let mut cuts: Vec<f64> = scores.iter().map(|s| -s).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let count = |b: f64| -> usize {
        (0..n)
            .filter(|&i| labels[i] * (scores[i] + b) <= 0.0)
            .count()
    };
    // Candidate intervals: (-inf, cuts[0]), (cuts[i], cuts[i+1]), (last, inf).
    let mut best: Option<(usize, f64, f64)> = None; // errors, width, midpoint
    let mut consider = |errs: usize, width: f64, mid: f64| {
        let wins = match best {
            None => true,
            Some((be, bw, bm)) => {
                errs < be || (errs == be && (width > bw || (width == bw && mid > bm)))
            }
        };
        if wins {
            best = Some((errs, width, mid));
        }
    };
    let first = cuts[0];
    consider(count(first - 1.0), f64::INFINITY, first - 1.0);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        consider(count(mid), w[1] - w[0], mid);
    }
    let last = *cuts.last().unwrap();
    consider(count(last + 1.0), f64::INFINITY, last + 1.0);
    best.unwrap().2
}

/// Standard-normal matrix with a fixed seed.
pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let normal = StandardNormal;
    Array2::from_shape_fn((rows, cols), |_| Distribution::<f64>::sample(&normal, rng))
}

/// Random two-class dataset with at least two samples per class and a mean
/// offset making it nontrivially separable.
pub fn random_problem(
    seed: u64,
    max_n_per_class: usize,
    d: usize,
    offset: f64,
) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = rng.random_range(2..=max_n_per_class);
    let n_neg = rng.random_range(2..=max_n_per_class);
    let n = n_pos + n_neg;
    let mut x = randn(&mut rng, n, d);
    for i in 0..n_pos {
        for j in 0..d {
            x[[i, j]] += offset;
        }
    }
    let y = Array1::from_shape_fn(n, |i| if i < n_pos { 1.0 } else { -1.0 });
    (x, y)
}
