//! Orthogonal matching pursuit for the relaxed sparse least-squares lower
//! bound, and the decoder variant that prunes with it.
//!
//! The pruning value is the unrounded OMP objective. OMP is greedy, so the
//! value is a heuristic bound: `decode_sparse_lb` therefore exposes a
//! safe mode that skips it and falls back to sphere-plus-sparsity pruning
//! only. Both the rounded and unrounded values are available through
//! [`lower_bound_audit`] so the pruning rule can be audited empirically.

use crate::model::Alphabet;
use crate::numerics::{least_squares, Mat};

pub use crate::decoder::{decode_sparse_lb, decode_sparse_lb_with, DEFAULT_GUARD_THRESHOLD};

/// Greedy sparse approximation result.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Selected column indices, in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients on the support, same order.
    pub coeffs: Vec<f64>,
    pub residual2: f64,
}

impl OmpResult {
    /// Dense solution vector of the given length.
    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut x = vec![0.0; len];
        for (&j, &c) in self.support.iter().zip(&self.coeffs) {
            x[j] = c;
        }
        x
    }
}

const OMP_IMPROVEMENT_TOL: f64 = 1e-12;

/// Standard orthogonal matching pursuit: greedily add the column with the
/// largest norm-scaled correlation against the running residual, re-solve
/// least squares on the support, and stop at `budget` atoms or when the
/// squared-residual improvement drops below 1e-12. Ties resolve to the
/// smallest column index; zero columns are skipped.
pub fn omp_solve(a: &Mat, w: &[f64], budget: usize) -> OmpResult {
    assert_eq!(w.len(), a.rows());
    let q = a.cols();
    let col_norm2: Vec<f64> = (0..q)
        .map(|j| (0..a.rows()).map(|i| a.get(i, j) * a.get(i, j)).sum())
        .collect();
    let mut residual = w.to_vec();
    let mut res2: f64 = residual.iter().map(|v| v * v).sum();
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();

    for _ in 0..budget.min(q) {
        let mut best_j = usize::MAX;
        let mut best_score = 0.0;
        for j in 0..q {
            if col_norm2[j] == 0.0 || support.contains(&j) {
                continue;
            }
            let corr: f64 = (0..a.rows()).map(|i| a.get(i, j) * residual[i]).sum();
            let score = corr.abs() / col_norm2[j].sqrt();
            if score > best_score {
                best_score = score;
                best_j = j;
            }
        }
        if best_j == usize::MAX || best_score == 0.0 {
            break;
        }
        support.push(best_j);
        let sub = a.select_cols(&support);
        let c = match least_squares(&sub, w) {
            Ok(c) => c,
            Err(_) => {
                support.pop();
                break;
            }
        };
        let fit = sub.mul_vec(&c);
        let mut new_res2 = 0.0;
        for i in 0..w.len() {
            let d = w[i] - fit[i];
            new_res2 += d * d;
        }
        if res2 - new_res2 < OMP_IMPROVEMENT_TOL {
            support.pop();
            break;
        }
        for i in 0..w.len() {
            residual[i] = w[i] - fit[i];
        }
        res2 = new_res2;
        coeffs = c;
    }
    OmpResult { support, coeffs, residual2: res2.max(0.0) }
}

/// Relaxed tail bound for a partially fixed search point. `x_suffix` holds
/// the already-chosen trailing components; the remaining sparsity budget is
/// `l_tilde`. Returns the unrounded OMP objective of the relaxed problem on
/// the leading triangular block; never negative.
pub fn lower_bound(
    z: &[f64],
    r: &Mat,
    x_suffix: &[i64],
    l_tilde: usize,
    _alphabet: &Alphabet,
) -> f64 {
    let (w, block) = tail_system(z, r, x_suffix);
    if l_tilde == 0 {
        return w.iter().map(|v| v * v).sum();
    }
    omp_solve(&block, &w, l_tilde).residual2
}

/// Both candidate pruning values: the unrounded OMP objective and the value
/// after rounding each entry of the relaxed solution to the nearest
/// alphabet symbol. Rounding can only raise the value, so the unrounded
/// number is the one used for pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundAudit {
    pub unrounded: f64,
    pub rounded: f64,
}

pub fn lower_bound_audit(
    z: &[f64],
    r: &Mat,
    x_suffix: &[i64],
    l_tilde: usize,
    alphabet: &Alphabet,
) -> LowerBoundAudit {
    let (w, block) = tail_system(z, r, x_suffix);
    if l_tilde == 0 {
        let v: f64 = w.iter().map(|x| x * x).sum();
        return LowerBoundAudit { unrounded: v, rounded: v };
    }
    let omp = omp_solve(&block, &w, l_tilde);
    let dense = omp.dense(block.cols());
    let rounded_x: Vec<f64> = dense.iter().map(|&v| alphabet.nearest(v) as f64).collect();
    let fit = block.mul_vec(&rounded_x);
    let rounded = w.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    LowerBoundAudit { unrounded: omp.residual2, rounded }
}

/// w = z_head - R_head_tail * x_suffix and the leading triangular block.
fn tail_system(z: &[f64], r: &Mat, x_suffix: &[i64]) -> (Vec<f64>, Mat) {
    let m = r.cols();
    assert!(x_suffix.len() <= m);
    let p = m - x_suffix.len();
    let mut w = Vec::with_capacity(p);
    for row in 0..p {
        let mut acc = z[row];
        for (t, &s) in x_suffix.iter().enumerate() {
            if s != 0 {
                acc -= s as f64 * r.get(row, p + t);
            }
        }
        w.push(acc);
    }
    let block = Mat::from_fn(p, p, |i, j| r.get(i, j));
    (w, block)
}

/// Gram-domain evaluation of the same OMP objective, used per node inside
/// the decoder where the Gram matrix and the correlations are maintained
/// incrementally. `b[j] = a_j . w` for the leading `b.len()` columns and
/// `res0 = ||w||^2`; selection and stopping rules match [`omp_solve`].
pub(crate) fn omp_residual2_gram(g: &Mat, b: &[f64], res0: f64, budget: usize) -> f64 {
    let p = b.len();
    let mut support: Vec<usize> = Vec::with_capacity(budget.min(p));
    let mut coef: Vec<f64> = Vec::new();
    let mut res2 = res0;
    for _ in 0..budget.min(p) {
        let mut best_j = usize::MAX;
        let mut best_score = 0.0;
        for j in 0..p {
            if support.contains(&j) {
                continue;
            }
            let njj = g.get(j, j);
            if njj == 0.0 {
                continue;
            }
            let mut corr = b[j];
            for (t, &sj) in support.iter().enumerate() {
                corr -= coef[t] * g.get(j, sj);
            }
            let score = corr.abs() / njj.sqrt();
            if score > best_score {
                best_score = score;
                best_j = j;
            }
        }
        if best_j == usize::MAX || best_score == 0.0 {
            break;
        }
        support.push(best_j);
        let s = support.len();
        let mut gs = vec![0.0; s * s];
        let mut bs = vec![0.0; s];
        for (r1, &j1) in support.iter().enumerate() {
            bs[r1] = b[j1];
            for (r2, &j2) in support.iter().enumerate() {
                gs[r1 * s + r2] = g.get(j1, j2);
            }
        }
        let c = match solve_dense_small(&mut gs, &mut bs) {
            Some(c) => c,
            None => {
                support.pop();
                break;
            }
        };
        let dot: f64 = support.iter().zip(&c).map(|(&j, &cj)| cj * b[j]).sum();
        let new_res2 = (res0 - dot).max(0.0);
        if res2 - new_res2 < OMP_IMPROVEMENT_TOL {
            support.pop();
            break;
        }
        res2 = new_res2;
        coef = c;
    }
    res2
}

/// Rough per-evaluation operation count for the Gram-domain bound, charged
/// to the decoder's flop counter.
pub(crate) fn bound_flop_estimate(p: usize, budget: usize) -> u64 {
    let p = p as u64;
    let b = budget as u64;
    3 * p + b * p * (b + 3) / 2 + b * b * b
}

/// Gaussian elimination with partial pivoting for the small normal systems
/// inside the Gram-domain OMP. Returns None on a vanishing pivot.
fn solve_dense_small(a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    let nn = b.len();
    debug_assert_eq!(a.len(), nn * nn);
    for col in 0..nn {
        let mut piv = col;
        let mut piv_abs = a[col * nn + col].abs();
        for row in col + 1..nn {
            let v = a[row * nn + col].abs();
            if v > piv_abs {
                piv = row;
                piv_abs = v;
            }
        }
        if piv_abs < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..nn {
                a.swap(col * nn + c, piv * nn + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * nn + col];
        for row in col + 1..nn {
            let f = a[row * nn + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..nn {
                a[row * nn + c] -= f * a[col * nn + c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; nn];
    for row in (0..nn).rev() {
        let mut acc = b[row];
        for c in row + 1..nn {
            acc -= a[row * nn + c] * x[c];
        }
        x[row] = acc / a[row * nn + row];
    }
    Some(x)
}
