//! Scalar and matrix primitives shared by every other module: dense
//! row-major matrices, Householder QR with a positive-diagonal convention,
//! the regularized incomplete gamma function, exact binomial coefficients,
//! and the chi-square search-radius solver.

use thiserror::Error;

/// Relative tolerance below which a diagonal entry of R flags rank deficiency.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("rank deficient: |r[{index},{index}]| = {value:e} below tolerance {tol:e}")]
    RankDeficient { index: usize, value: f64, tol: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("binomial overflow: C({n},{k}) exceeds the widest supported integer")]
    Overflow { n: u64, k: u64 },
    #[error("bisection failed to converge after {0} steps")]
    NoConvergence(usize),
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Columns selected by `idx`, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        Mat::from_fn(self.rows, idx.len(), |r, j| self.get(r, idx[j]))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut acc = 0.0;
            for c in 0..self.cols {
                acc += self.get(r, c) * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// Transpose-times-vector, without materializing the transpose.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] += self.get(r, c) * v[r];
            }
        }
        out
    }

    pub fn mat_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// QR factors of an n-by-m matrix, n >= m, with `diag(r) > 0`.
///
/// `q1` holds the first m orthonormal columns, `q2` the trailing n-m, and
/// `r` the m-by-m upper triangle; `[q1 q2] * [r; 0]` reconstructs the input.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q1: Mat,
    pub q2: Mat,
    pub r: Mat,
}

/// Householder QR of a full-column-rank n-by-m matrix (n >= m).
///
/// Signs are absorbed into q so that every diagonal entry of r is strictly
/// positive. Fails with `RankDeficient` when a diagonal falls below
/// `RANK_TOL` times the Frobenius norm of the input.
pub fn qr_decompose(h: &Mat) -> Result<QrFactors, NumericsError> {
    let n = h.rows();
    let m = h.cols();
    if n < m {
        return Err(NumericsError::InvalidArgument(format!(
            "qr_decompose requires n >= m, got {n} x {m}"
        )));
    }
    if !h.all_finite() {
        return Err(NumericsError::InvalidArgument("matrix has non-finite entries".into()));
    }
    let tol = RANK_TOL * h.frobenius_norm();

    let mut a = h.clone();
    let mut q = Mat::identity(n);
    let mut v = vec![0.0; n];

    for k in 0..m {
        let mut norm2 = 0.0;
        for i in k..n {
            let x = a.get(i, k);
            norm2 += x * x;
        }
        let norm = norm2.sqrt();
        if norm > 0.0 {
            let akk = a.get(k, k);
            let alpha = if akk >= 0.0 { -norm } else { norm };
            let mut vnorm2 = 0.0;
            for i in k..n {
                let vi = if i == k { a.get(i, k) - alpha } else { a.get(i, k) };
                v[i] = vi;
                vnorm2 += vi * vi;
            }
            if vnorm2 > 0.0 {
                let beta = 2.0 / vnorm2;
                // A <- A - beta v (v^T A) on columns k..m
                for c in k..m {
                    let mut dot = 0.0;
                    for i in k..n {
                        dot += v[i] * a.get(i, c);
                    }
                    let s = beta * dot;
                    for i in k..n {
                        a.set(i, c, a.get(i, c) - s * v[i]);
                    }
                }
                // Q <- Q - beta (Q v) v^T
                for rr in 0..n {
                    let mut dot = 0.0;
                    for i in k..n {
                        dot += q.get(rr, i) * v[i];
                    }
                    let s = beta * dot;
                    for i in k..n {
                        q.set(rr, i, q.get(rr, i) - s * v[i]);
                    }
                }
            }
        }
        let rkk = a.get(k, k);
        if rkk.abs() < tol {
            return Err(NumericsError::RankDeficient { index: k, value: rkk.abs(), tol });
        }
        if rkk < 0.0 {
            for c in k..m {
                a.set(k, c, -a.get(k, c));
            }
            for rr in 0..n {
                q.set(rr, k, -q.get(rr, k));
            }
        }
    }

    let r = Mat::from_fn(m, m, |i, j| if j >= i { a.get(i, j) } else { 0.0 });
    let q1 = Mat::from_fn(n, m, |i, j| q.get(i, j));
    let q2 = Mat::from_fn(n, n - m, |i, j| q.get(i, m + j));
    Ok(QrFactors { q1, q2, r })
}

/// Least-squares solution of `a x = b` for full-column-rank `a` (rows >= cols).
pub fn least_squares(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    assert_eq!(b.len(), a.rows());
    let qr = qr_decompose(a)?;
    let rhs = qr.q1.t_mul_vec(b);
    solve_upper_triangular(&qr.r, &rhs)
}

/// Back-substitution for an upper-triangular system.
pub fn solve_upper_triangular(r: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let m = r.cols();
    assert_eq!(r.rows(), m);
    assert_eq!(b.len(), m);
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        for j in i + 1..m {
            acc -= r.get(i, j) * x[j];
        }
        let d = r.get(i, i);
        if d == 0.0 {
            return Err(NumericsError::RankDeficient { index: i, value: 0.0, tol: 0.0 });
        }
        x[i] = acc / d;
    }
    Ok(x)
}

// Lanczos g=7, n=9 coefficients; ~1e-14 relative accuracy on ln Gamma.
const LANCZOS: [f64; 8] = [
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut x = 0.99999999999980993;
        for (i, c) in LANCZOS.iter().enumerate() {
            x += c / (z + i as f64 + 1.0);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
    }
}

/// Regularized lower incomplete gamma function P(shape, x).
///
/// Power series for x < shape + 1, Lentz continued fraction otherwise,
/// with a 1e-14 term-ratio stopping rule.
pub fn regularized_gamma(shape: f64, x: f64) -> Result<f64, NumericsError> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(NumericsError::InvalidArgument(format!("shape must be positive, got {shape}")));
    }
    if !(x >= 0.0) {
        return Err(NumericsError::InvalidArgument(format!("x must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefix = shape * x.ln() - x - ln_gamma(shape);
    if log_prefix < -745.0 {
        // prefactor underflows; the CDF is saturated on one side
        return Ok(if x < shape { 0.0 } else { 1.0 });
    }
    if x < shape + 1.0 {
        // series: P = prefix * sum_{n>=0} x^n / (shape (shape+1) ... (shape+n))
        let mut ap = shape;
        let mut term = 1.0 / shape;
        let mut sum = term;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-14 {
                break;
            }
        }
        Ok((log_prefix.exp() * sum).clamp(0.0, 1.0))
    } else {
        // modified Lentz continued fraction for Q = 1 - P
        const FPMIN: f64 = 1e-300;
        let mut b = x + 1.0 - shape;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - shape);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-14 {
                break;
            }
        }
        Ok((1.0 - log_prefix.exp() * h).clamp(0.0, 1.0))
    }
}

/// Exact binomial coefficient C(n, k) in a wide integer.
///
/// Returns 0 when k is out of range, so guard clauses in the counting
/// formulas collapse without special-casing. Errors only on true overflow.
pub fn binomial(n: u64, k: i64) -> Result<u128, NumericsError> {
    if k < 0 || k as u64 > n {
        return Ok(0);
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or(NumericsError::Overflow { n, k })?
            / i as u128;
    }
    Ok(acc)
}

/// Signed-argument convenience wrapper; any negative n yields 0.
pub fn binomial_i(n: i64, k: i64) -> Result<u128, NumericsError> {
    if n < 0 {
        return Ok(0);
    }
    binomial(n as u64, k)
}

/// Search radius d^2 = alpha * n * sigma2 where alpha solves
/// `regularized_gamma(n/2, alpha*n/2) = one_minus_eps`, by bisection to a
/// relative tolerance of 1e-10 on alpha.
pub fn choose_radius(n: usize, sigma2: f64, one_minus_eps: f64) -> Result<f64, NumericsError> {
    if n < 1 {
        return Err(NumericsError::InvalidArgument("dimension must be >= 1".into()));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(NumericsError::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if !(one_minus_eps > 0.0 && one_minus_eps < 1.0) {
        return Err(NumericsError::InvalidArgument(format!(
            "probability must lie in (0,1), got {one_minus_eps}"
        )));
    }
    let shape = n as f64 / 2.0;
    let half_n = n as f64 / 2.0;
    let cdf = |alpha: f64| regularized_gamma(shape, alpha * half_n);

    let mut hi = 1.0;
    let mut steps = 0usize;
    while cdf(hi)? < one_minus_eps {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(NumericsError::NoConvergence(steps));
        }
    }
    let mut lo = 0.0;
    for step in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < one_minus_eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            let alpha = 0.5 * (lo + hi);
            return Ok(alpha * n as f64 * sigma2);
        }
        let _ = step;
    }
    Err(NumericsError::NoConvergence(200))
}
