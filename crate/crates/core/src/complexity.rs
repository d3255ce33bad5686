//! Closed-form expected complexity of the sparsity-aware search (per-level
//! expected node counts for binary and ternary alphabets, the
//! sparsity-unaware upper bound, cost model and complexity exponent) plus
//! the second-moment machinery: solution-pair counting and a Monte Carlo
//! variance estimate.

use crate::decoder::{decode_sparse_fp, default_cost, DecodeError};
use crate::model::{
    generate_instance, prefix_prior_binary, prefix_prior_ternary, sigma2_for_snr, trial_seed,
    GenSpec, ModelError,
};
use crate::numerics::{binomial, binomial_i, choose_radius, regularized_gamma, NumericsError};
use crate::parallel::par_map;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("unsupported alphabet {0:?} for closed-form evaluation")]
    UnsupportedAlphabet(String),
}

/// Number of binary k-vectors of weight k2 at squared distance eta from a
/// fixed binary k-vector of weight k1. Off-lattice or out-of-range
/// arguments yield 0.
pub fn count_binary(k1: usize, k2: usize, k: usize, eta: i64) -> u128 {
    if k1 > k || k2 > k || eta < 0 {
        return 0;
    }
    let (k1i, k2i) = (k1 as i64, k2 as i64);
    let num = eta - (k2i - k1i).abs();
    if num < 0 || num % 2 != 0 {
        return 0;
    }
    let (p, q) = if k1 < k2 {
        let p = (eta - (k2i - k1i)) / 2;
        (p, k as i64 - k2i - p)
    } else {
        let q = (eta - (k1i - k2i)) / 2;
        (k2i - q, q)
    };
    let a = binomial(k1 as u64, p).unwrap_or(0);
    let b = binomial((k - k1) as u64, q).unwrap_or(0);
    a.saturating_mul(b)
}

/// Placement counts of a candidate ternary vector against a fixed one:
/// `counts[i][j]` is the number of positions where the fixed vector holds
/// symbol i-1 and the candidate holds symbol j-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PMatrix {
    counts: [[usize; 3]; 3],
}

impl PMatrix {
    pub fn new(counts: [[usize; 3]; 3]) -> Self {
        Self { counts }
    }

    #[inline]
    pub fn get(&self, i: i64, j: i64) -> usize {
        self.counts[(i + 1) as usize][(j + 1) as usize]
    }

    fn set(&mut self, i: i64, j: i64, v: usize) {
        self.counts[(i + 1) as usize][(j + 1) as usize] = v;
    }

    /// Squared distance implied by the placements.
    pub fn eta(&self) -> i64 {
        let mut acc = 0i64;
        for i in -1..=1i64 {
            for j in -1..=1i64 {
                acc += self.get(i, j) as i64 * (i - j) * (i - j);
            }
        }
        acc
    }

    fn row_sum(&self, i: i64) -> usize {
        (-1..=1).map(|j| self.get(i, j)).sum()
    }

    fn candidate_weight(&self) -> usize {
        (-1..=1)
            .flat_map(|i| [(i, -1i64), (i, 1i64)])
            .map(|(i, j)| self.get(i, j))
            .sum()
    }
}

/// Count of ternary candidates consistent with the placement matrix, for a
/// fixed vector with suffix weight k1 of which `a` entries are +1 and a
/// candidate weight k2. Inconsistent matrices yield 0.
pub fn count_ternary(k1: usize, k2: usize, k: usize, a: usize, p: &PMatrix) -> u128 {
    if k1 > k || k2 > k || a > k1 {
        return 0;
    }
    if p.row_sum(1) != a || p.row_sum(-1) != k1 - a || p.row_sum(0) != k - k1 {
        return 0;
    }
    if p.candidate_weight() != k2 {
        return 0;
    }
    let choose = |n: i64, r: i64| binomial_i(n, r).unwrap_or(0);
    let p10 = p.get(1, 0) as i64;
    let p1m1 = p.get(1, -1) as i64;
    let pm10 = p.get(-1, 0) as i64;
    let pm11 = p.get(-1, 1) as i64;
    let zeros_filled = p.get(0, 1) + p.get(0, -1);
    let (ai, k1i, ki, k2i) = (a as i64, k1 as i64, k as i64, k2 as i64);
    if k1 <= k2 {
        let fill = k2i - (k1i - pm10 - p10);
        if fill < 0 || fill as usize != zeros_filled {
            return 0;
        }
        let v = choose(ai, p10)
            .saturating_mul(choose(ai - p10, p1m1))
            .saturating_mul(choose(k1i - ai, pm10))
            .saturating_mul(choose(k1i - ai - pm10, pm11))
            .saturating_mul(choose(ki - k1i, fill));
        v.saturating_mul(1u128 << fill.min(120))
    } else {
        let pp = zeros_filled as i64;
        let p11 = p.get(1, 1) as i64;
        let tail = k2i - (pp + p1m1 + p11 + pm11);
        if tail < 0 {
            return 0;
        }
        let v = choose(ki - k1i, pp)
            .saturating_mul(choose(ai, p1m1))
            .saturating_mul(choose(ai - p1m1, p11))
            .saturating_mul(choose(k1i - ai, pm11))
            .saturating_mul(choose(k1i - ai - pm11, tail));
        v.saturating_mul(1u128 << pp.min(120))
    }
}

/// All placement matrices consistent with (k1, k2, k, a). Candidate symbols
/// written over the zero positions of the fixed vector are tracked only in
/// aggregate (the 2^p sign choices live in the count), so a canonical split
/// is used for that cell.
pub fn ternary_p_matrices(k1: usize, k2: usize, k: usize, a: usize) -> Vec<PMatrix> {
    let mut out = Vec::new();
    if k1 > k || k2 > k || a > k1 {
        return out;
    }
    let am = k1 - a; // number of -1 entries in the fixed suffix
    let zeros = k - k1;
    let mut push = |p10: usize, p1m1: usize, pm10: usize, pm11: usize, pp: usize| {
        let p11 = a - p10 - p1m1;
        let pm1m1 = am - pm10 - pm11;
        let p00 = zeros - pp;
        let mut m = PMatrix::new([[0; 3]; 3]);
        m.set(1, 0, p10);
        m.set(1, -1, p1m1);
        m.set(1, 1, p11);
        m.set(-1, 0, pm10);
        m.set(-1, 1, pm11);
        m.set(-1, -1, pm1m1);
        m.set(0, 1, pp);
        m.set(0, -1, 0);
        m.set(0, 0, p00);
        out.push(m);
    };
    if k1 <= k2 {
        for p10 in 0..=a {
            for p1m1 in 0..=(a - p10) {
                for pm10 in 0..=am {
                    for pm11 in 0..=(am - pm10) {
                        let fixed_nz = k1 - pm10 - p10;
                        if k2 < fixed_nz {
                            continue;
                        }
                        let pp = k2 - fixed_nz;
                        if pp > zeros {
                            continue;
                        }
                        push(p10, p1m1, pm10, pm11, pp);
                    }
                }
            }
        }
    } else {
        for pp in 0..=zeros.min(k2) {
            for p1m1 in 0..=a.min(k2 - pp) {
                for p11 in 0..=(a - p1m1).min(k2 - pp - p1m1) {
                    for pm11 in 0..=am.min(k2 - pp - p1m1 - p11) {
                        let pm1m1 = k2 - pp - p1m1 - p11 - pm11;
                        if pm1m1 > am - pm11 {
                            continue;
                        }
                        let p10 = a - p1m1 - p11;
                        let pm10 = am - pm11 - pm1m1;
                        push(p10, p1m1, pm10, pm11, pp);
                    }
                }
            }
        }
    }
    out
}

fn gamma_by_eta(shape: f64, d2: f64, sigma2: f64, max_eta: usize) -> Result<Vec<f64>, NumericsError> {
    (0..=max_eta)
        .map(|eta| regularized_gamma(shape, d2 / (2.0 * (sigma2 + eta as f64))))
        .collect()
}

fn expected_nodes_binary_inner(
    m: usize,
    n: usize,
    k: usize,
    l: usize,
    k2_max: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    assert!(k >= 1 && k <= m && m <= n && l <= m);
    let shape = (n - m + k) as f64 / 2.0;
    let gam = gamma_by_eta(shape, d2, sigma2, k)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k3 in 0..=l as i64 {
        let k1_lo = (k3 - (m - k) as i64).max(0);
        for k1 in k1_lo..=k3.min(k as i64) {
            let w = prefix_prior_binary(m, k, k1, k3)? as f64;
            if w == 0.0 {
                continue;
            }
            den += w;
            let mut inner = 0.0;
            for k2 in 0..=k2_max.min(k) {
                let diff = (k1 - k2 as i64).unsigned_abs() as usize;
                let hi = (k1 as usize + k2).min(k);
                let mut eta = diff;
                while eta <= hi {
                    let g = count_binary(k1 as usize, k2, k, eta as i64);
                    if g != 0 {
                        inner += gam[eta] * g as f64;
                    }
                    eta += 2;
                }
            }
            num += w * inner;
        }
    }
    Ok(num / den)
}

/// Expected number of level-k nodes satisfying both the sphere and the
/// sparsity constraint, for a binary alphabet, averaged over the channel,
/// the noise, and the uniform l-sparse prior.
pub fn expected_nodes_binary(
    m: usize,
    n: usize,
    k: usize,
    l: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    expected_nodes_binary_inner(m, n, k, l, l, sigma2, d2)
}

/// Same channel and prior (the truth is still l_true-sparse) but the
/// decoder ignores sparsity, so candidates range over every weight. This
/// dominates [`expected_nodes_binary`] pointwise.
pub fn expected_nodes_unaware(
    m: usize,
    n: usize,
    k: usize,
    l_true: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    expected_nodes_binary_inner(m, n, k, l_true, k, sigma2, d2)
}

fn expected_nodes_ternary_inner(
    m: usize,
    n: usize,
    k: usize,
    l: usize,
    k2_max: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    assert!(k >= 1 && k <= m && m <= n && l <= m);
    let shape = (n - m + k) as f64 / 2.0;
    let gam = gamma_by_eta(shape, d2, sigma2, 4 * k)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k3 in 0..=l as i64 {
        let k1_lo = (k3 - (m - k) as i64).max(0);
        for k1 in k1_lo..=k3.min(k as i64) {
            for a in 0..=k1 {
                let w = prefix_prior_ternary(m, k, k1, k3, a)? as f64;
                if w == 0.0 {
                    continue;
                }
                den += w;
                let mut inner = 0.0;
                for k2 in 0..=k2_max.min(k) {
                    for p in ternary_p_matrices(k1 as usize, k2, k, a as usize) {
                        let g = count_ternary(k1 as usize, k2, k, a as usize, &p);
                        if g != 0 {
                            inner += gam[p.eta() as usize] * g as f64;
                        }
                    }
                }
                num += w * inner;
            }
        }
    }
    Ok(num / den)
}

/// Ternary-alphabet analogue of [`expected_nodes_binary`].
pub fn expected_nodes_ternary(
    m: usize,
    n: usize,
    k: usize,
    l: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    expected_nodes_ternary_inner(m, n, k, l, l, sigma2, d2)
}

/// Ternary-alphabet analogue of [`expected_nodes_unaware`].
pub fn expected_nodes_ternary_unaware(
    m: usize,
    n: usize,
    k: usize,
    l_true: usize,
    sigma2: f64,
    d2: f64,
) -> Result<f64, ComplexityError> {
    expected_nodes_ternary_inner(m, n, k, l_true, k, sigma2, d2)
}

/// Total cost C = sum_k f(k) e_nk[k] and the complexity exponent
/// e_c = log C / log m, with a -inf sentinel when C = 0.
pub fn total_cost(e_nk: &[f64], f: impl Fn(usize) -> f64) -> (f64, f64) {
    let m = e_nk.len();
    let c: f64 = e_nk.iter().enumerate().map(|(i, &e)| f(i + 1) * e).sum();
    let e_c = if c == 0.0 { f64::NEG_INFINITY } else { c.ln() / (m as f64).ln() };
    (c, e_c)
}

/// Per-level expected counts with total cost and exponent.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub alphabet: String,
    pub sigma2: f64,
    pub d2: f64,
    pub e_nk: Vec<f64>,
    pub total_cost: f64,
    pub exponent: f64,
    pub variance_mc: Option<VarianceEstimate>,
}

#[derive(Debug, Clone, Copy)]
pub enum AlphabetKind {
    Binary,
    Ternary,
}

impl AlphabetKind {
    pub fn from_name(name: &str) -> Result<Self, ComplexityError> {
        match name {
            "binary01" => Ok(AlphabetKind::Binary),
            "ternary" => Ok(AlphabetKind::Ternary),
            other => Err(ComplexityError::UnsupportedAlphabet(other.to_string())),
        }
    }
}

/// Per-level expected counts for the sparsity-aware search.
pub fn expected_profile(
    kind: AlphabetKind,
    m: usize,
    n: usize,
    l: usize,
    sigma2: f64,
    d2: f64,
) -> Result<Vec<f64>, ComplexityError> {
    (1..=m)
        .map(|k| match kind {
            AlphabetKind::Binary => expected_nodes_binary(m, n, k, l, sigma2, d2),
            AlphabetKind::Ternary => expected_nodes_ternary(m, n, k, l, sigma2, d2),
        })
        .collect()
}

/// Per-level expected counts for the classical, sparsity-unaware search
/// over the same l_true-sparse truth.
pub fn unaware_profile(
    kind: AlphabetKind,
    m: usize,
    n: usize,
    l_true: usize,
    sigma2: f64,
    d2: f64,
) -> Result<Vec<f64>, ComplexityError> {
    (1..=m)
        .map(|k| match kind {
            AlphabetKind::Binary => expected_nodes_unaware(m, n, k, l_true, sigma2, d2),
            AlphabetKind::Ternary => expected_nodes_ternary_unaware(m, n, k, l_true, sigma2, d2),
        })
        .collect()
}

impl ComplexityReport {
    pub fn build(
        kind: AlphabetKind,
        m: usize,
        n: usize,
        l: usize,
        sigma2: f64,
        d2: f64,
    ) -> Result<Self, ComplexityError> {
        let e_nk = expected_profile(kind, m, n, l, sigma2, d2)?;
        let (c, e_c) = total_cost(&e_nk, |k| default_cost(k) as f64);
        Ok(ComplexityReport {
            m,
            n,
            l,
            alphabet: match kind {
                AlphabetKind::Binary => "binary01".into(),
                AlphabetKind::Ternary => "ternary".into(),
            },
            sigma2,
            d2,
            e_nk,
            total_cost: c,
            exponent: e_c,
            variance_mc: None,
        })
    }
}

/// Number of solution pairs (x_b, x_c) with the given weight, overlap and
/// alignment statistics, for dimensions k and l and per-point sparsity
/// budget l_prime. Out-of-range tuples yield 0; for k > l the roles of the
/// two dimensions swap.
#[allow(clippy::too_many_arguments)]
pub fn pair_count(
    k: usize,
    l: usize,
    l_prime: usize,
    beta: i64,
    eta: i64,
    gamma: i64,
    a: i64,
    u: i64,
    v: i64,
) -> u128 {
    let (k, l) = if k <= l { (k, l) } else { (l, k) };
    if beta < 0 || eta < 0 || gamma < 0 || a < 0 || u < 0 || v < 0 {
        return 0;
    }
    if beta > (k.min(2 * l_prime)) as i64 || eta > (l.min(2 * l_prime)) as i64 {
        return 0;
    }
    let delta = u + v;
    let choose = |n: i64, r: i64| binomial_i(n, r).unwrap_or(0);
    let c = choose((l - k) as i64, eta - gamma)
        .saturating_mul(choose(k as i64, gamma))
        .saturating_mul(choose(gamma, a))
        .saturating_mul(choose(a, u))
        .saturating_mul(choose(gamma - a, v))
        .saturating_mul(choose(k as i64 - gamma, beta - delta));
    if c == 0 {
        return 0;
    }
    let shift = (eta - gamma) + (beta - delta);
    if shift < 0 || shift > 120 {
        return 0;
    }
    c.saturating_mul(1u128 << shift)
}

/// Joint in-sphere probability for the coincident-pair case.
pub fn joint_prob_equal(d2: f64, sigma2: f64, x_c_norm2: f64, l: usize) -> Result<f64, NumericsError> {
    if d2 == 0.0 {
        return Ok(0.0);
    }
    regularized_gamma(l as f64 / 2.0, d2 / (2.0 * (sigma2 + x_c_norm2)))
}

/// How the fixed radius for [`variance_mc`] is chosen.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum D2Mode {
    /// Chi-square quantile at the given probability.
    ChiSquareQuantile(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    /// Jackknife standard error of the variance estimate.
    pub stderr: f64,
    pub mean_cost: f64,
    pub mean_cost_stderr: f64,
    /// First-moment cross-check from the closed-form expected counts, when
    /// the alphabet admits one.
    pub analytic_mean_cost: Option<f64>,
    pub d2: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of the complexity variance at fixed radius: sample
/// variance of the per-trial cost with a jackknife standard error, plus the
/// analytic mean cost for a first-moment cross-check.
pub fn variance_mc(
    spec: &GenSpec,
    trials: usize,
    d2_mode: D2Mode,
    workers: Option<usize>,
) -> Result<VarianceEstimate, ComplexityError> {
    assert!(trials >= 3);
    let sigma2 = sigma2_for_snr(spec)?;
    let d2 = match d2_mode {
        D2Mode::ChiSquareQuantile(p) => choose_radius(spec.n, sigma2, p)?,
        D2Mode::Fixed(v) => v,
    };
    let costs: Vec<Result<f64, String>> = par_map(trials, workers, |t| {
        let mut s = spec.clone();
        s.seed = trial_seed(spec.seed, t as u64);
        let (inst, _) = generate_instance(&s).map_err(|e| e.to_string())?;
        let out = decode_sparse_fp(&inst, d2).map_err(|e| e.to_string())?;
        Ok(out.stats.flops as f64)
    });
    let costs: Vec<f64> = costs.into_iter().collect::<Result<_, _>>().map_err(ModelError::InvalidInstance)?;

    let n = costs.len() as f64;
    let s1: f64 = costs.iter().sum();
    let s2: f64 = costs.iter().map(|c| c * c).sum();
    let mean = s1 / n;
    let variance = (s2 - s1 * s1 / n) / (n - 1.0);
    // leave-one-out variances for the jackknife
    let mut jack = Vec::with_capacity(costs.len());
    for &c in &costs {
        let s1i = s1 - c;
        let s2i = s2 - c * c;
        let ni = n - 1.0;
        jack.push((s2i - s1i * s1i / ni) / (ni - 1.0));
    }
    let jmean: f64 = jack.iter().sum::<f64>() / n;
    let stderr = ((n - 1.0) / n * jack.iter().map(|v| (v - jmean) * (v - jmean)).sum::<f64>()).sqrt();
    let mean_cost_stderr = (variance / n).sqrt();

    let analytic_mean_cost = match AlphabetKind::from_name(spec.alphabet.name()) {
        Ok(kind) => {
            let e_nk = expected_profile(kind, spec.m, spec.n, spec.l, sigma2, d2)?;
            Some(total_cost(&e_nk, |k| default_cost(k) as f64).0)
        }
        Err(_) => None,
    };
    Ok(VarianceEstimate {
        variance,
        stderr,
        mean_cost: mean,
        mean_cost_stderr,
        analytic_mean_cost,
        d2,
        trials: costs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use approx::assert_abs_diff_eq;

    fn brute_binary_counts(k: usize, k1: usize) -> std::collections::HashMap<(usize, i64), u128> {
        // fixed vector: k1 ones then zeros
        let xt: Vec<i64> = (0..k).map(|i| i64::from(i < k1)).collect();
        let mut buckets = std::collections::HashMap::new();
        for mask in 0..(1u32 << k) {
            let xa: Vec<i64> = (0..k).map(|i| ((mask >> i) & 1) as i64).collect();
            let k2 = xa.iter().filter(|&&s| s != 0).count();
            let eta: i64 = xt.iter().zip(&xa).map(|(a, b)| (a - b) * (a - b)).sum();
            *buckets.entry((k2, eta)).or_insert(0u128) += 1;
        }
        buckets
    }

    #[test]
    fn count_binary_examples() {
        assert_eq!(count_binary(1, 1, 2, 2), 1);
        assert_eq!(count_binary(1, 2, 3, 1), 2);
        for k in 1..=6 {
            for k1 in 0..=k {
                assert_eq!(count_binary(k1, k1, k, 0), 1);
            }
        }
    }

    #[test]
    fn count_binary_matches_brute_force() {
        for k in 1..=8usize {
            for k1 in 0..=k {
                let brute = brute_binary_counts(k, k1);
                for k2 in 0..=k {
                    for eta in 0..=(k as i64 + 2) {
                        let expect = brute.get(&(k2, eta)).copied().unwrap_or(0);
                        assert_eq!(
                            count_binary(k1, k2, k, eta),
                            expect,
                            "mismatch at k={k} k1={k1} k2={k2} eta={eta}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn count_binary_row_sums_to_binomials() {
        for k in 1..=10usize {
            for k1 in 0..=k {
                for l in 0..=k {
                    let mut total: u128 = 0;
                    for k2 in 0..=l {
                        for eta in 0..=(k as i64) {
                            total += count_binary(k1, k2, k, eta);
                        }
                    }
                    let expect: u128 = (0..=l).map(|k2| binomial(k as u64, k2 as i64).unwrap()).sum();
                    assert_eq!(total, expect);
                }
            }
        }
    }

    fn ternary_vectors(k: usize) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            let mut next = Vec::new();
            for v in &out {
                for s in [-1i64, 0, 1] {
                    let mut w = v.clone();
                    w.push(s);
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn count_ternary_matches_brute_force() {
        for k in 1..=6usize {
            let all = ternary_vectors(k);
            for k1 in 0..=k {
                for a in 0..=k1 {
                    // canonical fixed vector: a ones, k1-a minus-ones, zeros
                    let mut xt = vec![0i64; k];
                    for item in xt.iter_mut().take(a) {
                        *item = 1;
                    }
                    for item in xt.iter_mut().take(k1).skip(a) {
                        *item = -1;
                    }
                    let mut brute: std::collections::HashMap<(usize, i64), u128> = Default::default();
                    for xa in &all {
                        let k2 = xa.iter().filter(|&&s| s != 0).count();
                        let eta: i64 = xt.iter().zip(xa).map(|(p, q)| (p - q) * (p - q)).sum();
                        *brute.entry((k2, eta)).or_insert(0) += 1;
                    }
                    for k2 in 0..=k {
                        let mut by_eta: std::collections::HashMap<i64, u128> = Default::default();
                        for p in ternary_p_matrices(k1, k2, k, a) {
                            let g = count_ternary(k1, k2, k, a, &p);
                            if g > 0 {
                                *by_eta.entry(p.eta()).or_insert(0) += g;
                            }
                        }
                        for eta in 0..=(4 * k as i64) {
                            let expect = brute.get(&(k2, eta)).copied().unwrap_or(0);
                            let got = by_eta.get(&eta).copied().unwrap_or(0);
                            assert_eq!(got, expect, "k={k} k1={k1} a={a} k2={k2} eta={eta}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn count_ternary_distance_four_pair() {
        // fixed (1,0): exactly one candidate of weight 1 at squared distance 4
        let mut total = 0u128;
        for p in ternary_p_matrices(1, 1, 2, 1) {
            if p.eta() == 4 {
                total += count_ternary(1, 1, 2, 1, &p);
            }
        }
        assert_eq!(total, 1);
    }

    #[test]
    fn degenerate_zero_sparsity_is_single_gamma() {
        let (m, n, l) = (6usize, 8usize, 0usize);
        let sigma2 = 0.7;
        let d2 = 5.0;
        for k in 1..=m {
            let shape = (n - m + k) as f64 / 2.0;
            let expect = regularized_gamma(shape, d2 / (2.0 * sigma2)).unwrap();
            assert_abs_diff_eq!(expected_nodes_binary(m, n, k, l, sigma2, d2).unwrap(), expect, epsilon = 1e-12);
            assert_abs_diff_eq!(expected_nodes_ternary(m, n, k, l, sigma2, d2).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn infinite_radius_limits() {
        let sigma2 = 1.0;
        let d2 = 1e12 * sigma2;
        // binary: sum of binomials up to l
        let v = expected_nodes_binary(6, 6, 3, 2, sigma2, d2).unwrap();
        assert_abs_diff_eq!(v, 1.0 + 3.0 + 3.0, epsilon = 1e-6); // C(3,0)+C(3,1)+C(3,2)
        // ternary: 1-sparse count over dimension 2
        let t = expected_nodes_ternary(8, 8, 2, 1, sigma2, d2).unwrap();
        assert_abs_diff_eq!(t, 5.0, epsilon = 1e-6);
        // unaware: full binary count
        let u = expected_nodes_unaware(6, 6, 3, 2, sigma2, d2).unwrap();
        assert_abs_diff_eq!(u, 8.0, epsilon = 1e-6);
    }

    #[test]
    fn unaware_dominates_sparse() {
        for k in 1..=10usize {
            for &d2 in &[1.0, 5.0, 20.0] {
                let s = expected_nodes_binary(10, 10, k, 3, 1.0, d2).unwrap();
                let u = expected_nodes_unaware(10, 10, k, 3, 1.0, d2).unwrap();
                assert!(u >= s - 1e-12, "k={k} d2={d2}: {u} < {s}");
                // monotone in radius
                let s2 = expected_nodes_binary(10, 10, k, 3, 1.0, d2 * 2.0).unwrap();
                assert!(s2 + 1e-12 >= s);
            }
        }
    }

    /// Direct Monte Carlo of the counted event, independent of the decoder:
    /// enumerate suffixes and test sphere plus sparsity per trial.
    fn mc_level_counts(
        spec: &GenSpec,
        d2: f64,
        trials: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        use crate::model::enumerate_sparse;
        use crate::numerics::qr_decompose;
        let m = spec.m;
        let mut sums = vec![0.0; m];
        let mut sq = vec![0.0; m];
        for t in 0..trials {
            let mut s = spec.clone();
            s.seed = trial_seed(spec.seed, t as u64);
            let (inst, _) = generate_instance(&s).unwrap();
            let qr = qr_decompose(&inst.h).unwrap();
            let z = qr.q1.t_mul_vec(&inst.y);
            let rho: f64 = qr.q2.t_mul_vec(&inst.y).iter().map(|v| v * v).sum();
            for k in 1..=m {
                let mut count = 0u64;
                for suffix in enumerate_sparse(k, spec.l.min(k), &spec.alphabet).unwrap() {
                    let mut tpart = 0.0;
                    for row in 0..k {
                        let ri = m - k + row;
                        let mut acc = z[ri];
                        for (col, &sv) in suffix.iter().enumerate() {
                            acc -= sv as f64 * qr.r.get(ri, m - k + col);
                        }
                        tpart += acc * acc;
                    }
                    if rho + tpart <= d2 {
                        count += 1;
                    }
                }
                sums[k - 1] += count as f64;
                sq[k - 1] += (count * count) as f64;
            }
        }
        let n = trials as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let stderrs: Vec<f64> = sums
            .iter()
            .zip(&sq)
            .map(|(s, q)| (((q - s * s / n) / (n - 1.0)).max(0.0) / n).sqrt())
            .collect();
        (means, stderrs)
    }

    #[test]
    fn theory_matches_direct_enumeration_binary() {
        let spec = GenSpec { m: 3, n: 5, alphabet: Alphabet::binary01(), l: 1, snr_db: 8.0, seed: 101 };
        let sigma2 = sigma2_for_snr(&spec).unwrap();
        let d2 = choose_radius(spec.n, sigma2, 0.99).unwrap();
        let (means, stderrs) = mc_level_counts(&spec, d2, 3000);
        for k in 1..=spec.m {
            let th = expected_nodes_binary(spec.m, spec.n, k, spec.l, sigma2, d2).unwrap();
            let z = (means[k - 1] - th) / stderrs[k - 1].max(1e-12);
            assert!(z.abs() < 5.0, "k={k}: mc {} vs theory {th} (z={z})", means[k - 1]);
        }
    }

    #[test]
    fn theory_matches_direct_enumeration_ternary() {
        let spec = GenSpec { m: 3, n: 4, alphabet: Alphabet::ternary(), l: 2, snr_db: 6.0, seed: 202 };
        let sigma2 = sigma2_for_snr(&spec).unwrap();
        let d2 = choose_radius(spec.n, sigma2, 0.99).unwrap();
        let (means, stderrs) = mc_level_counts(&spec, d2, 3000);
        for k in 1..=spec.m {
            let th = expected_nodes_ternary(spec.m, spec.n, k, spec.l, sigma2, d2).unwrap();
            let z = (means[k - 1] - th) / stderrs[k - 1].max(1e-12);
            assert!(z.abs() < 5.0, "k={k}: mc {} vs theory {th} (z={z})", means[k - 1]);
        }
    }

    #[test]
    fn total_cost_edges() {
        let (c, e) = total_cost(&[0.0, 0.0], |_| 1.0);
        assert_eq!(c, 0.0);
        assert!(e.is_infinite() && e < 0.0);
        let (c, e) = total_cost(&vec![1.0; 5], |_| 1.0);
        assert_abs_diff_eq!(c, 5.0);
        assert_abs_diff_eq!(e, 1.0);
    }

    #[test]
    fn pair_count_zero_tuple() {
        assert_eq!(pair_count(3, 5, 2, 0, 0, 0, 0, 0, 0), 1);
    }

    #[test]
    fn joint_prob_equal_examples() {
        assert_abs_diff_eq!(joint_prob_equal(1e9, 1.0, 0.0, 4).unwrap(), 1.0, epsilon = 1e-9);
        assert_eq!(joint_prob_equal(0.0, 1.0, 1.0, 4).unwrap(), 0.0);
        let v = joint_prob_equal(4.0, 1.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(v, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn variance_mc_degenerate_noise() {
        let spec = GenSpec { m: 4, n: 4, alphabet: Alphabet::binary01(), l: 1, snr_db: 90.0, seed: 7 };
        let est = variance_mc(&spec, 64, D2Mode::Fixed(1e-6), Some(1)).unwrap();
        // nearly deterministic counts at a tiny radius
        assert!(est.variance < 1e3, "variance {}", est.variance);
    }
}
