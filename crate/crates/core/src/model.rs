//! Problem and alphabet definitions, sparse-prior enumeration over
//! constrained lattices, and seeded random instance generation for the
//! Monte Carlo harness.

use crate::numerics::{binomial, binomial_i, Mat, NumericsError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on brute-force enumeration size (number of vectors).
pub const DEFAULT_ENUM_CAP: u128 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("alphabet must contain 0")]
    AlphabetWithoutZero,
    #[error("alphabet symbols must be distinct")]
    DuplicateSymbol,
    #[error("alphabet must not be empty")]
    EmptyAlphabet,
    #[error("enumeration too large: {count} vectors exceeds cap {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Finite integer symbol set, sorted ascending, containing 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    symbols: Vec<i64>,
    name: String,
}

impl Alphabet {
    /// The {0, 1} alphabet.
    pub fn binary01() -> Self {
        Self { symbols: vec![0, 1], name: "binary01".into() }
    }

    /// The {-1, 0, 1} alphabet.
    pub fn ternary() -> Self {
        Self { symbols: vec![-1, 0, 1], name: "ternary".into() }
    }

    /// Arbitrary symbol set; sorted on construction, must contain 0.
    pub fn custom(mut symbols: Vec<i64>) -> Result<Self, ModelError> {
        if symbols.is_empty() {
            return Err(ModelError::EmptyAlphabet);
        }
        symbols.sort_unstable();
        if symbols.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateSymbol);
        }
        if !symbols.contains(&0) {
            return Err(ModelError::AlphabetWithoutZero);
        }
        Ok(Self { symbols, name: "custom".into() })
    }

    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        match spec {
            "binary01" => Ok(Self::binary01()),
            "ternary" => Ok(Self::ternary()),
            other => {
                let symbols = other
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ModelError::InvalidInstance(format!("bad alphabet {other:?}: {e}")))?;
                Self::custom(symbols)
            }
        }
    }

    #[inline]
    pub fn symbols(&self) -> &[i64] {
        &self.symbols
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Alphabet size L.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least the zero symbol
    }

    pub fn nonzero_symbols(&self) -> impl Iterator<Item = i64> + '_ {
        self.symbols.iter().copied().filter(|&s| s != 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.symbols[0] >= 0
    }

    /// Smallest gap between adjacent symbols (1 for single-symbol sets).
    pub fn min_spacing(&self) -> f64 {
        self.symbols
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64)
            .fold(f64::INFINITY, f64::min)
            .min(f64::INFINITY)
            .max(0.0)
            .min(if self.symbols.len() > 1 { f64::INFINITY } else { 1.0 })
    }

    /// Nearest symbol to a real value; ties resolve to the smaller symbol.
    pub fn nearest(&self, v: f64) -> i64 {
        let mut best = self.symbols[0];
        let mut best_d = (v - best as f64).abs();
        for &s in &self.symbols[1..] {
            let d = (v - s as f64).abs();
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        best
    }

    /// Mean of s^2 over the nonzero symbols.
    pub fn mean_square_nonzero(&self) -> f64 {
        let nz: Vec<i64> = self.nonzero_symbols().collect();
        if nz.is_empty() {
            return 0.0;
        }
        nz.iter().map(|&s| (s * s) as f64).sum::<f64>() / nz.len() as f64
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            symbols: Vec<i64>,
            name: String,
        }
        let raw = Raw::deserialize(d)?;
        match raw.name.as_str() {
            "binary01" => Ok(Alphabet::binary01()),
            "ternary" => Ok(Alphabet::ternary()),
            _ => Alphabet::custom(raw.symbols).map_err(serde::de::Error::custom),
        }
    }
}

/// One sparsity-constrained integer least-squares problem.
#[derive(Debug, Clone)]
pub struct IlsInstance {
    pub h: Mat,
    pub y: Vec<f64>,
    pub alphabet: Alphabet,
    /// Sparsity bound on the number of nonzero entries of the solution.
    pub l: usize,
    pub sigma2: f64,
}

impl IlsInstance {
    pub fn new(h: Mat, y: Vec<f64>, alphabet: Alphabet, l: usize, sigma2: f64) -> Result<Self, ModelError> {
        if h.rows() < h.cols() {
            return Err(ModelError::InvalidInstance(format!(
                "need n >= m, got {} x {}",
                h.rows(),
                h.cols()
            )));
        }
        if y.len() != h.rows() {
            return Err(ModelError::InvalidInstance(format!(
                "y length {} does not match n = {}",
                y.len(),
                h.rows()
            )));
        }
        if l > h.cols() {
            return Err(ModelError::InvalidInstance(format!("l = {l} exceeds m = {}", h.cols())));
        }
        if !(sigma2 >= 0.0) {
            return Err(ModelError::InvalidInstance(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        if !h.all_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInstance("non-finite entries".into()));
        }
        Ok(Self { h, y, alphabet, l, sigma2 })
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn m(&self) -> usize {
        self.h.cols()
    }

    /// Same problem with a different sparsity bound (l = m gives the
    /// classical, sparsity-unaware problem).
    pub fn with_sparsity(&self, l: usize) -> Self {
        let mut c = self.clone();
        c.l = l.min(self.m());
        c
    }
}

/// Configuration for one randomly generated instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub alphabet: Alphabet,
    pub l: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.m > self.n {
            return Err(ModelError::InvalidInstance(format!("need m <= n, got m={} n={}", self.m, self.n)));
        }
        if self.l > self.m {
            return Err(ModelError::InvalidInstance(format!("need l <= m, got l={} m={}", self.l, self.m)));
        }
        if self.snr_db.is_nan() {
            return Err(ModelError::InvalidInstance("snr_db is NaN".into()));
        }
        Ok(())
    }
}

/// Number of vectors in the alphabet lattice of dimension k with at most l
/// nonzero entries: sum over j of C(k,j) (L-1)^j.
pub fn sparse_set_count(k: usize, l: usize, alphabet: &Alphabet) -> Result<u128, ModelError> {
    let nz = (alphabet.len() - 1) as u128;
    let mut total: u128 = 0;
    for j in 0..=l.min(k) {
        let mut term = binomial(k as u64, j as i64)?;
        for _ in 0..j {
            term = term
                .checked_mul(nz)
                .ok_or(NumericsError::Overflow { n: k as u64, k: j as u64 })?;
        }
        total = total
            .checked_add(term)
            .ok_or(NumericsError::Overflow { n: k as u64, k: j as u64 })?;
    }
    Ok(total)
}

/// Lexicographically ordered iterator over all k-dimensional alphabet
/// vectors with at most l nonzero entries.
pub struct SparseVectors<'a> {
    symbols: &'a [i64],
    l: usize,
    buf: Vec<i64>,
    started: bool,
    done: bool,
}

impl<'a> SparseVectors<'a> {
    fn fill_min_suffix(&mut self, from: usize, mut budget: usize) {
        let smallest = self.symbols[0];
        for j in from..self.buf.len() {
            if budget > 0 && smallest < 0 {
                self.buf[j] = smallest;
                budget -= 1;
            } else {
                self.buf[j] = 0;
            }
        }
    }

    fn advance(&mut self) -> bool {
        let k = self.buf.len();
        for i in (0..k).rev() {
            let prefix_nz = self.buf[..i].iter().filter(|&&s| s != 0).count();
            let cur = self.buf[i];
            let pos = self.symbols.iter().position(|&s| s == cur).expect("symbol in alphabet");
            for &s in &self.symbols[pos + 1..] {
                let need = prefix_nz + usize::from(s != 0);
                if need <= self.l {
                    self.buf[i] = s;
                    self.fill_min_suffix(i + 1, self.l - need);
                    return true;
                }
            }
        }
        false
    }

    /// Advance and borrow the next vector without allocating.
    pub fn next_ref(&mut self) -> Option<&[i64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            let budget = self.l;
            self.fill_min_suffix(0, budget);
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(&self.buf)
    }
}

impl<'a> Iterator for SparseVectors<'a> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        self.next_ref().map(|v| v.to_vec())
    }
}

/// Enumerate every x in the alphabet lattice of dimension k with
/// `||x||_0 <= l`, in lexicographic order, each exactly once.
pub fn enumerate_sparse<'a>(
    k: usize,
    l: usize,
    alphabet: &'a Alphabet,
) -> Result<SparseVectors<'a>, ModelError> {
    enumerate_sparse_capped(k, l, alphabet, DEFAULT_ENUM_CAP)
}

pub fn enumerate_sparse_capped<'a>(
    k: usize,
    l: usize,
    alphabet: &'a Alphabet,
    cap: u128,
) -> Result<SparseVectors<'a>, ModelError> {
    let count = sparse_set_count(k, l, alphabet)?;
    if count > cap {
        return Err(ModelError::TooLarge { count, cap });
    }
    Ok(SparseVectors { symbols: alphabet.symbols(), l: l.min(k), buf: vec![0; k], started: false, done: false })
}

/// Number of l-sparse binary vectors of dimension m whose whole weight is
/// k3 and whose trailing-k-entry weight is k1: C(k,k1) * C(m-k, k3-k1).
/// Out-of-range parameters yield 0.
pub fn prefix_prior_binary(m: usize, k: usize, k1: i64, k3: i64) -> Result<u128, NumericsError> {
    if k > m {
        return Ok(0);
    }
    let a = binomial(k as u64, k1)?;
    if a == 0 {
        return Ok(0);
    }
    let b = binomial((m - k) as u64, k3 - k1)?;
    a.checked_mul(b).ok_or(NumericsError::Overflow { n: m as u64, k: k as u64 }).map(|v| v)
}

/// Ternary analogue: vectors with trailing-k weight k1, of which `a` are +1,
/// total weight k3; count C(k,a) C(k-a,k1-a) C(m-k,k3-k1) 2^(k3-k1).
pub fn prefix_prior_ternary(
    m: usize,
    k: usize,
    k1: i64,
    k3: i64,
    a: i64,
) -> Result<u128, NumericsError> {
    if k > m {
        return Ok(0);
    }
    let c1 = binomial(k as u64, a)?;
    if c1 == 0 {
        return Ok(0);
    }
    let c2 = binomial_i(k as i64 - a, k1 - a)?;
    if c2 == 0 {
        return Ok(0);
    }
    let c3 = binomial((m - k) as u64, k3 - k1)?;
    if c3 == 0 {
        return Ok(0);
    }
    let shift = (k3 - k1) as u32;
    let pow: u128 = 1u128
        .checked_shl(shift)
        .ok_or(NumericsError::Overflow { n: m as u64, k: shift as u64 })?;
    c1.checked_mul(c2)
        .and_then(|v| v.checked_mul(c3))
        .and_then(|v| v.checked_mul(pow))
        .ok_or(NumericsError::Overflow { n: m as u64, k: k as u64 })
}

/// Exact E[||x||^2] under the uniform prior over the l-sparse set.
pub fn expected_signal_energy(m: usize, l: usize, alphabet: &Alphabet) -> Result<f64, ModelError> {
    let nz = (alphabet.len() - 1) as f64;
    let mu2 = alphabet.mean_square_nonzero();
    let total = sparse_set_count(m, l, alphabet)? as f64;
    let mut acc = 0.0;
    for j in 0..=l.min(m) {
        let class = binomial(m as u64, j as i64)? as f64 * nz.powi(j as i32);
        acc += class * j as f64 * mu2;
    }
    Ok(acc / total)
}

/// Noise variance implied by an SNR in dB under the convention
/// snr = E[||H x||^2] / E[||nu||^2] = E[||x||^2] / sigma2 for iid N(0,1) H.
/// An infinite snr_db gives sigma2 = 0 (the noiseless limit).
pub fn sigma2_for_snr(spec: &GenSpec) -> Result<f64, ModelError> {
    if spec.snr_db.is_infinite() && spec.snr_db > 0.0 {
        return Ok(0.0);
    }
    let snr = 10f64.powf(spec.snr_db / 10.0);
    Ok(expected_signal_energy(spec.m, spec.l, &spec.alphabet)? / snr)
}

/// Per-trial seed derived from a base seed and a trial index by a fixed
/// 64-bit mix (splitmix64), so runs reproduce across machines and worker
/// counts.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw x uniformly from the l-sparse set over the alphabet.
fn sample_sparse_uniform<R: Rng>(rng: &mut R, m: usize, l: usize, alphabet: &Alphabet) -> Result<Vec<i64>, ModelError> {
    let nz_syms: Vec<i64> = alphabet.nonzero_symbols().collect();
    let nz = nz_syms.len() as u128;
    let total = sparse_set_count(m, l, alphabet)?;
    let r = rng.gen_range(0..total);
    // locate the weight class
    let mut acc: u128 = 0;
    let mut weight = 0usize;
    for j in 0..=l.min(m) {
        let mut class = binomial(m as u64, j as i64)?;
        for _ in 0..j {
            class *= nz;
        }
        acc += class;
        if r < acc {
            weight = j;
            break;
        }
    }
    // uniform support of the chosen size (Floyd's algorithm)
    let mut support: Vec<usize> = Vec::with_capacity(weight);
    for i in (m - weight)..m {
        let t = rng.gen_range(0..=i);
        if support.contains(&t) {
            support.push(i);
        } else {
            support.push(t);
        }
    }
    support.sort_unstable();
    let mut x = vec![0i64; m];
    for &pos in &support {
        let idx = rng.gen_range(0..nz_syms.len());
        x[pos] = nz_syms[idx];
    }
    Ok(x)
}

/// Generate a seeded random instance: iid standard normal H, x drawn
/// uniformly from the l-sparse set, y = H x + noise. Deterministic in the
/// seed; the true vector is returned alongside the instance.
pub fn generate_instance(spec: &GenSpec) -> Result<(IlsInstance, Vec<i64>), ModelError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = Mat::from_fn(spec.n, spec.m, |_, _| rng.sample(StandardNormal));
    let x_true = sample_sparse_uniform(&mut rng, spec.m, spec.l, &spec.alphabet)?;
    let sigma2 = sigma2_for_snr(spec)?;
    let sigma = sigma2.sqrt();
    let xf: Vec<f64> = x_true.iter().map(|&v| v as f64).collect();
    let mut y = h.mul_vec(&xf);
    for v in y.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v += sigma * g;
    }
    Ok((IlsInstance::new(h, y, spec.alphabet.clone(), spec.l, sigma2)?, x_true))
}
