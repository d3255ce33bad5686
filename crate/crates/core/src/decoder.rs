//! Search engines for the sparsity-constrained integer least-squares
//! problem: fixed-radius Fincke-Pohst enumeration, a growing-radius wrapper,
//! a Schnorr-Euchner variant with radius update, the classical
//! (sparsity-unaware) decoder, and a brute-force oracle.
//!
//! Levels are indexed by suffix dimension k = 1..m, where the level-k node
//! fixes the last k components of x. A level-k counter increments exactly
//! when a k-dimensional suffix satisfies both the sphere constraint and the
//! sparsity constraint.

use crate::bound::{bound_flop_estimate, omp_residual2_gram};
use crate::model::{enumerate_sparse, Alphabet, IlsInstance, ModelError};
use crate::numerics::{choose_radius, qr_decompose, Mat, NumericsError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which engine produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    FpFixed,
    FpGrowing,
    SeRadiusUpdate,
    Classical,
    BruteForce,
}

impl DecodeMode {
    pub fn label(self) -> &'static str {
        match self {
            DecodeMode::FpFixed => "fp_fixed",
            DecodeMode::FpGrowing => "fp_growing",
            DecodeMode::SeRadiusUpdate => "se_radius_update",
            DecodeMode::Classical => "classical",
            DecodeMode::BruteForce => "brute_force",
        }
    }
}

/// Per-search counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// nodes_per_level[k-1] counts accepted k-dimensional suffixes.
    pub nodes_per_level: Vec<u64>,
    pub flops: u64,
    pub radius_restarts: u32,
    pub solutions_examined: u64,
}

impl SearchStats {
    pub fn new(m: usize) -> Self {
        Self { nodes_per_level: vec![0; m], flops: 0, radius_restarts: 0, solutions_examined: 0 }
    }

    pub fn total_nodes(&self) -> u64 {
        self.nodes_per_level.iter().sum()
    }

    pub fn merge(&mut self, other: &SearchStats) {
        for (a, b) in self.nodes_per_level.iter_mut().zip(&other.nodes_per_level) {
            *a += b;
        }
        self.flops += other.flops;
        self.solutions_examined += other.solutions_examined;
    }
}

/// Decoder output: the argmin, its recomputed squared residual, and the
/// search statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub x_hat: Vec<i64>,
    pub residual2: f64,
    pub stats: SearchStats,
    pub mode: DecodeMode,
}

/// Fixed-radius outcome; the sphere may be empty while counters are still
/// meaningful.
#[derive(Debug, Clone)]
pub struct FpDecode {
    pub result: Option<DecodeResult>,
    pub stats: SearchStats,
}

/// Per-node operation count at suffix dimension k.
pub fn default_cost(k: usize) -> u64 {
    2 * k as u64 + 11
}

/// `||y - H x||^2` recomputed directly from the instance data, with a fixed
/// accumulation order shared by every decoder so equal solutions report
/// bit-identical residuals.
pub fn residual_norm2(h: &Mat, y: &[f64], x: &[i64]) -> f64 {
    let mut r = y.to_vec();
    for (j, &s) in x.iter().enumerate() {
        if s != 0 {
            let sf = s as f64;
            for (i, ri) in r.iter_mut().enumerate() {
                *ri -= sf * h.get(i, j);
            }
        }
    }
    r.iter().map(|v| v * v).sum()
}

fn better(res_a: f64, xa: &[i64], res_b: f64, xb: &[i64]) -> bool {
    res_a < res_b || (res_a == res_b && xa < xb)
}

pub(crate) struct Prepared {
    pub r: Mat,
    pub z: Vec<f64>,
    /// `||Q2^T y||^2`, the part of the residual no lattice point can touch.
    pub rho: f64,
}

pub(crate) fn prepare(inst: &IlsInstance) -> Result<Prepared, DecodeError> {
    let qr = qr_decompose(&inst.h)?;
    let z = qr.q1.t_mul_vec(&inst.y);
    let q2y = qr.q2.t_mul_vec(&inst.y);
    let rho = q2y.iter().map(|v| v * v).sum();
    Ok(Prepared { r: qr.r, z, rho })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoundCfg {
    /// Skip the bound when the root interval holds fewer candidate slots.
    pub guard_threshold: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineCfg {
    pub se_order: bool,
    pub shrink_radius: bool,
    pub early_cut: bool,
    pub bound: Option<BoundCfg>,
}

impl EngineCfg {
    fn fp(alphabet: &Alphabet) -> Self {
        EngineCfg {
            se_order: false,
            shrink_radius: false,
            early_cut: alphabet.name() == "binary01",
            bound: None,
        }
    }

    fn se() -> Self {
        EngineCfg { se_order: true, shrink_radius: true, early_cut: false, bound: None }
    }
}

struct Engine<'a> {
    h: &'a Mat,
    y: &'a [f64],
    r: &'a Mat,
    m: usize,
    l: usize,
    symbols: &'a [i64],
    cfg: EngineCfg,
    budget: f64,
    bound_active: bool,
    gram: Option<Mat>,
    x: Vec<i64>,
    /// w[i] holds z - R * (fixed suffix) restricted to rows 0..=i; its top
    /// entry w[i][i] is the conditioned center for component i.
    w: Vec<Vec<f64>>,
    /// Column-residual correlations for the bound, per level.
    bc: Vec<Vec<f64>>,
    /// Zig-zag candidate ordering, one buffer per level (the search is
    /// recursive, so levels must not share).
    order: Vec<Vec<i64>>,
    stats: SearchStats,
    best: Option<(f64, Vec<i64>, f64)>,
}

impl<'a> Engine<'a> {
    fn new(inst: &'a IlsInstance, prep: &'a Prepared, cfg: EngineCfg, budget: f64) -> Self {
        let m = inst.m();
        let mut w = vec![vec![0.0; m]; m];
        w[m - 1].copy_from_slice(&prep.z);
        let bound_requested = cfg.bound.is_some();
        let gram = if bound_requested {
            let mut g = Mat::zeros(m, m);
            for j1 in 0..m {
                for j2 in j1..m {
                    let mut acc = 0.0;
                    for r in 0..=j1 {
                        acc += prep.r.get(r, j1) * prep.r.get(r, j2);
                    }
                    g.set(j1, j2, acc);
                    g.set(j2, j1, acc);
                }
            }
            Some(g)
        } else {
            None
        };
        let mut bc = Vec::new();
        if bound_requested {
            bc = vec![vec![0.0; m]; m];
            for j in 0..m {
                let mut acc = 0.0;
                for r in 0..=j {
                    acc += prep.r.get(r, j) * prep.z[r];
                }
                bc[m - 1][j] = acc;
            }
        }
        let bound_active = if let Some(b) = cfg.bound {
            let rmm = prep.r.get(m - 1, m - 1);
            let slots = 2.0 * budget.max(0.0).sqrt() / (rmm * inst.alphabet.min_spacing());
            slots >= b.guard_threshold
        } else {
            false
        };
        Engine {
            h: &inst.h,
            y: &inst.y,
            r: &prep.r,
            m,
            l: inst.l,
            symbols: inst.alphabet.symbols(),
            cfg,
            budget,
            bound_active,
            gram,
            x: vec![0; m],
            w,
            bc,
            order: if cfg.se_order { vec![Vec::with_capacity(inst.alphabet.len()); m] } else { Vec::new() },
            stats: SearchStats::new(m),
            best: None,
        }
    }

    fn write_child(&mut self, i: usize, s: i64) {
        let sf = s as f64;
        let (lo, hi) = self.w.split_at_mut(i);
        let child = &mut lo[i - 1];
        let parent = &hi[0];
        if sf == 0.0 {
            child[..i].copy_from_slice(&parent[..i]);
        } else {
            for r in 0..i {
                child[r] = parent[r] - sf * self.r.get(r, i);
            }
        }
        if self.bound_active {
            let g = self.gram.as_ref().unwrap();
            let (lo, hi) = self.bc.split_at_mut(i);
            let childb = &mut lo[i - 1];
            let parentb = &hi[0];
            if sf == 0.0 {
                childb[..i].copy_from_slice(&parentb[..i]);
            } else {
                for j in 0..i {
                    childb[j] = parentb[j] - sf * g.get(j, i);
                }
            }
        }
    }

    /// OMP value of the relaxed sparse least-squares over the leading block,
    /// evaluated from the already-written child buffers.
    fn eval_bound(&mut self, i: usize, l_tilde: usize) -> f64 {
        let res0: f64 = self.w[i - 1][..i].iter().map(|v| v * v).sum();
        self.stats.flops += bound_flop_estimate(i, l_tilde);
        if l_tilde == 0 {
            return res0;
        }
        omp_residual2_gram(self.gram.as_ref().unwrap(), &self.bc[i - 1][..i], res0, l_tilde)
    }

    fn record_leaf(&mut self, t_leaf: f64) {
        self.stats.solutions_examined += 1;
        let res = residual_norm2(self.h, self.y, &self.x);
        let improved = match &self.best {
            None => true,
            Some((bres, bx, _)) => better(res, &self.x, *bres, bx),
        };
        if improved {
            self.best = Some((res, self.x.clone(), t_leaf));
        }
        if self.cfg.shrink_radius && t_leaf < self.budget {
            self.budget = t_leaf;
        }
    }

    fn descend(&mut self, i: usize, t_acc: f64, nz: usize) {
        let rii = self.r.get(i, i);
        let c = self.w[i][i];
        let center = c / rii;
        if self.cfg.se_order {
            let buf = &mut self.order[i];
            buf.clear();
            buf.extend_from_slice(self.symbols);
            buf.sort_by(|&a, &b| {
                let da = (a as f64 - center).abs();
                let db = (b as f64 - center).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
        }
        let n_sym = self.symbols.len();
        for idx in 0..n_sym {
            let s = if self.cfg.se_order { self.order[i][idx] } else { self.symbols[idx] };
            let slack = self.budget - t_acc;
            let d = c - rii * s as f64;
            let contrib = d * d;
            if contrib > slack {
                if self.cfg.se_order || s as f64 > center {
                    break; // every remaining candidate is at least this far out
                }
                continue;
            }
            let s_nz = usize::from(s != 0);
            if nz + s_nz > self.l {
                if self.cfg.early_cut && !self.cfg.se_order && s > 0 {
                    break; // nonnegative alphabet: later symbols are nonzero too
                }
                continue;
            }
            let use_bound = self.bound_active && i > 0;
            if use_bound {
                self.x[i] = s;
                self.write_child(i, s);
                let l_tilde = self.l - (nz + s_nz);
                let lb = self.eval_bound(i, l_tilde);
                if lb + contrib > slack {
                    continue;
                }
            }
            // accept: suffix of dimension k = m - i satisfies both constraints
            let k = self.m - i;
            self.stats.nodes_per_level[k - 1] += 1;
            self.stats.flops += default_cost(k);
            self.x[i] = s;
            if i == 0 {
                self.record_leaf(t_acc + contrib);
            } else {
                if !use_bound {
                    self.write_child(i, s);
                }
                self.descend(i - 1, t_acc + contrib, nz + s_nz);
            }
        }
    }

    fn run(mut self) -> (Option<(f64, Vec<i64>, f64)>, SearchStats) {
        if self.budget >= 0.0 && self.m > 0 {
            self.descend(self.m - 1, 0.0, 0);
        }
        (self.best, self.stats)
    }
}

/// Fixed-radius sparsity-aware search: enumerate every suffix inside the
/// sphere of squared radius `d2` that also satisfies the sparsity bound, and
/// return the best feasible point if any.
pub fn decode_sparse_fp(inst: &IlsInstance, d2: f64) -> Result<FpDecode, DecodeError> {
    let prep = prepare(inst)?;
    decode_fp_prepared(inst, &prep, d2, EngineCfg::fp(&inst.alphabet))
}

fn decode_fp_prepared(
    inst: &IlsInstance,
    prep: &Prepared,
    d2: f64,
    cfg: EngineCfg,
) -> Result<FpDecode, DecodeError> {
    let engine = Engine::new(inst, prep, cfg, d2 - prep.rho);
    let (found, stats) = engine.run();
    let result = found.map(|(res, x, _)| DecodeResult {
        x_hat: x,
        residual2: res,
        stats: stats.clone(),
        mode: DecodeMode::FpFixed,
    });
    Ok(FpDecode { result, stats })
}

const MAX_SCHEDULE_STEPS: usize = 8;

/// Next probability on the geometric schedule 1 - 10^-(2+j).
fn next_prob(p: f64) -> Option<f64> {
    for j in 0..=13 {
        let q = 1.0 - 10f64.powi(-(2 + j));
        if q > p && q < 1.0 {
            return Some(q);
        }
    }
    None
}

fn effective_sigma2(inst: &IlsInstance) -> f64 {
    if inst.sigma2 > 0.0 {
        inst.sigma2
    } else {
        let ynorm2: f64 = inst.y.iter().map(|v| v * v).sum();
        (1.0 + ynorm2) * 1e-12 / inst.n() as f64
    }
}

pub(crate) fn decode_growing(
    inst: &IlsInstance,
    one_minus_eps: f64,
    cfg: EngineCfg,
    mode: DecodeMode,
) -> Result<DecodeResult, DecodeError> {
    if !(one_minus_eps > 0.0 && one_minus_eps < 1.0) {
        return Err(DecodeError::Numerics(NumericsError::InvalidArgument(format!(
            "one_minus_eps must lie in (0,1), got {one_minus_eps}"
        ))));
    }
    let prep = prepare(inst)?;
    let sigma2 = effective_sigma2(inst);
    let n = inst.n();
    let mut agg = SearchStats::new(inst.m());
    let mut searches = 0u32;
    let mut p = Some(one_minus_eps);
    loop {
        let d2 = match p {
            Some(prob) if searches as usize <= MAX_SCHEDULE_STEPS => choose_radius(n, sigma2, prob)?,
            // guaranteed-nonempty fallback: the zero vector lies inside
            _ => inst.y.iter().map(|v| v * v).sum::<f64>() + 1.0,
        };
        let engine = Engine::new(inst, &prep, cfg, d2 - prep.rho);
        let (found, stats) = engine.run();
        agg.merge(&stats);
        searches += 1;
        if let Some((res, x, _)) = found {
            agg.radius_restarts = searches - 1;
            return Ok(DecodeResult { x_hat: x, residual2: res, stats: agg, mode });
        }
        p = p.and_then(next_prob);
    }
}

/// Sparsity-aware sphere decoding with a chi-square radius that grows on an
/// empty sphere until a feasible point is found. Always terminates: the
/// all-zero vector is feasible and within finite distance.
pub fn decode_sparse(inst: &IlsInstance, one_minus_eps: f64) -> Result<DecodeResult, DecodeError> {
    decode_growing(inst, one_minus_eps, EngineCfg::fp(&inst.alphabet), DecodeMode::FpGrowing)
}

/// Schnorr-Euchner enumeration (zig-zag from the interval midpoint) with
/// radius update; same solution contract as [`decode_sparse`].
pub fn decode_sparse_se(inst: &IlsInstance, one_minus_eps: f64) -> Result<DecodeResult, DecodeError> {
    decode_growing(inst, one_minus_eps, EngineCfg::se(), DecodeMode::SeRadiusUpdate)
}

/// Classical sparsity-unaware sphere decoding (the constraint is relaxed to
/// l = m).
pub fn decode_classical(inst: &IlsInstance, one_minus_eps: f64) -> Result<DecodeResult, DecodeError> {
    let relaxed = inst.with_sparsity(inst.m());
    decode_growing(&relaxed, one_minus_eps, EngineCfg::fp(&relaxed.alphabet), DecodeMode::Classical)
}

/// Exhaustive argmin over the feasible set; the test oracle.
pub fn brute_force(inst: &IlsInstance) -> Result<DecodeResult, DecodeError> {
    let m = inst.m();
    let n = inst.n();
    let mut it = enumerate_sparse(m, inst.l, &inst.alphabet)?;
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut stats = SearchStats::new(m);
    while let Some(x) = it.next_ref() {
        let res = residual_norm2(&inst.h, &inst.y, x);
        stats.solutions_examined += 1;
        let nnz = x.iter().filter(|&&s| s != 0).count();
        stats.flops += (2 * n * (nnz + 1)) as u64;
        let improved = match &best {
            None => true,
            Some((bres, bx)) => better(res, x, *bres, bx),
        };
        if improved {
            best = Some((res, x.to_vec()));
        }
    }
    let (residual2, x_hat) = best.expect("feasible set contains the zero vector");
    Ok(DecodeResult { x_hat, residual2, stats, mode: DecodeMode::BruteForce })
}

/// Sparsity-aware sphere decoding that additionally prunes with a relaxed
/// lower bound on the tail of the objective (computed by orthogonal matching
/// pursuit on the leading triangular block). With `safe_mode` the bound is
/// skipped entirely, which restores the unconditional optimality guarantee
/// and reproduces [`decode_sparse`] bit for bit.
pub fn decode_sparse_lb(
    inst: &IlsInstance,
    one_minus_eps: f64,
    safe_mode: bool,
) -> Result<DecodeResult, DecodeError> {
    decode_sparse_lb_with(inst, one_minus_eps, safe_mode, DEFAULT_GUARD_THRESHOLD)
}

/// Root-interval slot count below which the bound is considered not worth
/// its cost (small spheres prune well enough on their own).
pub const DEFAULT_GUARD_THRESHOLD: f64 = 8.0;

pub fn decode_sparse_lb_with(
    inst: &IlsInstance,
    one_minus_eps: f64,
    safe_mode: bool,
    guard_threshold: f64,
) -> Result<DecodeResult, DecodeError> {
    let mut cfg = EngineCfg::fp(&inst.alphabet);
    if !safe_mode {
        cfg.bound = Some(BoundCfg { guard_threshold });
    }
    decode_growing(inst, one_minus_eps, cfg, DecodeMode::FpGrowing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GenSpec};
    use approx::assert_abs_diff_eq;

    fn inst_1d(y: f64, l: usize) -> IlsInstance {
        IlsInstance::new(Mat::from_rows(&[vec![1.0]]), vec![y], Alphabet::binary01(), l, 0.01).unwrap()
    }

    #[test]
    fn one_dimensional_nearest_point() {
        let inst = inst_1d(0.4, 1);
        let out = decode_sparse_fp(&inst, 1.0).unwrap();
        let r = out.result.unwrap();
        assert_eq!(r.x_hat, vec![0]);
        assert_abs_diff_eq!(r.residual2, 0.16, epsilon = 1e-12);
    }

    #[test]
    fn sparsity_prunes_unconstrained_optimum() {
        let h = Mat::identity(2);
        let inst = IlsInstance::new(h, vec![0.9, 0.8], Alphabet::binary01(), 1, 0.01).unwrap();
        let out = decode_sparse_fp(&inst, 2.0).unwrap();
        let r = out.result.unwrap();
        assert_eq!(r.x_hat, vec![1, 0]);
        assert_abs_diff_eq!(r.residual2, 0.65, epsilon = 1e-12);
        // classical recovers (1,1)
        let c = decode_classical(&inst, 0.99).unwrap();
        assert_eq!(c.x_hat, vec![1, 1]);
        assert_abs_diff_eq!(c.residual2, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn empty_sphere_yields_no_result() {
        let inst = inst_1d(0.4, 1);
        let out = decode_sparse_fp(&inst, 0.01).unwrap();
        assert!(out.result.is_none());
        assert_eq!(out.stats.total_nodes(), 0);
    }

    #[test]
    fn hand_enumerated_counters() {
        // H = I3, y = (0.6, 0.5, 0.4), l = 1, d^2 = 0.9:
        // level 1 (x3):             0 -> 0.16, 1 -> 0.36            => 2
        // level 2 (x2,x3), w <= 1:  00 -> .41, 10 -> .41, 01 -> .61 => 3
        // level 3, w <= 1: 000 -> .77, 100 -> .57, 010 -> .77, 001 -> .97 (out) => 3
        let inst = IlsInstance::new(
            Mat::identity(3),
            vec![0.6, 0.5, 0.4],
            Alphabet::binary01(),
            1,
            0.01,
        )
        .unwrap();
        let out = decode_sparse_fp(&inst, 0.9).unwrap();
        assert_eq!(out.stats.nodes_per_level, vec![2, 3, 3]);
        let r = out.result.unwrap();
        assert_eq!(r.x_hat, vec![1, 0, 0]);
        assert_abs_diff_eq!(r.residual2, 0.57, epsilon = 1e-12);
    }

    #[test]
    fn growing_radius_restarts_and_stays_optimal() {
        // y far from every feasible point at the initial radius
        let h = Mat::identity(2);
        let inst = IlsInstance::new(h, vec![30.0, -40.0], Alphabet::binary01(), 1, 0.01).unwrap();
        let r = decode_sparse(&inst, 0.99).unwrap();
        assert!(r.stats.radius_restarts >= 1);
        let oracle = brute_force(&inst).unwrap();
        assert_eq!(r.x_hat, oracle.x_hat);
        assert_eq!(r.residual2, oracle.residual2);
    }

    #[test]
    fn noiseless_decode_recovers_truth() {
        for seed in 0..20 {
            let spec = GenSpec {
                m: 6,
                n: 6,
                alphabet: Alphabet::ternary(),
                l: 2,
                snr_db: f64::INFINITY,
                seed,
            };
            let (inst, x_true) = generate_instance(&spec).unwrap();
            assert_eq!(decode_sparse(&inst, 0.99).unwrap().x_hat, x_true);
            assert_eq!(decode_sparse_se(&inst, 0.99).unwrap().x_hat, x_true);
        }
    }

    #[test]
    fn brute_force_counts_feasible_set() {
        let spec = GenSpec { m: 10, n: 10, alphabet: Alphabet::ternary(), l: 3, snr_db: 10.0, seed: 3 };
        let (inst, _) = generate_instance(&spec).unwrap();
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.stats.solutions_examined, 1161); // 1 + 20 + 180 + 960
    }

    #[test]
    fn brute_force_zero_sparsity() {
        let spec = GenSpec { m: 4, n: 5, alphabet: Alphabet::binary01(), l: 0, snr_db: 0.0, seed: 9 };
        let (inst, _) = generate_instance(&spec).unwrap();
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.x_hat, vec![0; 4]);
        let ynorm2: f64 = inst.y.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(r.residual2, ynorm2, epsilon = 1e-12);
    }

    #[test]
    fn monotone_pruning_in_radius() {
        let spec = GenSpec { m: 8, n: 8, alphabet: Alphabet::binary01(), l: 3, snr_db: 5.0, seed: 11 };
        let (inst, _) = generate_instance(&spec).unwrap();
        let d2 = choose_radius(8, inst.sigma2, 0.99).unwrap();
        let small = decode_sparse_fp(&inst, 0.5 * d2).unwrap();
        let large = decode_sparse_fp(&inst, d2).unwrap();
        for k in 0..8 {
            assert!(small.stats.nodes_per_level[k] <= large.stats.nodes_per_level[k]);
        }
    }

    #[test]
    fn sparse_counts_dominated_by_classical() {
        let spec = GenSpec { m: 8, n: 8, alphabet: Alphabet::binary01(), l: 2, snr_db: 5.0, seed: 13 };
        let (inst, _) = generate_instance(&spec).unwrap();
        let d2 = choose_radius(8, inst.sigma2, 0.99).unwrap();
        let sparse = decode_sparse_fp(&inst, d2).unwrap();
        let classical = decode_sparse_fp(&inst.with_sparsity(8), d2).unwrap();
        for k in 0..8 {
            assert!(sparse.stats.nodes_per_level[k] <= classical.stats.nodes_per_level[k]);
        }
    }

    #[test]
    fn se_visits_no_more_nodes_than_fp_at_equal_radius() {
        for seed in 0..25 {
            let spec = GenSpec { m: 12, n: 12, alphabet: Alphabet::binary01(), l: 4, snr_db: 10.0, seed };
            let (inst, _) = generate_instance(&spec).unwrap();
            let d2 = choose_radius(12, inst.sigma2, 0.99).unwrap();
            let prep = prepare(&inst).unwrap();
            let fp = Engine::new(&inst, &prep, EngineCfg::fp(&inst.alphabet), d2 - prep.rho).run();
            let se = Engine::new(&inst, &prep, EngineCfg::se(), d2 - prep.rho).run();
            assert!(se.1.total_nodes() <= fp.1.total_nodes());
            // both exact when the sphere is nonempty
            if let (Some(a), Some(b)) = (&fp.0, &se.0) {
                assert_eq!(a.0, b.0);
                assert_eq!(a.1, b.1);
            }
        }
    }

    #[test]
    fn classical_equals_sparse_when_constraint_vacuous() {
        let spec = GenSpec { m: 6, n: 8, alphabet: Alphabet::ternary(), l: 6, snr_db: 10.0, seed: 21 };
        let (inst, _) = generate_instance(&spec).unwrap();
        let a = decode_sparse(&inst, 0.99).unwrap();
        let b = decode_classical(&inst, 0.99).unwrap();
        assert_eq!(a.x_hat, b.x_hat);
        assert_eq!(a.residual2, b.residual2);
    }
}
