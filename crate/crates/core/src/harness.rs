//! Seeded Monte Carlo experiment runner: error rates, per-level node
//! counts, flop counts, empirical complexity exponents, and
//! theory-versus-simulation comparison tables. Trials are embarrassingly
//! parallel; aggregation is order-independent so parallel and serial runs
//! produce identical tables.

use crate::bound::omp_solve;
use crate::complexity::{expected_profile, AlphabetKind, ComplexityError};
use crate::decoder::{
    brute_force, decode_classical, decode_sparse, decode_sparse_fp, decode_sparse_lb,
    decode_sparse_se, residual_norm2, DecodeError, SearchStats,
};
use crate::model::{generate_instance, sigma2_for_snr, trial_seed, Alphabet, GenSpec, ModelError};
use crate::numerics::{choose_radius, NumericsError};
use crate::parallel::par_map;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Sparse,
    SparseSe,
    SparseLb,
    SparseLbSafe,
    Classical,
    OmpRound,
    BruteForce,
}

impl DecoderKind {
    pub fn label(self) -> &'static str {
        match self {
            DecoderKind::Sparse => "sparse",
            DecoderKind::SparseSe => "sparse_se",
            DecoderKind::SparseLb => "sparse_lb",
            DecoderKind::SparseLbSafe => "sparse_lb_safe",
            DecoderKind::Classical => "classical",
            DecoderKind::OmpRound => "omp",
            DecoderKind::BruteForce => "brute_force",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sparse" => DecoderKind::Sparse,
            "sparse_se" => DecoderKind::SparseSe,
            "sparse_lb" => DecoderKind::SparseLb,
            "sparse_lb_safe" => DecoderKind::SparseLbSafe,
            "classical" => DecoderKind::Classical,
            "omp" => DecoderKind::OmpRound,
            "brute_force" => DecoderKind::BruteForce,
            _ => return None,
        })
    }
}

/// Grid experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// (m, n) pairs; n >= m.
    pub dims: Vec<(usize, usize)>,
    pub sparsity: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub alphabet: Alphabet,
    pub decoders: Vec<DecoderKind>,
    pub trials: usize,
    /// When set, sparse and classical run the fixed-radius engine (no
    /// radius growth); empty-sphere trials are recorded separately.
    pub fixed_radius: bool,
    pub one_minus_eps: f64,
    pub base_seed: u64,
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::InvalidSpec("trials must be >= 1".into()));
        }
        if self.dims.is_empty() || self.sparsity.is_empty() || self.snr_db.is_empty() {
            return Err(HarnessError::InvalidSpec("grids must be non-empty".into()));
        }
        if self.decoders.is_empty() {
            return Err(HarnessError::InvalidSpec("need at least one decoder".into()));
        }
        if !(self.one_minus_eps > 0.0 && self.one_minus_eps < 1.0) {
            return Err(HarnessError::InvalidSpec("one_minus_eps must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// One decoded trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub seed: u64,
    pub decoder: DecoderKind,
    /// Number of components of x_hat differing from the true vector.
    pub error_count: usize,
    pub nodes_per_level: Vec<u64>,
    pub flops: u64,
    pub residual2: f64,
    pub wall_time: Duration,
    pub empty_sphere: bool,
    pub failed: bool,
}

/// Aggregated metrics for one grid cell and decoder.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub alphabet: String,
    pub snr_db: f64,
    pub decoder: DecoderKind,
    pub trials: usize,
    pub d2: Option<f64>,
    pub error_rate: f64,
    pub error_rate_stderr: f64,
    pub mean_nodes: f64,
    pub mean_flops: f64,
    pub empirical_exponent: f64,
    pub nodes_mean: Vec<f64>,
    pub nodes_stderr: Vec<f64>,
    pub empty_sphere_trials: usize,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentTable {
    pub cells: Vec<CellSummary>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentTable {
    pub fn cell(&self, decoder: DecoderKind) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.decoder == decoder)
    }

    /// Fixed-header summary, one row per grid cell per decoder.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,n,l,alphabet,snr_db,decoder,trials,d2,error_rate,error_rate_stderr,mean_nodes,mean_flops,empirical_e_c,empty_sphere_trials,failed_trials\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.m,
                c.n,
                c.l,
                c.alphabet,
                fmt_f(c.snr_db),
                c.decoder.label(),
                c.trials,
                c.d2.map(fmt_f).unwrap_or_default(),
                fmt_f(c.error_rate),
                fmt_f(c.error_rate_stderr),
                fmt_f(c.mean_nodes),
                fmt_f(c.mean_flops),
                fmt_f(c.empirical_exponent),
                c.empty_sphere_trials,
                c.failed_trials,
            );
        }
        out
    }

    /// Per-level node statistics in long format.
    pub fn to_levels_csv(&self) -> String {
        let mut out = String::from("m,n,l,alphabet,snr_db,decoder,level,mean_nodes,stderr\n");
        for c in &self.cells {
            for (k, (mean, se)) in c.nodes_mean.iter().zip(&c.nodes_stderr).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    c.m,
                    c.n,
                    c.l,
                    c.alphabet,
                    fmt_f(c.snr_db),
                    c.decoder.label(),
                    k + 1,
                    fmt_f(*mean),
                    fmt_f(*se),
                );
            }
        }
        out
    }
}

fn round_to_alphabet(alphabet: &Alphabet, dense: &[f64]) -> Vec<i64> {
    dense.iter().map(|&v| alphabet.nearest(v)).collect()
}

fn run_one_trial(
    gen: &GenSpec,
    decoder: DecoderKind,
    fixed_radius: bool,
    d2: Option<f64>,
    one_minus_eps: f64,
) -> TrialRecord {
    let start = std::time::Instant::now();
    let m = gen.m;
    let (inst, x_true) = match generate_instance(gen) {
        Ok(v) => v,
        Err(_) => {
            return TrialRecord {
                seed: gen.seed,
                decoder,
                error_count: m,
                nodes_per_level: vec![0; m],
                flops: 0,
                residual2: f64::NAN,
                wall_time: start.elapsed(),
                empty_sphere: false,
                failed: true,
            }
        }
    };
    let decoded: Result<(Vec<i64>, f64, SearchStats, bool), DecodeError> = (|| {
        Ok(match decoder {
            DecoderKind::Sparse if fixed_radius => {
                let out = decode_sparse_fp(&inst, d2.expect("fixed radius set"))?;
                match out.result {
                    Some(r) => (r.x_hat, r.residual2, out.stats, false),
                    None => (vec![0; m], f64::NAN, out.stats, true),
                }
            }
            DecoderKind::Classical if fixed_radius => {
                let relaxed = inst.with_sparsity(m);
                let out = decode_sparse_fp(&relaxed, d2.expect("fixed radius set"))?;
                match out.result {
                    Some(r) => (r.x_hat, r.residual2, out.stats, false),
                    None => (vec![0; m], f64::NAN, out.stats, true),
                }
            }
            DecoderKind::Sparse => {
                let r = decode_sparse(&inst, one_minus_eps)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::SparseSe => {
                let r = decode_sparse_se(&inst, one_minus_eps)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::SparseLb => {
                let r = decode_sparse_lb(&inst, one_minus_eps, false)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::SparseLbSafe => {
                let r = decode_sparse_lb(&inst, one_minus_eps, true)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::Classical => {
                let r = decode_classical(&inst, one_minus_eps)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::BruteForce => {
                let r = brute_force(&inst)?;
                (r.x_hat, r.residual2, r.stats, false)
            }
            DecoderKind::OmpRound => {
                let omp = omp_solve(&inst.h, &inst.y, inst.l);
                let x_hat = round_to_alphabet(&inst.alphabet, &omp.dense(m));
                let res = residual_norm2(&inst.h, &inst.y, &x_hat);
                let mut stats = SearchStats::new(m);
                let p = inst.n() as u64;
                let q = m as u64;
                let iters = omp.support.len().max(1) as u64;
                stats.flops = iters * (2 * p * q + 2 * p * iters + iters * iters);
                (x_hat, res, stats, false)
            }
        })
    })();
    match decoded {
        Ok((x_hat, residual2, stats, empty)) => {
            let error_count = if empty {
                m
            } else {
                x_hat.iter().zip(&x_true).filter(|(a, b)| a != b).count()
            };
            TrialRecord {
                seed: gen.seed,
                decoder,
                error_count,
                nodes_per_level: stats.nodes_per_level.clone(),
                flops: stats.flops,
                residual2,
                wall_time: start.elapsed(),
                empty_sphere: empty,
                failed: false,
            }
        }
        Err(_) => TrialRecord {
            seed: gen.seed,
            decoder,
            error_count: m,
            nodes_per_level: vec![0; m],
            flops: 0,
            residual2: f64::NAN,
            wall_time: start.elapsed(),
            empty_sphere: false,
            failed: true,
        },
    }
}

fn summarize(
    records: &[TrialRecord],
    m: usize,
    n: usize,
    l: usize,
    alphabet: &str,
    snr_db: f64,
    decoder: DecoderKind,
    d2: Option<f64>,
) -> CellSummary {
    let trials = records.len();
    let tf = trials as f64;
    let total_errors: usize = records.iter().map(|r| r.error_count).sum();
    let denom = (trials * m) as f64;
    let error_rate = total_errors as f64 / denom;
    let error_rate_stderr = (error_rate * (1.0 - error_rate) / denom).sqrt();
    let mut nodes_mean = vec![0.0; m];
    let mut nodes_sq = vec![0.0; m];
    let mut flops_sum = 0.0;
    for r in records {
        for k in 0..m {
            let v = r.nodes_per_level[k] as f64;
            nodes_mean[k] += v;
            nodes_sq[k] += v * v;
        }
        flops_sum += r.flops as f64;
    }
    let mut nodes_stderr = vec![0.0; m];
    for k in 0..m {
        let s = nodes_mean[k];
        nodes_mean[k] = s / tf;
        let var = if trials > 1 { ((nodes_sq[k] - s * s / tf) / (tf - 1.0)).max(0.0) } else { 0.0 };
        nodes_stderr[k] = (var / tf).sqrt();
    }
    let mean_flops = flops_sum / tf;
    let mean_nodes = nodes_mean.iter().sum::<f64>();
    let empirical_exponent = if mean_flops > 0.0 && m > 1 {
        mean_flops.ln() / (m as f64).ln()
    } else {
        f64::NEG_INFINITY
    };
    CellSummary {
        m,
        n,
        l,
        alphabet: alphabet.to_string(),
        snr_db,
        decoder,
        trials,
        d2,
        error_rate,
        error_rate_stderr,
        mean_nodes,
        mean_flops,
        empirical_exponent,
        nodes_mean,
        nodes_stderr,
        empty_sphere_trials: records.iter().filter(|r| r.empty_sphere).count(),
        failed_trials: records.iter().filter(|r| r.failed).count(),
    }
}

/// Run every grid cell and decoder over seeded trials. Deterministic in the
/// base seed: trial i uses `trial_seed(base_seed, i)` regardless of worker
/// count, so the same spec always produces identical tables.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable, HarnessError> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &(m, n) in &spec.dims {
        for &l in &spec.sparsity {
            if l > m {
                continue;
            }
            for &snr_db in &spec.snr_db {
                let gen0 = GenSpec {
                    m,
                    n,
                    alphabet: spec.alphabet.clone(),
                    l,
                    snr_db,
                    seed: 0,
                };
                let sigma2 = sigma2_for_snr(&gen0)?;
                let d2 = if spec.fixed_radius {
                    if sigma2 > 0.0 {
                        Some(choose_radius(n, sigma2, spec.one_minus_eps)?)
                    } else {
                        Some(0.0)
                    }
                } else {
                    None
                };
                for &decoder in &spec.decoders {
                    let records: Vec<TrialRecord> = par_map(spec.trials, spec.workers, |t| {
                        let mut gen = gen0.clone();
                        gen.seed = trial_seed(spec.base_seed, t as u64);
                        run_one_trial(&gen, decoder, spec.fixed_radius, d2, spec.one_minus_eps)
                    });
                    cells.push(summarize(
                        &records,
                        m,
                        n,
                        l,
                        spec.alphabet.name(),
                        snr_db,
                        decoder,
                        d2,
                    ));
                }
            }
        }
    }
    Ok(ExperimentTable { cells })
}

/// Relax-and-round baseline: solve the real-valued problem with OMP at
/// budget l and round each entry to the nearest alphabet symbol.
pub fn run_omp_baseline(spec: &ExperimentSpec) -> Result<ExperimentTable, HarnessError> {
    let mut s = spec.clone();
    s.decoders = vec![DecoderKind::OmpRound];
    run_experiment(&s)
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryRow {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub alphabet: String,
    pub snr_db: f64,
    pub level: usize,
    pub d2: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryTable {
    pub rows: Vec<TheoryRow>,
}

impl TheoryTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("m,n,l,alphabet,snr_db,level,d2,e_nk_analytic,nk_empirical,stderr,z,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.m,
                r.n,
                r.l,
                r.alphabet,
                fmt_f(r.snr_db),
                r.level,
                fmt_f(r.d2),
                fmt_f(r.analytic),
                fmt_f(r.empirical),
                fmt_f(r.stderr),
                fmt_f(r.z),
                r.pass,
            );
        }
        out
    }
}

/// Closed-form expected node counts against the fixed-radius empirical
/// means, with z-scores; a level passes at |z| <= 4.
pub fn compare_theory(spec: &ExperimentSpec) -> Result<TheoryTable, HarnessError> {
    if !spec.fixed_radius {
        return Err(HarnessError::InvalidSpec(
            "theory comparison requires fixed_radius mode".into(),
        ));
    }
    let kind = AlphabetKind::from_name(spec.alphabet.name())?;
    let mut sim_spec = spec.clone();
    sim_spec.decoders = vec![DecoderKind::Sparse];
    let table = run_experiment(&sim_spec)?;
    let mut rows = Vec::new();
    for cell in &table.cells {
        let sigma2 = sigma2_for_snr(&GenSpec {
            m: cell.m,
            n: cell.n,
            alphabet: spec.alphabet.clone(),
            l: cell.l,
            snr_db: cell.snr_db,
            seed: 0,
        })?;
        let d2 = cell.d2.expect("fixed radius");
        let analytic = expected_profile(kind, cell.m, cell.n, cell.l, sigma2, d2)?;
        for k in 1..=cell.m {
            let e = analytic[k - 1];
            let emp = cell.nodes_mean[k - 1];
            let se = cell.nodes_stderr[k - 1];
            let z = if se > 0.0 {
                (emp - e) / se
            } else if (emp - e).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            rows.push(TheoryRow {
                m: cell.m,
                n: cell.n,
                l: cell.l,
                alphabet: cell.alphabet.clone(),
                snr_db: cell.snr_db,
                level: k,
                d2,
                analytic: e,
                empirical: emp,
                stderr: se,
                z,
                pass: z.abs() <= 4.0,
            });
        }
    }
    Ok(TheoryTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        ExperimentSpec {
            dims: vec![(6, 6)],
            sparsity: vec![2],
            snr_db: vec![10.0],
            alphabet: Alphabet::binary01(),
            decoders: vec![DecoderKind::Sparse, DecoderKind::Classical],
            trials: 40,
            fixed_radius: false,
            one_minus_eps: 0.99,
            base_seed: 1234,
            workers: None,
        }
    }

    #[test]
    fn rerun_is_byte_identical() {
        let spec = tiny_spec();
        let a = run_experiment(&spec).unwrap().to_csv();
        let b = run_experiment(&spec).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_and_serial_agree() {
        let mut spec = tiny_spec();
        let par = run_experiment(&spec).unwrap().to_csv();
        spec.workers = Some(1);
        let ser = run_experiment(&spec).unwrap().to_csv();
        assert_eq!(par, ser);
    }

    #[test]
    fn noiseless_error_rate_is_zero() {
        let mut spec = tiny_spec();
        spec.snr_db = vec![f64::INFINITY];
        spec.trials = 5;
        let t = run_experiment(&spec).unwrap();
        for c in &t.cells {
            assert_eq!(c.error_rate, 0.0, "{}", c.decoder.label());
        }
    }

    #[test]
    fn omp_budget_zero_decodes_all_zero() {
        let mut spec = tiny_spec();
        spec.sparsity = vec![0];
        spec.decoders = vec![DecoderKind::OmpRound];
        spec.trials = 10;
        let t = run_experiment(&spec).unwrap();
        // with l = 0 the truth is the zero vector, so the error rate is 0
        assert_eq!(t.cells[0].error_rate, 0.0);
    }

    #[test]
    fn fixed_radius_counts_shrink_with_radius() {
        // paired seeds: run at 1-eps 0.99 and a smaller quantile
        let mut spec = tiny_spec();
        spec.fixed_radius = true;
        spec.decoders = vec![DecoderKind::Sparse];
        spec.trials = 30;
        let big = run_experiment(&spec).unwrap();
        spec.one_minus_eps = 0.5;
        let small = run_experiment(&spec).unwrap();
        for k in 0..6 {
            assert!(small.cells[0].nodes_mean[k] <= big.cells[0].nodes_mean[k] + 1e-12);
        }
    }

    #[test]
    fn theory_comparison_small_grid_passes() {
        let spec = ExperimentSpec {
            dims: vec![(6, 6)],
            sparsity: vec![2],
            snr_db: vec![10.0],
            alphabet: Alphabet::binary01(),
            decoders: vec![DecoderKind::Sparse],
            trials: 400,
            fixed_radius: true,
            one_minus_eps: 0.99,
            base_seed: 99,
            workers: None,
        };
        let t = compare_theory(&spec).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert!(t.all_pass(), "{}", t.to_csv());
    }
}
