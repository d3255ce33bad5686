//! Sparsity-aware sphere decoding for integer least-squares problems.
//!
//! Solves `min ||y - H x||^2` over a finite integer alphabet subject to an
//! l0 constraint `||x||_0 <= l`, by branch-and-bound tree search with both
//! sphere and sparsity pruning. Alongside the decoders the crate provides
//! closed-form expected search complexity for binary and ternary alphabets,
//! a Monte Carlo harness that validates the theory, a relaxed lower-bound
//! pruning accelerator, and a sparse channel estimation application.
//!
//! Trials in the harness run data-parallel through rayon; disable the
//! default `parallel` feature for a fully sequential build.

pub mod bound;
pub mod channel;
pub mod complexity;
pub mod decoder;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod parallel;

pub use bound::{lower_bound, lower_bound_audit, omp_solve, OmpResult};
pub use channel::{build_toeplitz, estimate_channel, run_channel_experiment, ChannelInstance};
pub use complexity::{
    count_binary, count_ternary, expected_nodes_binary, expected_nodes_ternary,
    expected_nodes_unaware, joint_prob_equal, pair_count, total_cost, variance_mc,
    ComplexityReport,
};
pub use decoder::{
    brute_force, decode_classical, decode_sparse, decode_sparse_fp, decode_sparse_lb,
    decode_sparse_se, residual_norm2, DecodeResult, SearchStats,
};
pub use harness::{compare_theory, run_experiment, run_omp_baseline, ExperimentSpec};
pub use model::{
    enumerate_sparse, generate_instance, prefix_prior_binary, prefix_prior_ternary, Alphabet,
    GenSpec, IlsInstance,
};
pub use numerics::{binomial, choose_radius, qr_decompose, regularized_gamma, Mat, QrFactors};
