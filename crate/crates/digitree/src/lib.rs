//! Random digital trees: simulation, exact joint moments, log-periodic
//! asymptotics, and bivariate normality diagnostics.
//!
//! The crate studies how the size S (internal node count) and the key path
//! length K (sum of external-node depths) of random tries, PATRICIA tries
//! and bucket digital search trees depend on each other:
//!
//! - [`model`] / [`simulate`]: tree-model specifications, exact shapes of
//!   explicit key sets, and reproducible count-splitting simulation.
//! - [`moments`]: exact E, Var, Cov, rho series for S, K (and the node path
//!   length N for tries) by solving the splitting recurrences.
//! - [`spectrum`] / [`coeffs`] / [`periodic`]: entropy and oscillation
//!   spectra, closed-form Fourier coefficients of the limiting periodic
//!   functions, and the correlation / variance asymptotes built from them.
//! - [`matrix`] / [`mc`]: SPD 2x2 square roots, Monte-Carlo moment
//!   estimation, whitening of (S, K) samples, and normality checks.
//!
//! Monte-Carlo trials are deterministic in `(model, n, trials, seed)` and
//! independent of worker count; the `parallel` feature (default) runs them
//! on rayon, and the sequential reference path is always available.

pub mod coeffs;
pub mod error;
pub mod matrix;
pub mod mc;
pub mod model;
pub mod moments;
pub mod periodic;
pub mod simulate;
pub mod special;
pub mod spectrum;

pub use coeffs::{
    general_binary_cov_coeffs, sym_mary_trie_coeffs, sym_patricia_coeffs, CoeffFamily,
    CoeffSeries, FourierCoefficientSet, TailReport,
};
pub use error::{Error, Result};
pub use matrix::{sqrt_spd_2x2, CovMatrix2, WhiteningMatrix};
pub use mc::{
    joint_histogram, mc_moments, normality_check, standard_normal_pairs, whiten, whiten_pairs,
    Histogram2d, NormalityConfig, NormalityReport, SampleSet, SampleSummary,
};
pub use model::{shape_of_keys, KeyFamily, KeySet, ModelSpec, ShapeStats, TreeFamily};
pub use moments::{
    corr_series, covariance_matrix, moment_table_binary_trie, moment_table_bucket_dst,
    moment_table_mary_trie_symmetric, MomentTable,
};
pub use periodic::{
    fourier_eval, mean_correlation_sym_patricia, mean_correlation_sym_trie, rho_asymptotic,
    variance_asymptote, CoeffTriple, VarianceAsymptote,
};
pub use simulate::{sample_shapes, sample_shapes_seq, simulate_shape, trial_seed};
pub use spectrum::{
    entropy, lambda_log_ratio_form, lambda_moment_form, Rationality, SpectrumParams,
};
