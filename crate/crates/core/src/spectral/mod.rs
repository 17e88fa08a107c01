//! Exact spectral computations on small quotients: generator matrices, the
//! top eigenvalue of `t_m L_m + aV`, the Feynman–Kac bound, the variational
//! formula, the path lemma and the exact law of time integrals.
//!
//! Explicit matrices are limited to `2^12` states; up to `2^16` states the
//! generator is applied matrix-free and eigenvalues and exponentials are
//! obtained by Lanczos iteration.

mod checks;
mod lanczos;
mod operator;
mod pathspace;

pub use checks::{
    chebyshev_fk_bound, count_function, feynman_kac_log, group_average_function, inclusion_constant,
    is_invariant_function, path_lemma_check, random_invariant_function, spectral_record, variational_check,
    PathLemmaCheck, SpectralRecord, VariationalCheck,
};
pub use lanczos::{largest_eigenvalue, largest_eigenvalue_dense, log_mean_exponential, EigenEstimate};
pub use operator::{build_generator, tabulate, DenseOperator, GeneratorOp, LinearOp, StateSpace};
pub use pathspace::{exact_exceedance, sector_exceedance, ExactExceedance, PATHSPACE_MAX_SITES};

/// Residual tolerance of eigenvalue iterations.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance of exact identities.
pub const IDENTITY_ABS_TOLERANCE: f64 = 1e-12;
/// Relative tolerance of exact identities.
pub const IDENTITY_REL_TOLERANCE: f64 = 1e-9;
/// Largest quotient with an explicit generator matrix.
pub const DENSE_MAX_SITES: usize = 12;
/// Largest quotient with a matrix-free generator.
pub const MATRIX_FREE_MAX_SITES: usize = 16;
/// Largest state space for the variational check.
pub const VARIATIONAL_MAX_DIM: usize = 1 << 12;
