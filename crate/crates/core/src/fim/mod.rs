//! Structured approximations `F̃` of the empirical FIM
//! `F = E[vec(G)·vec(G)ᵀ]` of one matrix parameter.

mod apply;
mod dense;
mod factor;
mod fit;
mod oracle;
mod sample;

pub use apply::apply_preconditioner;
pub use dense::{materialize, structure_loss};
pub use factor::StructuredFactor;
pub use fit::{
    column_second_moments, fit_compensation_scale, fit_diagonal, fit_general_blockdiag,
    fit_general_scaled, fit_general_scaled_from, fit_kronecker_shampoo, fit_normalization,
    fit_shampoo_right, fit_shared_eigen, fit_shared_eigen_with, fit_soap, fit_soap_with,
    fit_two_sided, fit_whitening, general_m_step, general_s_step, residual_energy,
    two_sided_iterate, GeneralScaled, POSITIVITY_FLOOR, TWO_SIDED_DEFAULT_ITERS,
};
pub use oracle::{compensation_target, oracle_minimize, Family, OracleOptions, OracleOutcome};
pub use sample::{build_empirical_fim, EmpiricalFim, GradientSample, MAX_DENSE_DIM};
