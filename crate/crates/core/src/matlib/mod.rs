//! Dense small-matrix kernels and matrix-shape operators.

mod diag;
pub(crate) mod eigen;
mod kron;
mod matrix;
mod qr;
pub mod random;
mod roots;
mod subspace;

pub use diag::{devec, diag, diagb, diagm, diagv, vec};
pub use eigen::{sym_eig, SymEigen};
pub use kron::{kron, kron_apply};
pub use matrix::{dot, norm2, Matrix};
pub use qr::{qr, qr_complement, Qr};
pub(crate) use roots::pinv_cutoff;
pub use roots::{
    inv_sqrt, newton_schulz_inv_fourth_root, newton_schulz_inv_sqrt, psd_check, sqrt_psd, sym_pow,
    NewtonSchulz, NS_DEFAULT_STEPS, PINV_ATOL, PINV_RTOL,
};
pub use subspace::subspace_iteration;
