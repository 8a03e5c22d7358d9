//! Structured approximations of the empirical Fisher information matrix of a
//! matrix-shaped parameter, and the optimizers built on them.
//!
//! * [`matlib`]: dense column-major kernels (eigen, QR, matrix roots).
//! * [`fim`]: closed-form structure fits, dense materialization, brute-force
//!   oracles and the efficient preconditioner forms.
//! * [`optim`]: stateful per-parameter optimizers.
//! * [`harness`]: desk-scale problems, schedules and the training loop.
//! * [`verify`]: the analytic-versus-oracle certification suite.

pub mod error;
pub mod fim;
pub mod harness;
pub mod matlib;
pub mod optim;
pub mod par;
pub mod verify;

pub use error::{Error, Result};
pub use matlib::Matrix;
pub use par::Execution;
