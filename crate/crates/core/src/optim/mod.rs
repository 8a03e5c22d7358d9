//! Per-parameter optimizers. Every `step` returns the update `ΔW` that is
//! added to the parameter.

mod adam;
mod alice;
mod alicec;
mod compensation;
mod config;
mod galore;
mod limiter;
mod memory;
mod operators;
mod racs;
pub mod rng;
mod shampoo;
mod soap;
mod state;
mod switching;

pub use adam::{AdamConfig, AdamState};
pub use alice::{AliceConfig, AliceState};
pub use alicec::{AliceCConfig, AliceCState};
pub use compensation::{compensate, COMPENSATION_EPS, COMPENSATION_FLOOR};
pub use config::OptimizerConfig;
pub use galore::{GaloreConfig, GaloreState};
pub use limiter::{NormGrowthLimiter, DEFAULT_GAMMA};
pub use memory::{memory_estimate, OptimizerKind};
pub use operators::{normalize_op, whiten_op};
pub use racs::{RacsConfig, RacsState};
pub use shampoo::{RootMethod, ShampooConfig, ShampooState};
pub use soap::{SoapConfig, SoapState};
pub use state::{OptimizerState, ParamOptimizer, SNAPSHOT_VERSION};
pub use switching::{leading_basis, subspace_switch, switch_basis, RefreshMode};
