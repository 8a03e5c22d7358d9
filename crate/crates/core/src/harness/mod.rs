//! Desk-scale problems with analytic gradients, learning-rate schedules and
//! the training loop.

mod problem;
mod record;
mod schedule;
mod train;

pub use problem::{
    MatrixRegression, ParamSpec, Problem, ProblemSpec, SyntheticGradientStream, TinyMlp,
};
pub use record::{RunRecord, RunRow, CSV_HEADER};
pub use schedule::Schedule;
pub use train::{train, TrainOptions, TrainOutcome, DIVERGENCE_LOSS};
