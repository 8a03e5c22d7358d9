use std::time::Instant;

use crate::error::{ensure, Result};
use crate::matlib::Matrix;
use crate::optim::{AdamConfig, OptimizerConfig, ParamOptimizer};
use crate::par::{self, Execution};

use super::problem::Problem;
use super::record::{RunRecord, RunRow};
use super::schedule::Schedule;

/// Losses above this count as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub steps: u64,
    pub seed: u64,
    /// Fill `elapsed_ms`; off gives records that are bit-identical across runs.
    pub record_time: bool,
    /// Step distinct parameters on the rayon pool.
    pub exec: Execution,
}

impl TrainOptions {
    pub fn new(steps: u64, seed: u64) -> Self {
        Self {
            steps,
            seed,
            record_time: true,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub params: Vec<Matrix>,
    /// Stored floats over all parameters, as counted by the optimizers.
    pub memory_floats: u64,
}

struct Slot {
    opt: ParamOptimizer,
    param: Matrix,
    grad: Matrix,
}

/// Clips the rank of low-rank methods to the smaller side of one parameter.
fn fit_to_shape(cfg: &OptimizerConfig, rows: usize, cols: usize) -> OptimizerConfig {
    let side = rows.min(cols);
    let mut cfg = cfg.clone();
    match &mut cfg {
        OptimizerConfig::Alice(c) | OptimizerConfig::Alice0(c) => {
            c.rank = c.rank.min(side);
            c.leading = c.leading.min(c.rank);
        }
        OptimizerConfig::Galore(c) => c.rank = c.rank.min(side),
        _ => {}
    }
    cfg
}

/// Runs `opts.steps` optimizer steps. Matrix parameters use `optimizer`,
/// vector-like ones use default Adam. Row `t` logs the loss and gradient
/// the `t`-th update was computed from; the run stops at the first
/// non-finite or exploding loss or gradient.
pub fn train(
    problem: &Problem,
    optimizer: &OptimizerConfig,
    schedule: &Schedule,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    schedule.validate()?;
    optimizer.validate()?;
    ensure!(opts.steps >= 1, Config, "steps must be at least 1");
    ensure!(
        opts.steps <= schedule.total_steps,
        Config,
        "run of {} steps exceeds schedule length {}",
        opts.steps,
        schedule.total_steps
    );
    let bias_cfg = OptimizerConfig::Adam(AdamConfig::default());
    let mut slots = problem
        .params()
        .iter()
        .zip(problem.init(opts.seed))
        .enumerate()
        .map(|(layer, (spec, param))| {
            let cfg = if spec.matrix {
                fit_to_shape(optimizer, spec.rows, spec.cols)
            } else {
                bias_cfg.clone()
            };
            let opt = ParamOptimizer::new(&cfg, spec.rows, spec.cols, opts.seed, layer as u64)?;
            Ok(Slot {
                opt,
                grad: Matrix::zeros(spec.rows, spec.cols),
                param,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let memory_floats = slots.iter().map(|s| s.opt.memory_floats()).sum();

    let start = Instant::now();
    let mut record = RunRecord::default();
    for t in 1..=opts.steps {
        let lr = schedule.lr_at(t)?;
        let params: Vec<Matrix> = slots.iter().map(|s| s.param.clone()).collect();
        let (loss, grads) = problem.loss_grad(&params)?;
        let grad_norm = grads.iter().map(Matrix::frobenius_sq).sum::<f64>().sqrt();
        let elapsed_ms = if opts.record_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        record.rows.push(RunRow {
            step: t,
            loss,
            grad_norm,
            lr,
            elapsed_ms,
        });
        if !loss.is_finite() || loss > DIVERGENCE_LOSS || !grad_norm.is_finite() {
            record.diverged_at = Some(t);
            record.final_loss = loss;
            break;
        }
        for (s, g) in slots.iter_mut().zip(grads) {
            s.grad = g;
        }
        let results = par::map_mut(opts.exec, &mut slots, |s| {
            let d = s.opt.step(&s.grad, lr)?;
            s.param.axpby(1.0, 1.0, &d)
        });
        results.into_iter().collect::<Result<Vec<_>>>()?;
    }
    let params: Vec<Matrix> = slots.into_iter().map(|s| s.param).collect();
    if record.diverged_at.is_none() {
        record.final_loss = problem.loss(&params)?;
    }
    Ok(TrainOutcome {
        record,
        params,
        memory_floats,
    })
}
