//! TOML run and comparison configurations.

use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use fimopt::harness::{ProblemSpec, Schedule};
use fimopt::optim::OptimizerConfig;
use serde::Deserialize;

/// Learning-rate schedule block; `total_steps` defaults to the run length.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub base_lr: f64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
    #[serde(default = "default_final")]
    pub final_frac: f64,
    pub total_steps: Option<u64>,
}

fn default_warmup() -> f64 {
    0.1
}
fn default_final() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_threshold() -> f64 {
    1e-3
}

impl ScheduleSection {
    pub fn build(&self, steps: u64, lr: Option<f64>) -> Result<Schedule> {
        let s = Schedule {
            base_lr: lr.unwrap_or(self.base_lr),
            warmup_frac: self.warmup_frac,
            final_frac: self.final_frac,
            total_steps: self.total_steps.unwrap_or(steps),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub steps: u64,
    /// CSV path relative to the output directory.
    pub output: String,
    #[serde(default = "default_true")]
    pub record_time: bool,
    pub problem: ProblemSpec,
    pub schedule: ScheduleSection,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareEntry {
    pub name: String,
    /// Overrides `schedule.base_lr` for this entry.
    pub lr: Option<f64>,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub seed: u64,
    pub steps: u64,
    /// Loss fraction of the initial loss used for `steps_to_threshold`.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_true")]
    pub record_time: bool,
    pub problem: ProblemSpec,
    pub schedule: ScheduleSection,
    pub runs: Vec<CompareEntry>,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            bail!("steps must be at least 1");
        }
        self.schedule.build(self.steps, None)?;
        self.optimizer.validate()?;
        check_relative(&self.output)?;
        Ok(())
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs.len() < 2 {
            bail!("compare needs at least two runs, found {}", self.runs.len());
        }
        if self.steps == 0 {
            bail!("steps must be at least 1");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must be in (0, 1)");
        }
        let mut seen = std::collections::HashSet::new();
        for r in &self.runs {
            check_relative(&format!("{}.csv", r.name))?;
            if r.name.contains(['/', '\\']) || r.name == "summary" {
                bail!("run name {:?} is not a plain file stem", r.name);
            }
            if !seen.insert(&r.name) {
                bail!("duplicate run name {:?}", r.name);
            }
            r.optimizer.validate()?;
            self.schedule.build(self.steps, r.lr)?;
        }
        Ok(())
    }
}

/// Rejects paths that would escape the output directory.
pub fn check_relative(p: &str) -> Result<PathBuf> {
    let path = PathBuf::from(p);
    if p.is_empty()
        || path
            .components()
            .any(|c| !matches!(c, Component::Normal(_)))
    {
        bail!("output path {p:?} must be a relative path inside the output directory");
    }
    Ok(path)
}
