use std::io::Write;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "step,loss,grad_norm,lr,elapsed_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub step: u64,
    /// Loss at the parameters the gradient of this step was taken at.
    pub loss: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    /// Loss after the last completed update.
    pub final_loss: f64,
    pub diverged_at: Option<u64>,
}

impl RunRecord {
    pub fn initial_loss(&self) -> Option<f64> {
        self.rows.first().map(|r| r.loss)
    }

    /// First step whose loss is at most `frac` times the initial loss.
    pub fn steps_to_fraction(&self, frac: f64) -> Option<u64> {
        let target = self.initial_loss()? * frac;
        self.rows
            .iter()
            .find(|r| r.loss <= target)
            .map(|r| r.step)
            .or_else(|| {
                (self.diverged_at.is_none() && self.final_loss <= target)
                    .then(|| self.rows.last().map_or(0, |r| r.step + 1))
            })
    }

    /// Equality ignoring wall-clock timings.
    pub fn same_trajectory(&self, other: &RunRecord) -> bool {
        self.final_loss.to_bits() == other.final_loss.to_bits()
            && self.diverged_at == other.diverged_at
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.step == b.step
                    && a.loss.to_bits() == b.loss.to_bits()
                    && a.grad_norm.to_bits() == b.grad_norm.to_bits()
                    && a.lr.to_bits() == b.lr.to_bits()
            })
    }

    /// Writes the CSV body: header, one row per step, and a trailing
    /// `# diverged at step N` comment when the run diverged. Reals use the
    /// shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:.3}",
                r.step, r.loss, r.grad_norm, r.lr, r.elapsed_ms
            )?;
        }
        if let Some(step) = self.diverged_at {
            writeln!(w, "# diverged at step {step}")?;
        }
        Ok(())
    }
}
