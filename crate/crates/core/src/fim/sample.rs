use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{vec, Matrix};
use crate::par::{self, Execution};

/// Largest `m·n` for which the dense FIM may be formed.
pub const MAX_DENSE_DIM: usize = 64;

/// A non-empty set of equally shaped, finite gradient matrices. Expectations
/// are plain sample means.
#[derive(Debug, Clone)]
pub struct GradientSample {
    mats: Vec<Matrix>,
    exec: Execution,
}

impl GradientSample {
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        ensure!(!mats.is_empty(), Precondition, "empty gradient sample");
        let shape = mats[0].shape();
        for (i, g) in mats.iter().enumerate() {
            ensure!(
                g.shape() == shape,
                Dimension,
                "sample {i} is {:?}, expected {shape:?}",
                g.shape()
            );
            ensure!(g.is_finite(), Numeric, "sample {i} has non-finite entries");
        }
        Ok(Self {
            mats,
            exec: Execution::default(),
        })
    }

    pub fn single(g: Matrix) -> Result<Self> {
        Self::new(vec![g])
    }

    /// Chooses how per-sample reductions are evaluated.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.mats[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.mats[0].cols()
    }

    /// Mean of `f(G)` over the sample. Terms are computed in parallel and
    /// summed in sample order, so the result does not depend on scheduling.
    pub fn mean_of(&self, f: impl Fn(&Matrix) -> Matrix + Sync + Send) -> Matrix {
        let terms = par::map(self.exec, &self.mats, f);
        let mut acc = terms[0].clone();
        for t in &terms[1..] {
            acc.axpby(1.0, 1.0, t).expect("mapped terms share a shape");
        }
        acc.scale(1.0 / self.mats.len() as f64)
    }

    /// `E[G·Gᵀ]`.
    pub fn mean_ggt(&self) -> Matrix {
        self.mean_of(Matrix::gram_rows)
    }

    /// `E[Gᵀ·G]`.
    pub fn mean_gtg(&self) -> Matrix {
        self.mean_of(Matrix::gram_cols)
    }

    /// `E[G⊙²]`.
    pub fn mean_sq(&self) -> Matrix {
        self.mean_of(Matrix::square)
    }
}

/// Dense `E[vec(G)·vec(G)ᵀ]`, only formed at desk scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFim {
    pub f: Matrix,
    pub rows: usize,
    pub cols: usize,
}

pub fn build_empirical_fim(samples: &GradientSample) -> Result<EmpiricalFim> {
    let (m, n) = (samples.rows(), samples.cols());
    ensure!(
        m * n <= MAX_DENSE_DIM,
        Refused,
        "dense FIM of a {m}x{n} parameter exceeds the {MAX_DENSE_DIM}-entry guard"
    );
    let f = samples.mean_of(|g| {
        let v = Matrix::column_vector(&vec(g));
        v.gram_rows()
    });
    Ok(EmpiricalFim {
        f,
        rows: m,
        cols: n,
    })
}
