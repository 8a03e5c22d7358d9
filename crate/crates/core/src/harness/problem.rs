use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::{random, Matrix};

/// One trainable tensor. `matrix == false` marks vector-like parameters
/// (biases) that are always trained with Adam.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub matrix: bool,
}

/// `min_W ‖XW − Y‖²/(2N)` with a realizable target `Y = X·W*`.
#[derive(Debug, Clone)]
pub struct MatrixRegression {
    pub x: Matrix,
    pub y: Matrix,
    pub w_star: Matrix,
}

impl MatrixRegression {
    /// Design columns are scaled log-uniformly so the Hessian `XᵀX/N` has
    /// condition number about `cond`.
    pub fn random(seed: u64, samples: usize, rows: usize, cols: usize, cond: f64) -> Result<Self> {
        ensure!(
            samples >= 1 && rows >= 1 && cols >= 1,
            Config,
            "regression sizes must be positive"
        );
        ensure!(
            cond >= 1.0 && cond.is_finite(),
            Config,
            "cond must be at least 1"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales: Vec<f64> = (0..rows)
            .map(|i| {
                let f = if rows > 1 {
                    i as f64 / (rows - 1) as f64
                } else {
                    0.0
                };
                cond.powf(-0.5 * f)
            })
            .collect();
        let x =
            random::gaussian(&mut rng, samples, rows).scale_rows_cols(&vec![1.0; samples], &scales);
        let w_star = random::gaussian(&mut rng, rows, cols);
        let y = x.matmul(&w_star)?;
        Ok(Self { x, y, w_star })
    }

    pub fn from_data(x: Matrix, y: Matrix) -> Result<Self> {
        ensure!(
            x.rows() == y.rows(),
            Dimension,
            "X has {} rows, Y has {}",
            x.rows(),
            y.rows()
        );
        let w_star = Matrix::zeros(x.cols(), y.cols());
        Ok(Self { x, y, w_star })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.cols(), self.y.cols())
    }

    fn residual(&self, w: &Matrix) -> Result<Matrix> {
        self.x.matmul(w)?.sub(&self.y)
    }

    pub fn loss(&self, w: &Matrix) -> Result<f64> {
        Ok(self.residual(w)?.frobenius_sq() / (2.0 * self.x.rows() as f64))
    }

    pub fn grad(&self, w: &Matrix) -> Result<Matrix> {
        Ok(self
            .x
            .t_matmul(&self.residual(w)?)?
            .scale(1.0 / self.x.rows() as f64))
    }
}

/// Gradient source `G_t = A·Z_t·B + η·N_t` with fixed factors and fresh
/// standard Gaussian `Z_t`, `N_t`. Has no loss.
#[derive(Debug, Clone)]
pub struct SyntheticGradientStream {
    pub a: Matrix,
    pub b: Matrix,
    pub eta: f64,
}

impl SyntheticGradientStream {
    pub fn new(a: Matrix, b: Matrix, eta: f64) -> Self {
        Self { a, b, eta }
    }

    pub fn random(seed: u64, rows: usize, cols: usize, latent: usize, eta: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::gaussian(&mut rng, rows, latent);
        let b = random::gaussian(&mut rng, latent, cols).scale(1.0 / (latent as f64).sqrt());
        Self { a, b, eta }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.rows(), self.b.cols())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let z = random::gaussian(rng, self.a.cols(), self.b.rows());
        let base = self
            .a
            .matmul(&z)
            .and_then(|x| x.matmul(&self.b))
            .expect("factor shapes fixed at construction");
        let (m, n) = self.shape();
        let noise = random::gaussian(rng, m, n);
        base.zip_map(&noise, |x, e| x + self.eta * e)
    }

    /// `E[GGᵀ] = tr(BBᵀ)·AAᵀ + η²·n·I`.
    pub fn expected_ggt(&self) -> Matrix {
        let trace = self.b.frobenius_sq();
        let n = self.b.cols() as f64;
        let mut out = self.a.gram_rows().scale(trace);
        for i in 0..out.rows() {
            out[(i, i)] += self.eta * self.eta * n;
        }
        out
    }
}

/// One hidden tanh layer with softmax cross-entropy on Gaussian blobs.
/// Parameters: `W1 (d×h)`, `b1 (1×h)`, `W2 (h×c)`, `b2 (1×c)`.
#[derive(Debug, Clone)]
pub struct TinyMlp {
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub hidden: usize,
    pub classes: usize,
}

impl TinyMlp {
    pub fn blobs(
        seed: u64,
        inputs: usize,
        hidden: usize,
        classes: usize,
        per_class: usize,
        spread: f64,
    ) -> Result<Self> {
        ensure!(
            inputs >= 1 && hidden >= 1 && classes >= 2 && per_class >= 1,
            Config,
            "mlp sizes out of range"
        );
        ensure!(
            inputs.max(hidden).max(classes) <= 64,
            Config,
            "mlp dimensions are capped at 64"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = random::gaussian(&mut rng, classes, inputs).scale(2.0);
        let n = classes * per_class;
        let mut labels = Vec::with_capacity(n);
        let mut x = Matrix::zeros(n, inputs);
        for k in 0..n {
            let c = k % classes;
            labels.push(c);
            for j in 0..inputs {
                let e: f64 = rng.sample(StandardNormal);
                x[(k, j)] = centers[(c, j)] + spread * e;
            }
        }
        Ok(Self {
            x,
            labels,
            hidden,
            classes,
        })
    }

    pub fn params(&self) -> Vec<ParamSpec> {
        let d = self.x.cols();
        vec![
            ParamSpec {
                name: "w1",
                rows: d,
                cols: self.hidden,
                matrix: true,
            },
            ParamSpec {
                name: "b1",
                rows: 1,
                cols: self.hidden,
                matrix: false,
            },
            ParamSpec {
                name: "w2",
                rows: self.hidden,
                cols: self.classes,
                matrix: true,
            },
            ParamSpec {
                name: "b2",
                rows: 1,
                cols: self.classes,
                matrix: false,
            },
        ]
    }

    fn forward(&self, p: &[Matrix]) -> Result<(Matrix, Matrix, f64)> {
        ensure!(p.len() == 4, Dimension, "mlp expects 4 parameters");
        let add_row = |z: Matrix, b: &Matrix| {
            Matrix::from_fn(z.rows(), z.cols(), |i, j| z[(i, j)] + b[(0, j)])
        };
        let h = add_row(self.x.matmul(&p[0])?, &p[1]).map(f64::tanh);
        let logits = add_row(h.matmul(&p[2])?, &p[3]);
        let n = self.x.rows();
        let mut probs = logits.clone();
        let mut loss = 0.0;
        for i in 0..n {
            let top = (0..self.classes)
                .map(|j| logits[(i, j)])
                .fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = (0..self.classes)
                .map(|j| (logits[(i, j)] - top).exp())
                .sum();
            for j in 0..self.classes {
                probs[(i, j)] = (logits[(i, j)] - top).exp() / z;
            }
            loss += z.ln() + top - logits[(i, self.labels[i])];
        }
        Ok((h, probs, loss / n as f64))
    }

    pub fn loss(&self, p: &[Matrix]) -> Result<f64> {
        Ok(self.forward(p)?.2)
    }

    pub fn loss_grad(&self, p: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        let (h, probs, loss) = self.forward(p)?;
        let n = self.x.rows() as f64;
        let mut dz2 = probs;
        for (i, &c) in self.labels.iter().enumerate() {
            dz2[(i, c)] -= 1.0;
        }
        let dz2 = dz2.scale(1.0 / n);
        let dw2 = h.t_matmul(&dz2)?;
        let db2 = Matrix::from_col_major(1, self.classes, dz2.col_sums())?;
        let dh = dz2.matmul_t(&p[2])?;
        let dz1 = dh.zip_map(&h, |g, a| g * (1.0 - a * a));
        let dw1 = self.x.t_matmul(&dz1)?;
        let db1 = Matrix::from_col_major(1, self.hidden, dz1.col_sums())?;
        Ok((loss, vec![dw1, db1, dw2, db2]))
    }

    pub fn init(&self, seed: u64) -> Vec<Matrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6c_7000);
        let d = self.x.cols();
        vec![
            random::gaussian(&mut rng, d, self.hidden).scale(1.0 / (d as f64).sqrt()),
            Matrix::zeros(1, self.hidden),
            random::gaussian(&mut rng, self.hidden, self.classes)
                .scale(1.0 / (self.hidden as f64).sqrt()),
            Matrix::zeros(1, self.classes),
        ]
    }
}

/// A trainable problem.
#[derive(Debug, Clone)]
pub enum Problem {
    MatrixRegression(MatrixRegression),
    TinyMlp(TinyMlp),
}

impl Problem {
    pub fn params(&self) -> Vec<ParamSpec> {
        match self {
            Problem::MatrixRegression(p) => {
                let (rows, cols) = p.shape();
                vec![ParamSpec {
                    name: "w",
                    rows,
                    cols,
                    matrix: true,
                }]
            }
            Problem::TinyMlp(p) => p.params(),
        }
    }

    /// Regression starts from zero, the MLP from a seeded scaled Gaussian.
    pub fn init(&self, seed: u64) -> Vec<Matrix> {
        match self {
            Problem::MatrixRegression(p) => {
                let (r, c) = p.shape();
                vec![Matrix::zeros(r, c)]
            }
            Problem::TinyMlp(p) => p.init(seed),
        }
    }

    pub fn loss(&self, params: &[Matrix]) -> Result<f64> {
        match self {
            Problem::MatrixRegression(p) => {
                ensure!(
                    params.len() == 1,
                    Dimension,
                    "regression expects one parameter"
                );
                p.loss(&params[0])
            }
            Problem::TinyMlp(p) => p.loss(params),
        }
    }

    pub fn loss_grad(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        match self {
            Problem::MatrixRegression(p) => {
                ensure!(
                    params.len() == 1,
                    Dimension,
                    "regression expects one parameter"
                );
                Ok((p.loss(&params[0])?, vec![p.grad(&params[0])?]))
            }
            Problem::TinyMlp(p) => p.loss_grad(params),
        }
    }
}

/// Serializable problem description used by run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    MatrixRegression {
        #[serde(default = "default_samples")]
        samples: usize,
        rows: usize,
        cols: usize,
        #[serde(default = "default_cond")]
        cond: f64,
    },
    TinyMlp {
        inputs: usize,
        hidden: usize,
        classes: usize,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_spread")]
        spread: f64,
    },
}

fn default_samples() -> usize {
    256
}
fn default_cond() -> f64 {
    10.0
}
fn default_per_class() -> usize {
    32
}
fn default_spread() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn build(&self, seed: u64) -> Result<Problem> {
        Ok(match *self {
            ProblemSpec::MatrixRegression {
                samples,
                rows,
                cols,
                cond,
            } => Problem::MatrixRegression(MatrixRegression::random(
                seed, samples, rows, cols, cond,
            )?),
            ProblemSpec::TinyMlp {
                inputs,
                hidden,
                classes,
                per_class,
                spread,
            } => Problem::TinyMlp(TinyMlp::blobs(
                seed, inputs, hidden, classes, per_class, spread,
            )?),
        })
    }
}
