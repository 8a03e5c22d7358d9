//! Analytic-versus-oracle certification of the closed-form structure fits.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::fim::*;
use crate::matlib::{random, sym_eig};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// `m, n ≤ 6`.
    Small,
    /// `mn ≤ 64`, `m ≤ 8`.
    Medium,
}

impl std::str::FromStr for Tier {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Tier::Small),
            "medium" => Ok(Tier::Medium),
            other => Err(crate::Error::Config(format!(
                "unknown tier {other:?} (small | medium)"
            ))),
        }
    }
}

pub const FAMILIES: [&str; 9] = [
    "diagonal",
    "whitening",
    "normalization",
    "shampoo_left",
    "shampoo_right",
    "shared_eigen_d",
    "soap_d",
    "compensation_scale",
    "general_block_diag",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub tier: Tier,
    pub seeds: usize,
    pub samples: usize,
    /// Pass when `analytic ≤ oracle + tolerance`.
    pub tolerance: f64,
    /// Test hook: scale the fitted `F̃` of this family by `1 + 1e-3`.
    pub fault: Option<String>,
    pub exec: Execution,
}

impl VerifyOptions {
    pub fn new(seed: u64, tier: Tier) -> Self {
        Self {
            seed,
            tier,
            seeds: 20,
            samples: 50,
            tolerance: 1e-6,
            fault: None,
            exec: Execution::default(),
        }
    }
}

pub const FAULT_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub family: String,
    /// Largest `analytic − oracle` loss over the seeds.
    pub worst_gap: f64,
    pub seeds: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<Certification>,
    pub elapsed_ms: f64,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.family.as_str())
            .collect()
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<20} {:>6} {:>12}  result",
            "family", "seeds", "worst_gap"
        )?;
        for r in &self.rows {
            let verdict = if r.passed { "pass" } else { "FAIL" };
            writeln!(
                f,
                "{:<20} {:>6} {:>12.3e}  {verdict}",
                r.family, r.seeds, r.worst_gap
            )?;
        }
        write!(f, "elapsed {:.0} ms", self.elapsed_ms)
    }
}

/// Draws a shape for one certification seed.
pub fn tier_shape<R: Rng + ?Sized>(tier: Tier, rng: &mut R) -> (usize, usize) {
    match tier {
        Tier::Small => (rng.random_range(2..=6), rng.random_range(2..=6)),
        Tier::Medium => {
            let m = rng.random_range(2..=8);
            (m, rng.random_range(2..=MAX_DENSE_DIM / m))
        }
    }
}

/// Gradients `A·Z·B/2 + 0.3·N` with fixed random `A`, `B`, giving
/// correlated rows and columns.
pub fn certification_sample<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
    count: usize,
) -> Result<GradientSample> {
    let a = random::gaussian(rng, m, m);
    let b = random::gaussian(rng, n, n);
    let mut mats = Vec::with_capacity(count);
    for _ in 0..count {
        let z = random::gaussian(rng, m, n);
        let base = a.matmul(&z)?.matmul(&b)?.scale(0.5);
        mats.push(base.zip_map(&random::gaussian(rng, m, n), |x, e| x + 0.3 * e));
    }
    GradientSample::new(mats)
}

/// `F̃ → c·F̃` expressed on the factor parameters.
fn scale_factor(f: StructuredFactor, c: f64) -> StructuredFactor {
    use StructuredFactor::*;
    let sv = |v: Vec<f64>| v.into_iter().map(|x| x * c).collect::<Vec<_>>();
    match f {
        Diagonal { v, rows, cols } => Diagonal {
            v: sv(v),
            rows,
            cols,
        },
        Whitening { m, cols } => Whitening {
            m: m.scale(c),
            cols,
        },
        Normalization { s, rows } => Normalization { s: sv(s), rows },
        RightKronecker { rn, rows } => RightKronecker {
            rn: rn.scale(c),
            rows,
        },
        SharedEigen { uf, dtab } => SharedEigen {
            uf,
            dtab: dtab.scale(c),
        },
        SoapEigen { ur, ul, dtab } => SoapEigen {
            ur,
            ul,
            dtab: dtab.scale(c),
        },
        CompensationScale { s, u } => CompensationScale {
            s: s.into_iter().map(|x| x / c.sqrt()).collect(),
            u,
        },
        GeneralBlockDiag { blocks } => GeneralBlockDiag {
            blocks: blocks.into_iter().map(|b| b.scale(c)).collect(),
        },
        other => other,
    }
}

/// Fitted factor, oracle family and target FIM for one family on one sample.
fn case(
    name: &str,
    s: &GradientSample,
    rng: &mut ChaCha8Rng,
) -> Result<(StructuredFactor, Family, EmpiricalFim)> {
    let fim = || build_empirical_fim(s);
    Ok(match name {
        "diagonal" => (fit_diagonal(s), Family::Diagonal, fim()?),
        "whitening" => (fit_whitening(s), Family::Whitening, fim()?),
        "normalization" => (fit_normalization(s)?, Family::Normalization, fim()?),
        "shampoo_left" => (fit_whitening(s), Family::ShampooLeft, fim()?),
        "shampoo_right" => (fit_shampoo_right(s), Family::ShampooRight, fim()?),
        "shared_eigen_d" => {
            let uf = sym_eig(&s.mean_ggt(), None)?.vectors;
            (
                fit_shared_eigen_with(s, uf.clone())?,
                Family::SharedEigenD { uf },
                fim()?,
            )
        }
        "soap_d" => {
            let ul = sym_eig(&s.mean_ggt(), None)?.vectors;
            let ur = sym_eig(&s.mean_gtg(), None)?.vectors;
            (
                fit_soap_with(s, ul.clone(), ur.clone())?,
                Family::SoapD { ul, ur },
                fim()?,
            )
        }
        "compensation_scale" => {
            let m = s.rows();
            let r = rng.random_range(1..m);
            let u = random::orthonormal(rng, m, r);
            (
                fit_compensation_scale(s, &u)?,
                Family::CompensationScale { u: u.clone() },
                compensation_target(s, &u)?,
            )
        }
        "general_block_diag" => (fit_general_blockdiag(s)?, Family::GeneralBlockDiag, fim()?),
        other => return Err(crate::Error::Config(format!("unknown family {other:?}"))),
    })
}

fn certify_one(name: &str, seed: u64, opts: &VerifyOptions) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = tier_shape(opts.tier, &mut rng);
    let s = certification_sample(&mut rng, m, n, opts.samples)?;
    let (mut fitted, family, target) = case(name, &s, &mut rng)?;
    if opts.fault.as_deref() == Some(name) {
        fitted = scale_factor(fitted, 1.0 + FAULT_SCALE);
    }
    let analytic = structure_loss(&fitted, &target)?;
    let oracle = oracle_minimize(&family, &target, None, &OracleOptions::default())?;
    Ok(analytic - oracle.loss)
}

/// Runs every family on `opts.seeds` seeds (seeds in parallel).
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    ensure!(
        opts.seeds >= 1 && opts.samples >= 1,
        Config,
        "seeds and samples must be positive"
    );
    if let Some(f) = &opts.fault {
        ensure!(
            FAMILIES.contains(&f.as_str()),
            Config,
            "unknown fault family {f:?}"
        );
    }
    let start = Instant::now();
    let mut rows = Vec::with_capacity(FAMILIES.len());
    for (k, name) in FAMILIES.iter().enumerate() {
        let gaps = par::map_range(opts.exec, opts.seeds, |i| {
            let seed = opts
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add((k * 1000 + i) as u64);
            certify_one(name, seed, opts)
        });
        let gaps = gaps.into_iter().collect::<Result<Vec<_>>>()?;
        let worst_gap = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rows.push(Certification {
            family: name.to_string(),
            worst_gap,
            seeds: gaps.len(),
            passed: gaps.iter().all(|&g| g <= opts.tolerance),
        });
    }
    Ok(VerifyReport {
        rows,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
