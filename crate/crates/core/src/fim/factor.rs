use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::matlib::Matrix;

const ORTHO_TOL: f64 = 1e-8;
const SYM_TOL: f64 = 1e-10;

/// Fitted parameters of one structured FIM approximation `F̃`.
///
/// Every variant describes an `mn×mn` matrix acting on column-stacked
/// `m×n` gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredFactor {
    /// `diagv(v)`, `v` of length `mn` in column-stacking order.
    Diagonal {
        v: Vec<f64>,
        rows: usize,
        cols: usize,
    },
    /// `Rₙ^(1/2) ⊗ Lₘ^(1/2)`.
    KroneckerSqrt { rn: Matrix, lm: Matrix },
    /// `Rₙ ⊗ Iₘ`, the one-sided right factor.
    RightKronecker { rn: Matrix, rows: usize },
    /// `Iₙ ⊗ M`.
    Whitening { m: Matrix, cols: usize },
    /// `diagv(s) ⊗ Iₘ`.
    Normalization { s: Vec<f64>, rows: usize },
    /// `diagv(s) ⊗ M`.
    ScaledKronecker { s: Vec<f64>, m: Matrix },
    /// `diagb(U_f·diagv(Dtab[:,i])·U_fᵀ)` over columns `i`.
    SharedEigen { uf: Matrix, dtab: Matrix },
    /// `(U_R ⊗ U_L)·diagm(Dtab)·(U_R ⊗ U_L)ᵀ`.
    SoapEigen {
        ur: Matrix,
        ul: Matrix,
        dtab: Matrix,
    },
    /// `diagv(s) ⊗ diagv(q)`.
    TwoSidedScaling { s: Vec<f64>, q: Vec<f64> },
    /// `diagv(s)^(-2) ⊗ U_c·U_cᵀ` where `U_c` spans the complement of `u`.
    CompensationScale { s: Vec<f64>, u: Matrix },
    /// `diagb(M₁, …, Mₙ)`.
    GeneralBlockDiag { blocks: Vec<Matrix> },
}

impl StructuredFactor {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Diagonal { .. } => "diagonal",
            Self::KroneckerSqrt { .. } => "kronecker_sqrt",
            Self::RightKronecker { .. } => "right_kronecker",
            Self::Whitening { .. } => "whitening",
            Self::Normalization { .. } => "normalization",
            Self::ScaledKronecker { .. } => "scaled_kronecker",
            Self::SharedEigen { .. } => "shared_eigen",
            Self::SoapEigen { .. } => "soap_eigen",
            Self::TwoSidedScaling { .. } => "two_sided_scaling",
            Self::CompensationScale { .. } => "compensation_scale",
            Self::GeneralBlockDiag { .. } => "general_block_diag",
        }
    }

    /// `(m, n)` of the gradients this factor acts on.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Diagonal { rows, cols, .. } => (*rows, *cols),
            Self::KroneckerSqrt { rn, lm } => (lm.rows(), rn.rows()),
            Self::RightKronecker { rn, rows } => (*rows, rn.rows()),
            Self::Whitening { m, cols } => (m.rows(), *cols),
            Self::Normalization { s, rows } => (*rows, s.len()),
            Self::ScaledKronecker { s, m } => (m.rows(), s.len()),
            Self::SharedEigen { dtab, .. } | Self::SoapEigen { dtab, .. } => dtab.shape(),
            Self::TwoSidedScaling { s, q } => (q.len(), s.len()),
            Self::CompensationScale { s, u } => (u.rows(), s.len()),
            Self::GeneralBlockDiag { blocks } => (blocks[0].rows(), blocks.len()),
        }
    }

    /// Checks the positivity, symmetry and orthonormality invariants of the
    /// variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Diagonal { v, rows, cols } => {
                ensure!(
                    v.len() == rows * cols,
                    Dimension,
                    "diagonal length {} != {rows}x{cols}",
                    v.len()
                );
                nonneg(v, "v")
            }
            Self::KroneckerSqrt { rn, lm } => {
                symmetric(rn, "Rn")?;
                symmetric(lm, "Lm")
            }
            Self::RightKronecker { rn, .. } => symmetric(rn, "Rn"),
            Self::Whitening { m, .. } => symmetric(m, "M"),
            Self::Normalization { s, .. } => positive(s, "s"),
            Self::ScaledKronecker { s, m } => {
                positive(s, "s")?;
                symmetric(m, "M")
            }
            Self::SharedEigen { uf, dtab } => {
                ensure!(
                    uf.is_square() && uf.rows() == dtab.rows(),
                    Dimension,
                    "U_f does not match Dtab"
                );
                orthonormal(uf, "U_f")?;
                nonneg(dtab.as_slice(), "Dtab")
            }
            Self::SoapEigen { ur, ul, dtab } => {
                ensure!(
                    ul.shape() == (dtab.rows(), dtab.rows()),
                    Dimension,
                    "U_L does not match Dtab"
                );
                ensure!(
                    ur.shape() == (dtab.cols(), dtab.cols()),
                    Dimension,
                    "U_R does not match Dtab"
                );
                orthonormal(ur, "U_R")?;
                orthonormal(ul, "U_L")?;
                nonneg(dtab.as_slice(), "Dtab")
            }
            Self::TwoSidedScaling { s, q } => {
                positive(s, "s")?;
                positive(q, "q")
            }
            Self::CompensationScale { s, u } => {
                ensure!(u.cols() < u.rows(), Dimension, "compensation needs r < m");
                orthonormal(u, "U")?;
                positive(s, "s")
            }
            Self::GeneralBlockDiag { blocks } => {
                ensure!(!blocks.is_empty(), Dimension, "no blocks");
                let m = blocks[0].rows();
                for b in blocks {
                    ensure!(b.shape() == (m, m), Dimension, "blocks must all be {m}x{m}");
                    symmetric(b, "M_i")?;
                }
                Ok(())
            }
        }
    }
}

fn positive(v: &[f64], what: &str) -> Result<()> {
    ensure!(
        v.iter().all(|&x| x > 0.0 && x.is_finite()),
        Positivity,
        "{what} must be positive and finite"
    );
    Ok(())
}

fn nonneg(v: &[f64], what: &str) -> Result<()> {
    ensure!(
        v.iter().all(|&x| x >= 0.0 && x.is_finite()),
        Positivity,
        "{what} must be non-negative and finite"
    );
    Ok(())
}

fn symmetric(m: &Matrix, what: &str) -> Result<()> {
    ensure!(m.is_square(), Dimension, "{what} must be square");
    let asym = m.sub(&m.transpose())?.max_abs();
    ensure!(
        asym <= SYM_TOL * m.max_abs().max(1.0),
        Precondition,
        "{what} is not symmetric"
    );
    Ok(())
}

fn orthonormal(u: &Matrix, what: &str) -> Result<()> {
    ensure!(
        u.orthonormality_defect() <= ORTHO_TOL,
        Precondition,
        "{what} is not orthonormal"
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn validation_catches_broken_invariants() {
        let ok = StructuredFactor::TwoSidedScaling {
            s: vec![1.0, 2.0],
            q: vec![0.5],
        };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.shape(), (1, 2));
        let bad = StructuredFactor::TwoSidedScaling {
            s: vec![1.0, 0.0],
            q: vec![0.5],
        };
        assert!(matches!(bad.validate(), Err(Error::Positivity(_))));
        let skew = StructuredFactor::Whitening {
            m: Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap(),
            cols: 3,
        };
        assert!(matches!(skew.validate(), Err(Error::Precondition(_))));
        let not_ortho = StructuredFactor::SharedEigen {
            uf: Matrix::identity(2).scale(2.0),
            dtab: Matrix::zeros(2, 2),
        };
        assert!(not_ortho.validate().is_err());
    }

    #[test]
    fn serde_is_tagged() {
        let f = StructuredFactor::Normalization {
            s: vec![1.0],
            rows: 2,
        };
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"kind\":\"normalization\""));
        assert_eq!(serde_json::from_str::<StructuredFactor>(&s).unwrap(), f);
    }
}
