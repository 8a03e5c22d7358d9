//! Dense materialization of structured factors (desk scale only).

use crate::error::{ensure, Result};
use crate::matlib::{diagb, diagv, kron, sqrt_psd, Matrix};

use super::{EmpiricalFim, StructuredFactor, MAX_DENSE_DIM};

/// Builds `F̃` as an explicit `mn×mn` matrix.
pub fn materialize(factor: &StructuredFactor) -> Result<Matrix> {
    let (m, n) = factor.shape();
    ensure!(
        m * n <= MAX_DENSE_DIM,
        Refused,
        "dense {m}x{n} factor exceeds the {MAX_DENSE_DIM}-entry guard"
    );
    use StructuredFactor::*;
    Ok(match factor {
        Diagonal { v, .. } => diagv(v),
        KroneckerSqrt { rn, lm } => kron(&sqrt_psd(rn)?, &sqrt_psd(lm)?),
        RightKronecker { rn, rows } => kron(rn, &Matrix::identity(*rows)),
        Whitening { m, cols } => kron(&Matrix::identity(*cols), m),
        Normalization { s, rows } => kron(&diagv(s), &Matrix::identity(*rows)),
        ScaledKronecker { s, m } => kron(&diagv(s), m),
        SharedEigen { uf, dtab } => {
            let blocks: Vec<Matrix> = (0..n)
                .map(|i| {
                    let scaled = uf.scale_rows_cols(&vec![1.0; m], dtab.col(i));
                    scaled.matmul_t(uf).expect("square basis")
                })
                .collect();
            diagb(&blocks)?
        }
        SoapEigen { ur, ul, dtab } => {
            let k = kron(ur, ul);
            let scaled = k.scale_rows_cols(&vec![1.0; m * n], dtab.as_slice());
            scaled.matmul_t(&k)?
        }
        TwoSidedScaling { s, q } => kron(&diagv(s), &diagv(q)),
        CompensationScale { s, u } => {
            let proj = Matrix::identity(m).sub(&u.gram_rows())?;
            let t: Vec<f64> = s.iter().map(|x| 1.0 / (x * x)).collect();
            kron(&diagv(&t), &proj)
        }
        GeneralBlockDiag { blocks } => diagb(blocks)?,
    })
}

/// `‖F̃ − F‖_F²`.
pub fn structure_loss(factor: &StructuredFactor, fim: &EmpiricalFim) -> Result<f64> {
    ensure!(
        factor.shape() == (fim.rows, fim.cols),
        Dimension,
        "factor shape {:?} vs FIM of a {}x{} parameter",
        factor.shape(),
        fim.rows,
        fim.cols
    );
    Ok(materialize(factor)?.sub(&fim.f)?.frobenius_sq())
}
