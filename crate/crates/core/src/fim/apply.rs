//! Efficient evaluation of `devec(F̃^(-1/2)·vec(G))` per structure.
//!
//! Inverses are Moore–Penrose: eigenvalues (or diagonal entries) at or below
//! `max(1e-30, 1e-12·largest)` are treated as exact zeros, matching the dense
//! pseudo-inverse square root.

use crate::error::{ensure, Result};
use crate::matlib::{pinv_cutoff, sym_eig, sym_pow, Matrix};

use super::StructuredFactor;

fn pinv_rsqrt_all(values: &[f64]) -> Vec<f64> {
    let top = values.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let cut = pinv_cutoff(top);
    values
        .iter()
        .map(|&x| if x <= cut { 0.0 } else { 1.0 / x.sqrt() })
        .collect()
}

/// `devec(F̃^(-1/2)·vec(G))` without forming `F̃`.
pub fn apply_preconditioner(factor: &StructuredFactor, g: &Matrix) -> Result<Matrix> {
    ensure!(
        factor.shape() == g.shape(),
        Dimension,
        "{} factor for {:?} applied to {:?}",
        factor.name(),
        factor.shape(),
        g.shape()
    );
    let (m, n) = g.shape();
    let ones_m = vec![1.0; m];
    use StructuredFactor::*;
    match factor {
        Diagonal { v, .. } => {
            let w = pinv_rsqrt_all(v);
            Ok(g.zip_map(&Matrix::from_col_major(m, n, w)?, |a, b| a * b))
        }
        KroneckerSqrt { rn, lm } => sym_pow(lm, -0.25)?.matmul(g)?.matmul(&sym_pow(rn, -0.25)?),
        RightKronecker { rn, .. } => g.matmul(&sym_pow(rn, -0.5)?),
        Whitening { m: mm, .. } => sym_pow(mm, -0.5)?.matmul(g),
        Normalization { s, .. } => Ok(g.scale_rows_cols(&ones_m, &pinv_rsqrt_all(s))),
        ScaledKronecker { s, m: mm } => Ok(sym_pow(mm, -0.5)?
            .matmul(g)?
            .scale_rows_cols(&ones_m, &pinv_rsqrt_all(s))),
        SharedEigen { uf, dtab } => {
            let w = Matrix::from_col_major(m, n, pinv_rsqrt_all(dtab.as_slice()))?;
            uf.matmul(&uf.t_matmul(g)?.hadamard(&w)?)
        }
        SoapEigen { ur, ul, dtab } => {
            let w = Matrix::from_col_major(m, n, pinv_rsqrt_all(dtab.as_slice()))?;
            let rotated = ul.t_matmul(g)?.matmul(ur)?.hadamard(&w)?;
            ul.matmul(&rotated)?.matmul_t(ur)
        }
        TwoSidedScaling { s, q } => {
            let top =
                q.iter().fold(0.0_f64, |a, x| a.max(*x)) * s.iter().fold(0.0_f64, |a, x| a.max(*x));
            let cut = pinv_cutoff(top);
            Ok(Matrix::from_fn(m, n, |i, j| {
                let p = q[i] * s[j];
                if p <= cut {
                    0.0
                } else {
                    g[(i, j)] / p.sqrt()
                }
            }))
        }
        CompensationScale { s, u } => {
            let resid = g.sub(&u.matmul(&u.t_matmul(g)?)?)?;
            Ok(resid.scale_rows_cols(&ones_m, s))
        }
        GeneralBlockDiag { blocks } => {
            let eigs = blocks
                .iter()
                .map(|b| sym_eig(b, None))
                .collect::<Result<Vec<_>>>()?;
            let top = eigs
                .iter()
                .flat_map(|e| e.values.iter())
                .fold(0.0_f64, |a, x| a.max(x.abs()));
            let cut = pinv_cutoff(top);
            let mut out = Matrix::zeros(m, n);
            for (i, e) in eigs.iter().enumerate() {
                let w: Vec<f64> = e
                    .values
                    .iter()
                    .map(|&x| if x <= cut { 0.0 } else { 1.0 / x.sqrt() })
                    .collect();
                let coords = e.vectors.t_matmul(&Matrix::column_vector(g.col(i)))?;
                let scaled: Vec<f64> = coords
                    .as_slice()
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| a * b)
                    .collect();
                let back = e.vectors.matvec(&scaled);
                out.col_mut(i).copy_from_slice(&back);
            }
            Ok(out)
        }
    }
}
