//! Vectorization and the diagonal operators.

use crate::error::{ensure, Result};

use super::Matrix;

/// Stacks the columns of `m` into one vector.
pub fn vec(m: &Matrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vec`].
pub fn devec(v: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
    Matrix::from_col_major(rows, cols, v.to_vec())
}

/// Main diagonal of a (possibly rectangular) matrix.
pub fn diag(m: &Matrix) -> Vec<f64> {
    (0..m.rows().min(m.cols())).map(|i| m[(i, i)]).collect()
}

/// Square diagonal matrix with `v` on the diagonal.
pub fn diagv(v: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        m[(i, i)] = x;
    }
    m
}

/// Block-diagonal matrix from square blocks.
pub fn diagb(blocks: &[Matrix]) -> Result<Matrix> {
    ensure!(!blocks.is_empty(), Dimension, "diagb of no blocks");
    for (i, b) in blocks.iter().enumerate() {
        ensure!(
            b.is_square(),
            Dimension,
            "block {i} is {}x{}",
            b.rows(),
            b.cols()
        );
    }
    let n: usize = blocks.iter().map(Matrix::rows).sum();
    let mut out = Matrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        for j in 0..b.cols() {
            for i in 0..b.rows() {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += b.rows();
    }
    Ok(out)
}

/// Diagonal matrix holding the entries of `m` in column-stacking order.
pub fn diagm(m: &Matrix) -> Matrix {
    diagv(m.as_slice())
}
