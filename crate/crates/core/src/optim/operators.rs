//! Stateless matrix operators induced by two of the structures.

use crate::error::Result;
use crate::matlib::{inv_sqrt, pinv_cutoff, Matrix};

/// `G·diag(‖g_i‖²)^(-1/2)`: every nonzero column rescaled to unit norm.
pub fn normalize_op(g: &Matrix) -> Matrix {
    let norms: Vec<f64> = (0..g.cols())
        .map(|j| crate::matlib::norm2(g.col(j)))
        .collect();
    let cut = pinv_cutoff(norms.iter().fold(0.0f64, |a, &b| a.max(b)));
    let inv: Vec<f64> = norms
        .iter()
        .map(|&x| if x > cut { 1.0 / x } else { 0.0 })
        .collect();
    g.scale_rows_cols(&vec![1.0; g.rows()], &inv)
}

/// `(GGᵀ)^(-1/2)·G`, the orthogonal polar factor of `G` (pseudo-inverse on
/// rank-deficient input).
pub fn whiten_op(g: &Matrix) -> Result<Matrix> {
    inv_sqrt(&g.gram_rows())?.matmul(g)
}
