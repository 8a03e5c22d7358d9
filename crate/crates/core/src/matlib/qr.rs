//! Householder QR and orthogonal complements.

use crate::error::{ensure, Result};

use super::Matrix;

const ORTHONORMAL_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-12;

/// Result of a Householder QR factorization `A = Q·R`.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Full `m×m` orthogonal factor.
    pub q: Matrix,
    /// `m×k` upper-triangular factor.
    pub r: Matrix,
    /// Set when some diagonal entry of `R` is negligible relative to `‖A‖_F`.
    pub rank_deficient: bool,
}

impl Qr {
    /// First `k` columns of `Q`, where `k` is the column count of `A`
    /// (capped at `m`).
    pub fn thin_q(&self) -> Matrix {
        self.q.leading_columns(self.r.cols().min(self.q.cols()))
    }
}

pub fn qr(a: &Matrix) -> Qr {
    let (m, k) = a.shape();
    let mut r = a.clone();
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::new();
    for j in 0..k.min(m) {
        let x: Vec<f64> = r.col(j)[j..].to_vec();
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vn);
        for c in j..k {
            let col = &mut r.col_mut(c)[j..];
            let p: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (a, b) in col.iter_mut().zip(&v) {
                *a -= 2.0 * p * b;
            }
        }
        reflectors.push((j, v));
    }
    for c in 0..k {
        for i in (c + 1)..m {
            r[(i, c)] = 0.0;
        }
    }

    let mut q = Matrix::identity(m);
    for (j, v) in reflectors.iter().rev() {
        for c in 0..m {
            let col = &mut q.col_mut(c)[*j..];
            let p: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            if p != 0.0 {
                for (a, b) in col.iter_mut().zip(v) {
                    *a -= 2.0 * p * b;
                }
            }
        }
    }

    let scale = a.frobenius();
    let rank_deficient =
        k > m || scale == 0.0 || (0..k.min(m)).any(|j| r[(j, j)].abs() <= RANK_TOL * scale);
    Qr {
        q,
        r,
        rank_deficient,
    }
}

/// Orthonormal basis `U_c` of the orthogonal complement of `span(U)`, so that
/// `[U, U_c]` is square orthogonal.
pub fn qr_complement(u: &Matrix) -> Result<Matrix> {
    let (m, r) = u.shape();
    ensure!(
        r < m,
        Dimension,
        "complement of {r} columns in dimension {m} is empty"
    );
    let defect = u.orthonormality_defect();
    ensure!(
        defect <= ORTHONORMAL_TOL,
        Precondition,
        "input columns are not orthonormal (defect {defect:.3e})"
    );
    let f = qr(u);
    Ok(f.q.select_columns(&(r..m).collect::<Vec<_>>()))
}
