//! Kronecker products.

use crate::error::{ensure, Result};

use super::Matrix;

/// Dense `A ⊗ B`, entry `(i·p + k, j·q + l) = A[i,j]·B[k,l]` for `B` of shape `p×q`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = b.shape();
    Matrix::from_fn(a.rows() * p, a.cols() * q, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    })
}

/// `devec((A ⊗ B)·vec(C))`, evaluated as `B·C·Aᵀ`.
pub fn kron_apply(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    let (m, n) = c.shape();
    ensure!(
        a.shape() == (n, n),
        Dimension,
        "A must be {n}x{n}, got {:?}",
        a.shape()
    );
    ensure!(
        b.shape() == (m, m),
        Dimension,
        "B must be {m}x{m}, got {:?}",
        b.shape()
    );
    b.matmul(c)?.matmul_t(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlib::{devec, vec};

    #[test]
    fn scalar_factors() {
        let c = Matrix::from_fn(2, 3, |i, j| (i + 3 * j) as f64 - 1.5);
        let out = kron_apply(
            &Matrix::identity(3).scale(2.0),
            &Matrix::identity(2).scale(3.0),
            &c,
        )
        .unwrap();
        assert_eq!(out, c.scale(6.0));
        assert_eq!(
            kron_apply(&Matrix::identity(3), &Matrix::identity(2), &c).unwrap(),
            c
        );
    }

    #[test]
    fn matches_dense_product() {
        let a = Matrix::from_fn(3, 3, |i, j| ((i * 3 + j) as f64 * 0.7).cos());
        let b = Matrix::from_fn(2, 2, |i, j| ((i * 2 + j) as f64 * 1.3).sin());
        let c = Matrix::from_fn(2, 3, |i, j| (i as f64) * 0.5 - j as f64);
        let dense = kron(&a, &b);
        let v = Matrix::column_vector(&vec(&c));
        let expected = devec(dense.matmul(&v).unwrap().as_slice(), 2, 3).unwrap();
        assert!(kron_apply(&a, &b, &c).unwrap().rel_dist(&expected) < 1e-14);
        assert!(kron_apply(&b, &b, &c).is_err());
    }
}
