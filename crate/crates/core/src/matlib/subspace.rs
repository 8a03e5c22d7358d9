//! Block power method warm-started from a previous basis.

use crate::error::{ensure, Result};

use super::{qr, sym_eig, Matrix, SymEigen};

/// Runs `steps` rounds of `H = A·U`, `U = orth(H)`, then rotates `U` by the
/// eigenvectors of the Rayleigh quotient `UᵀAU`.
///
/// A rank-deficient `init` is replaced by the first `r` columns of the
/// identity. Rank loss inside the loop is harmless because the Householder
/// factor is always orthonormal.
pub fn subspace_iteration(a: &Matrix, init: &Matrix, steps: usize) -> Result<SymEigen> {
    let m = a.rows();
    ensure!(
        a.is_square(),
        Dimension,
        "subspace_iteration on {}x{}",
        a.rows(),
        a.cols()
    );
    ensure!(
        init.rows() == m,
        Dimension,
        "init has {} rows, expected {m}",
        init.rows()
    );
    let r = init.cols();
    ensure!(r >= 1 && r <= m, Dimension, "init rank {r} outside 1..={m}");
    ensure!(
        steps >= 1,
        Precondition,
        "subspace_iteration needs at least one step"
    );

    let start = qr(init);
    let mut u = if start.rank_deficient {
        Matrix::identity(m).leading_columns(r)
    } else {
        start.thin_q()
    };
    for _ in 0..steps {
        let h = a.matmul(&u)?;
        u = qr(&h).thin_q();
    }
    let rayleigh = u.t_matmul(&a.matmul(&u)?)?;
    let inner = sym_eig(&rayleigh, None)?;
    let mut vectors = u.matmul(&inner.vectors)?;
    for j in 0..r {
        super::eigen::fix_sign(vectors.col_mut(j));
    }
    Ok(SymEigen {
        vectors,
        values: inner.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlib::diagv;

    #[test]
    fn exact_block_is_a_fixed_point() {
        let a = diagv(&[5.0, 3.0, 1.0]);
        let init = Matrix::identity(3).leading_columns(2);
        let out = subspace_iteration(&a, &init, 1).unwrap();
        assert_eq!(out.values, vec![5.0, 3.0]);
        assert!(out.vectors.rel_dist(&init) < 1e-15);
    }

    #[test]
    fn rank_deficient_init_falls_back() {
        let a = diagv(&[1.0, 4.0, 2.0]);
        let init = Matrix::from_fn(3, 2, |_, _| 1.0);
        let out = subspace_iteration(&a, &init, 40).unwrap();
        assert!((out.values[0] - 4.0).abs() < 1e-10);
        assert!(out.vectors.orthonormality_defect() < 1e-12);
    }
}
