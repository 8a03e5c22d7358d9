//! Matrix powers of symmetric PSD matrices.

use crate::error::{ensure, Result};

use super::{sym_eig, Matrix};

/// Default Newton–Schulz iteration count.
pub const NS_DEFAULT_STEPS: usize = 5;

/// Relative cutoff under which an eigenvalue counts as zero. Negative powers
/// map such eigenvalues to zero, giving the Moore–Penrose pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-12;

/// Absolute floor paired with [`PINV_RTOL`].
pub const PINV_ATOL: f64 = 1e-30;

const PSD_TOL: f64 = 1e-10;

pub(crate) fn pinv_cutoff(max_abs: f64) -> f64 {
    PINV_ATOL.max(PINV_RTOL * max_abs)
}

/// `A^p` for symmetric PSD `A`. Eigenvalues at or below the pseudo-inverse
/// cutoff (including tiny negative round-off) are treated as zero.
pub fn sym_pow(a: &Matrix, p: f64) -> Result<Matrix> {
    let eig = sym_eig(a, None)?;
    let top = eig.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let cut = pinv_cutoff(top);
    ensure!(
        eig.values.iter().all(|&l| l >= -PSD_TOL * top.max(1.0)),
        Numeric,
        "matrix is not positive semidefinite (min eigenvalue {:.3e})",
        eig.values.last().copied().unwrap_or(0.0)
    );
    Ok(eig.map_values(|l| if l <= cut { 0.0 } else { l.powf(p) }))
}

pub fn inv_sqrt(a: &Matrix) -> Result<Matrix> {
    sym_pow(a, -0.5)
}

pub fn sqrt_psd(a: &Matrix) -> Result<Matrix> {
    sym_pow(a, 0.5)
}

/// Checks positive semidefiniteness with a pivoted-tolerance Cholesky sweep.
/// Returns `Ok(true)` when the matrix is singular within tolerance.
pub fn psd_check(a: &Matrix) -> Result<bool> {
    ensure!(
        a.is_square(),
        Dimension,
        "psd_check of {}x{}",
        a.rows(),
        a.cols()
    );
    ensure!(a.is_finite(), Numeric, "non-finite entries");
    let n = a.rows();
    let tol = PSD_TOL * a.frobenius().max(f64::MIN_POSITIVE);
    let a = a.symmetrize();
    let mut l = Matrix::zeros(n, n);
    let mut singular = false;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        ensure!(
            d >= -tol,
            Numeric,
            "matrix is not positive definite (pivot {j} = {d:.3e})"
        );
        if d <= tol {
            singular = true;
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(singular)
}

/// Output of [`newton_schulz_inv_sqrt`].
#[derive(Debug, Clone)]
pub struct NewtonSchulz {
    /// Approximation of `A^(-1/2)`.
    pub inv_sqrt: Matrix,
    /// The coupled approximation of `A^(1/2)`.
    pub sqrt: Matrix,
    /// Set when `‖I − A/‖A‖_F‖₂ ≥ 1`, i.e. `A` is singular within tolerance
    /// and convergence is not guaranteed.
    pub warning: bool,
}

/// Coupled Newton–Schulz iteration for the inverse square root.
///
/// Starts from `Y₀ = A/‖A‖_F`, `Z₀ = I` and repeats `T = (3I − Z·Y)/2`,
/// `Y ← Y·T`, `Z ← T·Z`. The result is rescaled by `‖A‖_F^(-1/2)`.
pub fn newton_schulz_inv_sqrt(a: &Matrix, steps: usize) -> Result<NewtonSchulz> {
    ensure!(
        steps >= 1,
        Precondition,
        "Newton-Schulz needs at least one step"
    );
    let warning = psd_check(a)?;
    let n = a.rows();
    let norm = a.frobenius();
    ensure!(norm > 0.0, Numeric, "Newton-Schulz of the zero matrix");
    let mut y = a.symmetrize().scale(1.0 / norm);
    let mut z = Matrix::identity(n);
    let eye3 = Matrix::identity(n).scale(3.0);
    for _ in 0..steps {
        let t = eye3.sub(&z.matmul(&y)?)?.scale(0.5);
        y = y.matmul(&t)?;
        z = t.matmul(&z)?;
    }
    Ok(NewtonSchulz {
        inv_sqrt: z.scale(norm.powf(-0.5)),
        sqrt: y.scale(norm.sqrt()),
        warning,
    })
}

/// `A^(-1/4)` as the Newton–Schulz inverse square root of the Newton–Schulz
/// square root.
pub fn newton_schulz_inv_fourth_root(a: &Matrix, steps: usize) -> Result<Matrix> {
    let half = newton_schulz_inv_sqrt(a, steps)?;
    Ok(newton_schulz_inv_sqrt(&half.sqrt.symmetrize(), steps)?.inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn identity_and_scalar_cases() {
        let ns = newton_schulz_inv_sqrt(&Matrix::identity(3), 5).unwrap();
        assert!(ns.inv_sqrt.rel_dist(&Matrix::identity(3)) < 1e-12);
        let ns = newton_schulz_inv_sqrt(&Matrix::identity(3).scale(4.0), 30).unwrap();
        assert!(ns.inv_sqrt.rel_dist(&Matrix::identity(3).scale(0.5)) < 1e-12);
        assert!(!ns.warning);
    }

    #[test]
    fn rejects_indefinite_and_flags_singular() {
        let bad = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert!(matches!(
            newton_schulz_inv_sqrt(&bad, 5),
            Err(Error::Numeric(_))
        ));
        let sing = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert!(newton_schulz_inv_sqrt(&sing, 5).unwrap().warning);
        assert!(newton_schulz_inv_sqrt(&Matrix::identity(2), 0).is_err());
    }

    #[test]
    fn pseudo_inverse_semantics() {
        let a = Matrix::from_rows(&[&[4.0, 0.0], &[0.0, 0.0]]).unwrap();
        let p = inv_sqrt(&a).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
        let s = sqrt_psd(&a).unwrap();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-15);
    }
}
