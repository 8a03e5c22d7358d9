use crate::error::{ensure, Result};
use crate::fim::residual_energy;
use crate::matlib::Matrix;

use super::limiter::NormGrowthLimiter;

/// Floor applied to the residual-energy EMA before taking its root.
pub const COMPENSATION_FLOOR: f64 = 1e-30;
pub const COMPENSATION_EPS: f64 = 1e-8;

/// Optimal diagonal correction for the directions outside `u`.
///
/// Folds the per-column residual energy of `g` into the EMA `p` (rate
/// `beta`), returns `η·√(m−r)·(I − UUᵀ)G·diag(p)^(-1/2)` and updates the
/// limiter. The input `u` must have orthonormal columns and `r < m`.
pub fn compensate(
    g: &Matrix,
    u: &Matrix,
    p: &mut [f64],
    limiter: &mut NormGrowthLimiter,
    beta: f64,
) -> Result<Matrix> {
    let (m, n) = g.shape();
    let r = u.cols();
    ensure!(
        u.rows() == m,
        Dimension,
        "basis has {} rows, gradient {m}",
        u.rows()
    );
    ensure!(
        r < m,
        Precondition,
        "compensation needs r < m (r = {r}, m = {m})"
    );
    ensure!(
        p.len() == n,
        Dimension,
        "energy buffer has {} entries, expected {n}",
        p.len()
    );
    for (x, e) in p.iter_mut().zip(residual_energy(g, u)) {
        *x = beta * *x + (1.0 - beta) * e.max(0.0);
    }
    let resid = g.sub(&u.matmul(&u.t_matmul(g)?)?)?;
    let scale = ((m - r) as f64).sqrt();
    let right: Vec<f64> = p
        .iter()
        .map(|&x| scale / (x.max(COMPENSATION_FLOOR).sqrt() + COMPENSATION_EPS))
        .collect();
    let c = resid.scale_rows_cols(&vec![1.0; m], &right);
    let eta = limiter.limit(c.frobenius());
    Ok(c.scale(eta))
}
