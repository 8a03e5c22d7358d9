use rand::Rng;

use crate::error::{ensure, Result};
use crate::matlib::{qr_complement, subspace_iteration, sym_eig, Matrix};

/// How the leading subspace is re-estimated at a refresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshMode {
    /// One warm-started subspace-iteration step, then switching.
    #[default]
    Switch,
    /// Exact top-`r` eigenvectors, no switching.
    ExactEig,
}

/// Estimates the top-`r` eigenbasis of `q`. Warm-starts one step of subspace
/// iteration from `prev` when given, otherwise decomposes exactly.
pub fn leading_basis(q: &Matrix, r: usize, prev: Option<&Matrix>) -> Result<Matrix> {
    ensure!(q.is_square(), Dimension, "expected a square matrix");
    ensure!(
        r >= 1 && r <= q.rows(),
        Config,
        "rank {r} outside 1..={}",
        q.rows()
    );
    match prev {
        Some(u) => {
            ensure!(
                u.shape() == (q.rows(), r),
                Dimension,
                "previous basis has shape {:?}",
                u.shape()
            );
            Ok(subspace_iteration(q, u, 1)?.vectors)
        }
        None => Ok(sym_eig(q, Some(r))?.vectors),
    }
}

/// Keeps the leading `l` columns of `u_est` and fills the remaining `r − l`
/// with columns drawn uniformly without replacement from its orthogonal
/// complement. When the complement is too small the shortfall is taken from
/// `u_est` itself, in order.
pub fn switch_basis<R: Rng + ?Sized>(u_est: &Matrix, l: usize, rng: &mut R) -> Result<Matrix> {
    let (m, r) = u_est.shape();
    ensure!(l <= r, Config, "leading count {l} exceeds rank {r}");
    if l == r || r == m {
        return Ok(u_est.clone());
    }
    let comp = qr_complement(u_est)?;
    let want = r - l;
    let take = want.min(m - r);
    let mut idx = rand::seq::index::sample(rng, m - r, take).into_vec();
    idx.sort_unstable();
    let mut out = u_est.leading_columns(l).hcat(&comp.select_columns(&idx))?;
    if take < want {
        let fill: Vec<usize> = (l..l + want - take).collect();
        out = out.hcat(&u_est.select_columns(&fill))?;
    }
    Ok(out)
}

/// The full subspace-switching refresh: estimate, then switch.
pub fn subspace_switch<R: Rng + ?Sized>(
    q: &Matrix,
    r: usize,
    l: usize,
    prev: Option<&Matrix>,
    rng: &mut R,
) -> Result<Matrix> {
    let est = leading_basis(q, r, prev)?;
    switch_basis(&est, l, rng)
}
