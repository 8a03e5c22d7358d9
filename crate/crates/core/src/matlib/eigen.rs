//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! the implicit QL algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

use super::Matrix;

const SYMMETRY_TOL: f64 = 1e-8;
const MAX_QL_SWEEPS: usize = 60;

/// Eigenpairs of a symmetric matrix, values descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymEigen {
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

impl SymEigen {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let scaled = self
            .vectors
            .scale_rows_cols(&vec![1.0; self.vectors.rows()], &self.values);
        scaled
            .matmul_t(&self.vectors)
            .expect("eigenvector shapes agree")
    }

    /// Applies `f` to each eigenvalue and rebuilds `V·diag(f(λ))·Vᵀ`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mapped: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = self
            .vectors
            .scale_rows_cols(&vec![1.0; self.vectors.rows()], &mapped);
        scaled
            .matmul_t(&self.vectors)
            .expect("eigenvector shapes agree")
    }
}

/// Eigendecomposition of a symmetric matrix. `k = None` keeps every pair,
/// `Some(k)` keeps the `k` largest.
///
/// The input is symmetrized first. Ties keep their original relative order,
/// and every eigenvector has its first non-negligible component positive.
pub fn sym_eig(m: &Matrix, k: Option<usize>) -> Result<SymEigen> {
    ensure!(
        m.is_square(),
        Dimension,
        "sym_eig of {}x{}",
        m.rows(),
        m.cols()
    );
    ensure!(
        m.is_finite(),
        Numeric,
        "sym_eig input has non-finite entries"
    );
    let n = m.rows();
    let k = k.unwrap_or(n);
    ensure!(
        k <= n,
        Dimension,
        "requested {k} eigenpairs of a {n}x{n} matrix"
    );

    let sym = m.symmetrize();
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    let asym = m.sub(&m.transpose())?.frobenius() / 2.0;
    ensure!(
        asym <= SYMMETRY_TOL * scale,
        Precondition,
        "matrix is not symmetric (relative asymmetry {:.3e})",
        asym / scale
    );

    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sym[(i, j)]).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    order.truncate(k);

    let mut vectors = Matrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let col = vectors.col_mut(c);
        for (i, x) in col.iter_mut().enumerate() {
            *x = v[i][src];
        }
        fix_sign(col);
    }
    Ok(SymEigen { vectors, values })
}

/// Flips `col` so its first component above 1e-10 in magnitude is positive.
pub(crate) fn fix_sign(col: &mut [f64]) {
    if let Some(&lead) = col.iter().find(|x| x.abs() > 1e-10) {
        if lead < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for x in d.iter().take(i) {
            scale += x.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for x in d.iter_mut().take(i) {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e.iter_mut().take(i) {
                *x = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::Numeric(format!(
                        "eigenvalue {l} did not converge in {MAX_QL_SWEEPS} QL sweeps"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d.iter_mut().skip(l + 2) {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_gives_permuted_identity() {
        let m = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 3.0]]).unwrap();
        let eig = sym_eig(&m, None).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert_eq!(
            eig.vectors,
            Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn rank_one_top_pair() {
        let u = [0.6, -0.8, 0.0];
        let m = Matrix::from_fn(3, 3, |i, j| u[i] * u[j]);
        let eig = sym_eig(&m, Some(1)).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        let col = eig.vectors.col(0);
        assert!((col[0] - 0.6).abs() < 1e-14 && (col[1] + 0.8).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_matches_characteristic_roots() {
        let (a, b, c) = (2.0, -1.5, 0.25);
        let m = Matrix::from_rows(&[&[a, b], &[b, c]]).unwrap();
        let eig = sym_eig(&m, None).unwrap();
        let mean = (a + c) / 2.0;
        let rad = (((a - c) / 2.0_f64).powi(2) + b * b).sqrt();
        assert!((eig.values[0] - (mean + rad)).abs() < 1e-12);
        assert!((eig.values[1] - (mean - rad)).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_and_errors() {
        let eig = sym_eig(&Matrix::from_rows(&[&[-2.0]]).unwrap(), None).unwrap();
        assert_eq!(eig.values, vec![-2.0]);
        assert_eq!(eig.vectors[(0, 0)], 1.0);
        let asym = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&asym, None), Err(Error::Precondition(_))));
        let mut bad = Matrix::identity(2);
        bad[(0, 0)] = f64::INFINITY;
        assert!(matches!(sym_eig(&bad, None), Err(Error::Numeric(_))));
    }

    #[test]
    fn ties_keep_index_order_in_values() {
        let eig = sym_eig(&Matrix::identity(4).scale(2.0), None).unwrap();
        assert_eq!(eig.values, vec![2.0; 4]);
        assert!(eig.vectors.orthonormality_defect() < 1e-14);
    }
}
