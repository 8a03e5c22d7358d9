//! Closed-form and fixed-point solutions of the Frobenius reconstruction
//! problem `min ‖F̃ − F‖_F²` for each structure family.

use crate::error::{ensure, Result};
use crate::matlib::{dot, qr_complement, sym_eig, Matrix};

use super::{GradientSample, StructuredFactor};

/// Inner iterations of the two-sided fixed point used by default.
pub const TWO_SIDED_DEFAULT_ITERS: usize = 5;

/// Floor applied to residual energies before taking square roots.
pub const POSITIVITY_FLOOR: f64 = 1e-30;

const BLOCKDIAG_MAX_ROWS: usize = 8;

/// `v = E[vec(G)⊙²]`.
pub fn fit_diagonal(samples: &GradientSample) -> StructuredFactor {
    let p = samples.mean_sq();
    StructuredFactor::Diagonal {
        v: p.as_slice().to_vec(),
        rows: p.rows(),
        cols: p.cols(),
    }
}

/// `Rₙ = E[GᵀG]/m`, `Lₘ = E[GGᵀ]/n`.
pub fn fit_kronecker_shampoo(samples: &GradientSample) -> StructuredFactor {
    let (m, n) = (samples.rows() as f64, samples.cols() as f64);
    StructuredFactor::KroneckerSqrt {
        rn: samples.mean_gtg().scale(1.0 / m),
        lm: samples.mean_ggt().scale(1.0 / n),
    }
}

/// Minimizer of `‖Rₙ ⊗ Iₘ − F‖`: `Rₙ = E[GᵀG]/m`.
pub fn fit_shampoo_right(samples: &GradientSample) -> StructuredFactor {
    let m = samples.rows();
    StructuredFactor::RightKronecker {
        rn: samples.mean_gtg().scale(1.0 / m as f64),
        rows: m,
    }
}

/// Minimizer of `‖Iₙ ⊗ M − F‖`: `M = E[GGᵀ]/n`. This is also the one-sided
/// left Shampoo factor.
pub fn fit_whitening(samples: &GradientSample) -> StructuredFactor {
    let n = samples.cols();
    StructuredFactor::Whitening {
        m: samples.mean_ggt().scale(1.0 / n as f64),
        cols: n,
    }
}

/// Minimizer of `‖diagv(s) ⊗ Iₘ − F‖`: `sᵢ = E[gᵢᵀgᵢ]/m`.
pub fn fit_normalization(samples: &GradientSample) -> Result<StructuredFactor> {
    let m = samples.rows();
    let s: Vec<f64> = samples
        .mean_sq()
        .col_sums()
        .iter()
        .map(|x| x / m as f64)
        .collect();
    if let Some(i) = s.iter().position(|&x| x <= 0.0) {
        return Err(crate::Error::Positivity(format!(
            "column {i} is zero in every sample"
        )));
    }
    Ok(StructuredFactor::Normalization { s, rows: m })
}

/// `U_f = eig(E[GGᵀ])`, `Dtab = E[(U_fᵀG)⊙²]`.
pub fn fit_shared_eigen(samples: &GradientSample) -> Result<StructuredFactor> {
    let uf = sym_eig(&samples.mean_ggt(), None)?.vectors;
    fit_shared_eigen_with(samples, uf)
}

/// The eigenvalue step with the basis held fixed.
pub fn fit_shared_eigen_with(samples: &GradientSample, uf: Matrix) -> Result<StructuredFactor> {
    ensure!(
        uf.shape() == (samples.rows(), samples.rows()),
        Dimension,
        "U_f must be {0}x{0}",
        samples.rows()
    );
    let dtab = samples.mean_of(|g| uf.t_matmul(g).expect("shape checked").square());
    Ok(StructuredFactor::SharedEigen { uf, dtab })
}

/// `U_R = eig(E[GᵀG])`, `U_L = eig(E[GGᵀ])`, `Dtab = E[(U_LᵀGU_R)⊙²]`.
pub fn fit_soap(samples: &GradientSample) -> Result<StructuredFactor> {
    let ur = sym_eig(&samples.mean_gtg(), None)?.vectors;
    let ul = sym_eig(&samples.mean_ggt(), None)?.vectors;
    fit_soap_with(samples, ul, ur)
}

/// The eigenvalue step with both bases held fixed.
pub fn fit_soap_with(samples: &GradientSample, ul: Matrix, ur: Matrix) -> Result<StructuredFactor> {
    let (m, n) = (samples.rows(), samples.cols());
    ensure!(ul.shape() == (m, m), Dimension, "U_L must be {m}x{m}");
    ensure!(ur.shape() == (n, n), Dimension, "U_R must be {n}x{n}");
    let dtab = samples.mean_of(|g| {
        ul.t_matmul(g)
            .and_then(|x| x.matmul(&ur))
            .expect("shape checked")
            .square()
    });
    Ok(StructuredFactor::SoapEigen { ur, ul, dtab })
}

/// Runs `iters` rounds of `s = Pᵀq/‖q‖²`, `q = P·s/‖s‖²` from `q_init`.
///
/// Zero iterates are left at zero instead of dividing by zero, so the
/// optimizer can feed single gradients with empty rows or columns.
pub fn two_sided_iterate(p: &Matrix, q_init: &[f64], iters: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(q_init.len(), p.rows());
    let mut q = q_init.to_vec();
    let mut s = vec![0.0; p.cols()];
    for _ in 0..iters {
        let qn = dot(&q, &q);
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = if qn > 0.0 {
                dot(p.col(j), &q) / qn
            } else {
                0.0
            };
        }
        let sn = dot(&s, &s);
        q = p.matvec(&s);
        if sn > 0.0 {
            q.iter_mut().for_each(|x| *x /= sn);
        } else {
            q.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    (s, q)
}

/// Fixed point for `S ⊗ Q` with both factors positive diagonal.
pub fn fit_two_sided(
    samples: &GradientSample,
    iters: usize,
    q_init: &[f64],
) -> Result<StructuredFactor> {
    ensure!(
        iters >= 1,
        Precondition,
        "two-sided scaling needs at least one iteration"
    );
    ensure!(
        q_init.len() == samples.rows(),
        Dimension,
        "q_init must have length {}",
        samples.rows()
    );
    ensure!(
        q_init.iter().all(|&x| x > 0.0),
        Positivity,
        "q_init must be positive"
    );
    let p = samples.mean_sq();
    ensure!(
        p.as_slice().iter().all(|&x| x > 0.0),
        Positivity,
        "E[G⊙²] must be strictly positive entrywise"
    );
    let (s, q) = two_sided_iterate(&p, q_init, iters);
    Ok(StructuredFactor::TwoSidedScaling { s, q })
}

/// Per-column second moments `E[gᵢgᵢᵀ]`.
pub fn column_second_moments(samples: &GradientSample) -> Vec<Matrix> {
    (0..samples.cols())
        .map(|i| {
            samples.mean_of(|g| {
                let c = Matrix::column_vector(g.col(i));
                c.gram_rows()
            })
        })
        .collect()
}

/// Fitted `S ⊗ M` from the alternating fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralScaled {
    pub s: Vec<f64>,
    pub m: Matrix,
}

impl GeneralScaled {
    pub fn into_factor(self) -> StructuredFactor {
        StructuredFactor::ScaledKronecker {
            s: self.s,
            m: self.m,
        }
    }
}

/// `sⱼ = ⟨M, Bⱼ⟩/‖M‖_F²` for column blocks `Bⱼ = E[gⱼgⱼᵀ]`.
pub fn general_s_step(blocks: &[Matrix], m: &Matrix) -> Vec<f64> {
    let mn = m.frobenius_sq();
    blocks
        .iter()
        .map(|b| dot(b.as_slice(), m.as_slice()) / mn)
        .collect()
}

/// `M = Σⱼ sⱼBⱼ / ‖s‖²`.
pub fn general_m_step(blocks: &[Matrix], s: &[f64]) -> Matrix {
    let mut acc = Matrix::zeros(blocks[0].rows(), blocks[0].cols());
    for (b, &sj) in blocks.iter().zip(s) {
        acc.axpby(1.0, sj, b).expect("blocks share a shape");
    }
    acc.scale(1.0 / dot(s, s))
}

/// Alternating fixed point for `S ⊗ M` starting from `M = Iₘ`.
pub fn fit_general_scaled(samples: &GradientSample, iters: usize) -> Result<GeneralScaled> {
    fit_general_scaled_from(samples, iters, Matrix::identity(samples.rows()))
}

/// Alternating fixed point for `S ⊗ M` from an explicit starting `M`.
///
/// Each half-step is an exact least-squares solve, so the objective never
/// increases.
pub fn fit_general_scaled_from(
    samples: &GradientSample,
    iters: usize,
    m0: Matrix,
) -> Result<GeneralScaled> {
    ensure!(iters >= 1, Precondition, "needs at least one iteration");
    ensure!(
        m0.shape() == (samples.rows(), samples.rows()),
        Dimension,
        "M₀ has the wrong shape"
    );
    let blocks = column_second_moments(samples);
    for (j, bj) in blocks.iter().enumerate() {
        for (k, bk) in blocks.iter().enumerate() {
            ensure!(
                dot(bj.as_slice(), bk.as_slice()) > 0.0,
                Positivity,
                "E[(GᵀG')⊙²] has a non-positive entry at ({j}, {k})"
            );
        }
    }
    let mut m = m0;
    let mut s = Vec::new();
    for _ in 0..iters {
        s = general_s_step(&blocks, &m);
        m = general_m_step(&blocks, &s);
    }
    Ok(GeneralScaled { s, m })
}

/// Per-column energy outside `span(U)`: `1ₘᵀG⊙² − 1ᵣᵀ(UᵀG)⊙²`.
pub fn residual_energy(g: &Matrix, u: &Matrix) -> Vec<f64> {
    let total = g.square().col_sums();
    let kept = u.t_matmul(g).expect("U has m rows").square().col_sums();
    total.iter().zip(&kept).map(|(a, b)| a - b).collect()
}

/// `diag(S) = √(m−r)/√E[residual energy]` with the energy floored at
/// [`POSITIVITY_FLOOR`].
pub fn fit_compensation_scale(samples: &GradientSample, u: &Matrix) -> Result<StructuredFactor> {
    let (m, r) = u.shape();
    ensure!(
        m == samples.rows(),
        Dimension,
        "U has {m} rows, gradients have {}",
        samples.rows()
    );
    // Validates r < m and orthonormality.
    qr_complement(u)?;
    let mut p = vec![0.0; samples.cols()];
    for g in samples.mats() {
        for (acc, e) in p.iter_mut().zip(residual_energy(g, u)) {
            *acc += e;
        }
    }
    let scale = ((m - r) as f64).sqrt();
    let s = p
        .iter()
        .map(|&x| scale / (x / samples.len() as f64).max(POSITIVITY_FLOOR).sqrt())
        .collect();
    Ok(StructuredFactor::CompensationScale { s, u: u.clone() })
}

/// `Mᵢ = E[gᵢgᵢᵀ]`. Refused for `m > 8`.
pub fn fit_general_blockdiag(samples: &GradientSample) -> Result<StructuredFactor> {
    ensure!(
        samples.rows() <= BLOCKDIAG_MAX_ROWS,
        Refused,
        "general block-diagonal fit is limited to m ≤ {BLOCKDIAG_MAX_ROWS}"
    );
    Ok(StructuredFactor::GeneralBlockDiag {
        blocks: column_second_moments(samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn one(rows: &[&[f64]]) -> GradientSample {
        GradientSample::single(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let f = fit_diagonal(&one(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert!(
            matches!(f, StructuredFactor::Diagonal { ref v, .. } if v == &[1.0, 9.0, 4.0, 16.0])
        );
        let two = GradientSample::new(vec![
            Matrix::from_rows(&[&[1.0], &[0.0]]).unwrap(),
            Matrix::from_rows(&[&[0.0], &[2.0]]).unwrap(),
        ])
        .unwrap();
        assert!(
            matches!(fit_diagonal(&two), StructuredFactor::Diagonal { ref v, .. } if v == &[0.5, 2.0])
        );
    }

    #[test]
    fn shampoo_of_identity() {
        let StructuredFactor::KroneckerSqrt { rn, lm } =
            fit_kronecker_shampoo(&one(&[&[1.0, 0.0], &[0.0, 1.0]]))
        else {
            unreachable!()
        };
        assert_eq!(rn, Matrix::identity(2).scale(0.5));
        assert_eq!(lm, Matrix::identity(2).scale(0.5));
    }

    #[test]
    fn normalization_and_whitening_examples() {
        let h = 0.5_f64.sqrt();
        let StructuredFactor::Normalization { s, .. } =
            fit_normalization(&one(&[&[h, 1.0], &[h, 0.0]])).unwrap()
        else {
            unreachable!()
        };
        assert!(s.iter().all(|x| (x - 0.5).abs() < 1e-15));
        let StructuredFactor::Whitening { m, .. } = fit_whitening(&one(&[&[h, h], &[h, -h]]))
        else {
            unreachable!()
        };
        assert!(m.rel_dist(&Matrix::identity(2).scale(0.5)) < 1e-15);
        assert!(matches!(
            fit_normalization(&one(&[&[1.0, 0.0], &[1.0, 0.0]])),
            Err(Error::Positivity(_))
        ));
    }

    #[test]
    fn shared_eigen_of_diagonal_gradient() {
        let StructuredFactor::SharedEigen { uf, dtab } =
            fit_shared_eigen(&one(&[&[1.0, 0.0], &[0.0, 2.0]])).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(uf, Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap());
        assert_eq!(
            dtab,
            Matrix::from_rows(&[&[0.0, 4.0], &[1.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn two_sided_rank_one_is_exact_after_one_round() {
        let (u, v): ([f64; 3], [f64; 2]) = ([1.0, 2.0, 0.5], [3.0, 1.0]);
        let g = Matrix::from_fn(3, 2, |i, j| (u[i] * v[j]).sqrt());
        let f = fit_two_sided(&GradientSample::single(g).unwrap(), 1, &[1.0; 3]).unwrap();
        let StructuredFactor::TwoSidedScaling { s, q } = f else {
            unreachable!()
        };
        for i in 0..3 {
            for j in 0..2 {
                assert!((q[i] * s[j] - u[i] * v[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_sided_rejects_zero_entries() {
        let r = fit_two_sided(&one(&[&[1.0, 0.0], &[1.0, 1.0]]), 5, &[1.0, 1.0]);
        assert!(matches!(r, Err(Error::Positivity(_))));
    }

    #[test]
    fn compensation_with_axis_basis() {
        let g = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 0.5], &[-1.0, 2.0]]).unwrap();
        let u = Matrix::identity(3).leading_columns(1);
        let StructuredFactor::CompensationScale { s, .. } =
            fit_compensation_scale(&GradientSample::single(g).unwrap(), &u).unwrap()
        else {
            unreachable!()
        };
        assert!((s[0] - 2.0_f64.sqrt() / 10.0_f64.sqrt()).abs() < 1e-15);
        assert!((s[1] - 2.0_f64.sqrt() / 4.25_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn blockdiag_guard_and_single_sample() {
        let g = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let StructuredFactor::GeneralBlockDiag { blocks } =
            fit_general_blockdiag(&GradientSample::single(g).unwrap()).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(
            blocks[1],
            Matrix::from_rows(&[&[4.0, 8.0], &[8.0, 16.0]]).unwrap()
        );
        let big = GradientSample::single(Matrix::zeros(9, 1)).unwrap();
        assert!(matches!(
            fit_general_blockdiag(&big),
            Err(Error::Refused(_))
        ));
    }
}
