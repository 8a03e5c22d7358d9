//! Brute-force minimization of `‖F̃(θ) − F‖_F²` over one structure family.
//!
//! Every family certified here is linear in its free parameters, so `F̃(θ)`
//! is assembled from a sparse basis `Σ θₖBₖ` and minimized by projected
//! gradient descent. Non-negativity is enforced by clamping and positive
//! semidefiniteness by clipping eigenvalues of each symmetric block.

use crate::error::{ensure, Result};
use crate::matlib::{kron, qr_complement, sym_eig, Matrix};

use super::{EmpiricalFim, GradientSample, StructuredFactor, MAX_DENSE_DIM};

/// Structure family searched by [`oracle_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `diagv(v)`, `v ≥ 0`.
    Diagonal,
    /// `diagv(s) ⊗ Iₘ`, `s ≥ 0`.
    Normalization,
    /// `Iₙ ⊗ M`, `M ⪰ 0`.
    Whitening,
    /// `Rₙ ⊗ Iₘ`, `Rₙ ⪰ 0`.
    ShampooRight,
    /// `Iₙ ⊗ Lₘ`, `Lₘ ⪰ 0`. Same set as [`Family::Whitening`].
    ShampooLeft,
    /// Shared-eigenbasis block diagonal with `U_f` fixed, eigenvalues free.
    SharedEigenD { uf: Matrix },
    /// Rotated diagonal with `U_L`, `U_R` fixed, diagonal free.
    SoapD { ul: Matrix, ur: Matrix },
    /// `diagv(t) ⊗ U_cU_cᵀ` with `t = s^(-2) ≥ 0` and `U_c ⟂ U` fixed.
    CompensationScale { u: Matrix },
    /// `diagb(M₁, …, Mₙ)`, each `Mᵢ ⪰ 0`.
    GeneralBlockDiag,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Diagonal => "diagonal",
            Family::Normalization => "normalization",
            Family::Whitening => "whitening",
            Family::ShampooRight => "shampoo_right",
            Family::ShampooLeft => "shampoo_left",
            Family::SharedEigenD { .. } => "shared_eigen_d",
            Family::SoapD { .. } => "soap_d",
            Family::CompensationScale { .. } => "compensation_scale",
            Family::GeneralBlockDiag => "general_block_diag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub max_steps: usize,
    pub step: f64,
    /// Converged once no parameter moves by more than this in one step.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_steps: 50_000,
            step: 1e-2,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub factor: StructuredFactor,
    pub loss: f64,
    pub steps: usize,
    pub converged: bool,
}

type Triplets = Vec<(usize, usize, f64)>;

enum Group {
    NonNeg {
        start: usize,
        len: usize,
    },
    /// Symmetric `dim×dim` block stored as its upper triangle, column by column.
    Psd {
        start: usize,
        dim: usize,
    },
}

struct Basis {
    elems: Vec<Triplets>,
    groups: Vec<Group>,
    init: Vec<f64>,
}

fn sym_index_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for j in 0..dim {
        for i in 0..=j {
            out.push((i, j));
        }
    }
    out
}

fn unpack_sym(theta: &[f64], dim: usize) -> Matrix {
    let mut m = Matrix::zeros(dim, dim);
    for (&x, (i, j)) in theta.iter().zip(sym_index_pairs(dim)) {
        m[(i, j)] = x;
        m[(j, i)] = x;
    }
    m
}

fn pack_sym(m: &Matrix, out: &mut [f64]) {
    for (x, (i, j)) in out.iter_mut().zip(sym_index_pairs(m.rows())) {
        *x = m[(i, j)];
    }
}

/// Basis for `Iₖ ⊗ S` (`outer_first = false`) or `S ⊗ Iₖ` with `S` symmetric `dim×dim`.
fn sym_kron_basis(dim: usize, k: usize, sym_is_left: bool) -> Vec<Triplets> {
    sym_index_pairs(dim)
        .into_iter()
        .map(|(i, j)| {
            let mut t = Triplets::new();
            for b in 0..k {
                let mut push = |a: usize, c: usize| {
                    if sym_is_left {
                        t.push((a * k + b, c * k + b, 1.0));
                    } else {
                        t.push((b * dim + a, b * dim + c, 1.0));
                    }
                };
                push(i, j);
                if i != j {
                    push(j, i);
                }
            }
            t
        })
        .collect()
}

fn dense_rank_one(w: &[f64]) -> Triplets {
    let mut t = Triplets::new();
    for (a, &wa) in w.iter().enumerate() {
        for (b, &wb) in w.iter().enumerate() {
            let v = wa * wb;
            if v != 0.0 {
                t.push((a, b, v));
            }
        }
    }
    t
}

fn build_basis(family: &Family, m: usize, n: usize) -> Result<Basis> {
    let mn = m * n;
    let ones = |k: usize| vec![1.0; k];
    let identity_init = |dim: usize, copies: usize| {
        let mut v = Vec::new();
        for _ in 0..copies {
            let mut block = vec![0.0; dim * (dim + 1) / 2];
            pack_sym(&Matrix::identity(dim), &mut block);
            v.extend(block);
        }
        v
    };
    Ok(match family {
        Family::Diagonal => Basis {
            elems: (0..mn).map(|k| vec![(k, k, 1.0)]).collect(),
            groups: vec![Group::NonNeg { start: 0, len: mn }],
            init: ones(mn),
        },
        Family::Normalization => Basis {
            elems: (0..n)
                .map(|j| (0..m).map(|i| (j * m + i, j * m + i, 1.0)).collect())
                .collect(),
            groups: vec![Group::NonNeg { start: 0, len: n }],
            init: ones(n),
        },
        Family::Whitening | Family::ShampooLeft => Basis {
            elems: sym_kron_basis(m, n, false),
            groups: vec![Group::Psd { start: 0, dim: m }],
            init: identity_init(m, 1),
        },
        Family::ShampooRight => Basis {
            elems: sym_kron_basis(n, m, true),
            groups: vec![Group::Psd { start: 0, dim: n }],
            init: identity_init(n, 1),
        },
        Family::SharedEigenD { uf } => {
            ensure!(uf.shape() == (m, m), Dimension, "U_f must be {m}x{m}");
            let mut elems = Vec::with_capacity(mn);
            for i in 0..n {
                for k in 0..m {
                    let mut w = vec![0.0; mn];
                    w[i * m..(i + 1) * m].copy_from_slice(uf.col(k));
                    elems.push(dense_rank_one(&w));
                }
            }
            Basis {
                elems,
                groups: vec![Group::NonNeg { start: 0, len: mn }],
                init: ones(mn),
            }
        }
        Family::SoapD { ul, ur } => {
            ensure!(
                ul.shape() == (m, m) && ur.shape() == (n, n),
                Dimension,
                "bases do not match {m}x{n}"
            );
            let k = kron(ur, ul);
            let elems = (0..mn).map(|c| dense_rank_one(k.col(c))).collect();
            Basis {
                elems,
                groups: vec![Group::NonNeg { start: 0, len: mn }],
                init: ones(mn),
            }
        }
        Family::CompensationScale { u } => {
            ensure!(u.rows() == m, Dimension, "U must have {m} rows");
            let uc = qr_complement(u)?;
            let proj = uc.gram_rows();
            let elems = (0..n)
                .map(|j| {
                    let mut t = Triplets::new();
                    for a in 0..m {
                        for b in 0..m {
                            if proj[(a, b)] != 0.0 {
                                t.push((j * m + a, j * m + b, proj[(a, b)]));
                            }
                        }
                    }
                    t
                })
                .collect();
            Basis {
                elems,
                groups: vec![Group::NonNeg { start: 0, len: n }],
                init: ones(n),
            }
        }
        Family::GeneralBlockDiag => {
            let per = m * (m + 1) / 2;
            let mut elems = Vec::with_capacity(n * per);
            let mut groups = Vec::with_capacity(n);
            for i in 0..n {
                groups.push(Group::Psd {
                    start: i * per,
                    dim: m,
                });
                for (a, b) in sym_index_pairs(m) {
                    let mut t = vec![(i * m + a, i * m + b, 1.0)];
                    if a != b {
                        t.push((i * m + b, i * m + a, 1.0));
                    }
                    elems.push(t);
                }
            }
            Basis {
                elems,
                groups,
                init: identity_init(m, n),
            }
        }
    })
}

fn project(groups: &[Group], theta: &mut [f64]) -> Result<()> {
    for g in groups {
        match *g {
            Group::NonNeg { start, len } => {
                theta[start..start + len]
                    .iter_mut()
                    .for_each(|x| *x = x.max(0.0));
            }
            Group::Psd { start, dim } => {
                let len = dim * (dim + 1) / 2;
                let block = unpack_sym(&theta[start..start + len], dim);
                let eig = sym_eig(&block, None)?;
                if eig.values.last().is_some_and(|&l| l < 0.0) {
                    let clipped = eig.map_values(|l| l.max(0.0)).symmetrize();
                    pack_sym(&clipped, &mut theta[start..start + len]);
                }
            }
        }
    }
    Ok(())
}

fn assemble(elems: &[Triplets], theta: &[f64], dim: usize) -> Matrix {
    let mut out = Matrix::zeros(dim, dim);
    for (t, &x) in elems.iter().zip(theta) {
        if x != 0.0 {
            for &(a, b, v) in t {
                out[(a, b)] += x * v;
            }
        }
    }
    out
}

fn to_factor(family: &Family, theta: &[f64], m: usize, n: usize) -> Result<StructuredFactor> {
    Ok(match family {
        Family::Diagonal => StructuredFactor::Diagonal {
            v: theta.to_vec(),
            rows: m,
            cols: n,
        },
        Family::Normalization => StructuredFactor::Normalization {
            s: theta.to_vec(),
            rows: m,
        },
        Family::Whitening | Family::ShampooLeft => StructuredFactor::Whitening {
            m: unpack_sym(theta, m),
            cols: n,
        },
        Family::ShampooRight => StructuredFactor::RightKronecker {
            rn: unpack_sym(theta, n),
            rows: m,
        },
        Family::SharedEigenD { uf } => StructuredFactor::SharedEigen {
            uf: uf.clone(),
            dtab: Matrix::from_col_major(m, n, theta.to_vec())?,
        },
        Family::SoapD { ul, ur } => StructuredFactor::SoapEigen {
            ur: ur.clone(),
            ul: ul.clone(),
            dtab: Matrix::from_col_major(m, n, theta.to_vec())?,
        },
        Family::CompensationScale { u } => StructuredFactor::CompensationScale {
            s: theta
                .iter()
                .map(|&t| 1.0 / t.max(super::fit::POSITIVITY_FLOOR).sqrt())
                .collect(),
            u: u.clone(),
        },
        Family::GeneralBlockDiag => {
            let per = m * (m + 1) / 2;
            StructuredFactor::GeneralBlockDiag {
                blocks: (0..n)
                    .map(|i| unpack_sym(&theta[i * per..(i + 1) * per], m))
                    .collect(),
            }
        }
    })
}

/// Projected gradient descent with a fixed step, halved whenever a step
/// would increase the loss. Returns the best iterate and whether the
/// parameter tolerance was met within `max_steps`.
pub fn oracle_minimize(
    family: &Family,
    fim: &EmpiricalFim,
    init: Option<&[f64]>,
    opts: &OracleOptions,
) -> Result<OracleOutcome> {
    let (m, n) = (fim.rows, fim.cols);
    let dim = m * n;
    ensure!(
        dim <= MAX_DENSE_DIM,
        Refused,
        "oracle limited to mn ≤ {MAX_DENSE_DIM}"
    );
    ensure!(
        fim.f.shape() == (dim, dim),
        Dimension,
        "FIM is not {dim}x{dim}"
    );
    let basis = build_basis(family, m, n)?;
    let mut theta = match init {
        Some(v) => {
            ensure!(
                v.len() == basis.init.len(),
                Dimension,
                "init must have {} parameters",
                basis.init.len()
            );
            v.to_vec()
        }
        None => basis.init.clone(),
    };
    project(&basis.groups, &mut theta)?;

    let loss_of = |th: &[f64]| -> (f64, Matrix) {
        let resid = assemble(&basis.elems, th, dim)
            .sub(&fim.f)
            .expect("same shape");
        (resid.frobenius_sq(), resid)
    };
    let (mut loss, mut resid) = loss_of(&theta);
    let mut step = opts.step;
    let mut converged = false;
    let mut steps = 0;
    while steps < opts.max_steps {
        steps += 1;
        let grad: Vec<f64> = basis
            .elems
            .iter()
            .map(|t| 2.0 * t.iter().map(|&(a, b, v)| v * resid[(a, b)]).sum::<f64>())
            .collect();
        let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
        project(&basis.groups, &mut cand)?;
        let (cl, cr) = loss_of(&cand);
        if cl > loss {
            step *= 0.5;
            if step < 1e-20 {
                converged = true;
                break;
            }
            continue;
        }
        let moved = theta
            .iter()
            .zip(&cand)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        theta = cand;
        loss = cl;
        resid = cr;
        if moved <= opts.tol {
            converged = true;
            break;
        }
    }
    let factor = to_factor(family, &theta, m, n)?;
    let loss = super::structure_loss(&factor, fim)?;
    Ok(OracleOutcome {
        factor,
        loss,
        steps,
        converged,
    })
}

/// `F̃_c = diagb(U_c·D_{c,i}·U_cᵀ)` with `D_{c,i} = diagv(E[(U_cᵀgᵢ)⊙²])`,
/// the complement part of the shared-eigenbasis approximation.
pub fn compensation_target(samples: &GradientSample, u: &Matrix) -> Result<EmpiricalFim> {
    let (m, n) = (samples.rows(), samples.cols());
    ensure!(
        m * n <= MAX_DENSE_DIM,
        Refused,
        "dense target limited to mn ≤ {MAX_DENSE_DIM}"
    );
    let uc = qr_complement(u)?;
    let d = samples.mean_of(|g| uc.t_matmul(g).expect("U_c has m rows").square());
    let blocks: Vec<Matrix> = (0..n)
        .map(|i| {
            let scaled = uc.scale_rows_cols(&vec![1.0; m], d.col(i));
            scaled.matmul_t(&uc).expect("same width")
        })
        .collect();
    Ok(EmpiricalFim {
        f: crate::matlib::diagb(&blocks)?,
        rows: m,
        cols: n,
    })
}
