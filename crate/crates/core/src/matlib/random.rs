//! Seeded random matrices for tests, benches and synthetic problems.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{qr, Matrix};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-like random matrix with orthonormal columns.
pub fn orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    assert!(
        cols <= rows,
        "cannot fit {cols} orthonormal columns in dimension {rows}"
    );
    loop {
        let f = qr(&gaussian(rng, rows, cols));
        if !f.rank_deficient {
            return f.thin_q();
        }
    }
}

/// Random SPD matrix with eigenvalues drawn log-uniformly from `[1, cond]`.
pub fn spd<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> Matrix {
    let u = orthonormal(rng, n, n);
    let vals: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => cond,
            _ => cond.powf(rng.random::<f64>()),
        })
        .collect();
    let scaled = u.scale_rows_cols(&vec![1.0; n], &vals);
    scaled.matmul_t(&u).expect("square").symmetrize()
}
