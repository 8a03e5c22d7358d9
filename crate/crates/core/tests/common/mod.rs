#![allow(dead_code)]

use fimopt::fim::GradientSample;
use fimopt::matlib::{random, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gradients with a correlated row and column structure so that every
/// fitted factor is well conditioned and non-trivial.
pub fn samples(seed: u64, m: usize, n: usize, count: usize) -> GradientSample {
    let mut r = rng(seed);
    let a = random::gaussian(&mut r, m, m);
    let b = random::gaussian(&mut r, n, n);
    let mats = (0..count)
        .map(|_| {
            let z = random::gaussian(&mut r, m, n);
            let base = a.matmul(&z).unwrap().matmul(&b).unwrap().scale(0.5);
            base.add(&random::gaussian(&mut r, m, n).scale(0.3))
                .unwrap()
        })
        .collect();
    GradientSample::new(mats).unwrap()
}

pub fn assert_close(a: &Matrix, b: &Matrix, tol: f64, what: &str) {
    let d = a.sub(b).unwrap().frobenius() / b.frobenius().max(1.0);
    assert!(d <= tol, "{what}: relative distance {d:.3e} > {tol:.1e}");
}

/// Cosine between two vectors, sign-insensitive.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}
