//! Seeded random matrices. Every generator in the crate draws from ChaCha8 so
//! results are reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, Matrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(g: &mut SeededRng) -> f64 {
    g.sample(StandardNormal)
}

/// Real standard normal entries stored as complex numbers.
pub fn gaussian_real(g: &mut SeededRng, n: usize, m: usize) -> Matrix {
    let mut out = Matrix::zeros(n, m);
    for z in out.iter_mut() {
        *z = c64(normal(g), 0.0);
    }
    out
}

/// Circular complex normal entries with unit variance.
pub fn gaussian_complex(g: &mut SeededRng, n: usize, m: usize) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Matrix::zeros(n, m);
    for z in out.iter_mut() {
        *z = c64(s * normal(g), s * normal(g));
    }
    out
}

pub fn uniform(g: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    g.random_range(lo..hi)
}
