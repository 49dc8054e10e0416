//! Shared helpers for the integration tests.

#![allow(dead_code)]

use llae::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// Standard normal via Box-Muller; good enough for synthetic data.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// Random matrix with orthonormal columns from Gram-Schmidt on Gaussian
/// draws; repeats until the draw is well conditioned.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    assert!(cols <= rows);
    loop {
        let g = gaussian_matrix(rng, rows, cols);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
        let mut ok = true;
        for j in 0..cols {
            let mut v = g.column(j);
            for prev in &q {
                let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= dot * pi;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            q.push(v);
        }
        if !ok {
            continue;
        }
        let mut out = DenseMatrix::zeros(rows, cols);
        for (j, col) in q.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        return out;
    }
}

/// Rank-deficient planted encoder: product of thin Gaussian factors.
pub fn planted_low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
    let left = gaussian_matrix(rng, rows, rank);
    let right = gaussian_matrix(rng, rank, cols);
    left.matmul(&right).unwrap()
}
