//! Deterministic data generators shared by the benchmarks.

use llae::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn uniform_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn symmetric_matrix(seed: u64, n: usize) -> DenseMatrix {
    let g = uniform_matrix(seed, n, n);
    g.add(&g.transpose()).unwrap().scale(0.5)
}

pub fn spd_matrix(seed: u64, n: usize) -> DenseMatrix {
    let g = uniform_matrix(seed, n, n);
    let mut spd = g.matmul(&g.transpose()).unwrap();
    for i in 0..n {
        spd[(i, i)] += 0.5;
    }
    spd
}
