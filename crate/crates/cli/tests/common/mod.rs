//! Helpers shared by the CLI tests and the acceptance suite.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Mutex, MutexGuard, OnceLock};

use llae::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Serializes timing-sensitive tests within this binary so wall-clock
/// assertions see an unloaded machine.
pub fn gate() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    GATE.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

pub fn llae_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_llae"))
}

pub fn run_llae(args: &[&str], dir: &Path) -> Output {
    llae_bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should run")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// Random symmetric positive definite matrix with a comfortable spectral
/// floor.
pub fn spd_matrix(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let g = uniform_matrix(rng, n, n);
    let mut spd = g.matmul(&g.transpose()).unwrap();
    for i in 0..n {
        spd[(i, i)] += 0.5;
    }
    spd
}

/// Random nonsymmetric matrix shifted so its spectrum sits safely in the
/// right half-plane (the shift exceeds the spectral radius bound).
pub fn stable_nonsymmetric(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let x = uniform_matrix(rng, n, n + 3);
    let y = uniform_matrix(rng, n, n + 3);
    let product = x.matmul(&y.transpose()).unwrap().scale(0.3);
    let shift = product.frobenius_norm() + 0.2;
    let mut out = product;
    for i in 0..n {
        out[(i, i)] += shift;
    }
    out
}

/// Gram-Schmidt orthonormalization of Gaussian columns.
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

/// Indices of the `count` largest values in a column, best first.
pub fn top_indices(column: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| column[b].total_cmp(&column[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Writes a matrix as the headerless CSV the CLI consumes.
pub fn write_csv(path: &Path, m: &DenseMatrix) {
    let mut text = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{}", m[(i, j)])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Writes triples `item<TAB>user<TAB>1` for every non-zero entry.
pub fn write_behavior_triples(path: &Path, x: &DenseMatrix) {
    let mut text = String::new();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if x[(i, j)] != 0.0 {
                text.push_str(&format!("i{i}\tu{j}\t1\n"));
            }
        }
    }
    std::fs::write(path, text).unwrap();
}

/// Writes dense attribute triples `attr<TAB>user<TAB>value`.
pub fn write_attribute_triples(path: &Path, s: &DenseMatrix) {
    let mut text = String::new();
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            text.push_str(&format!("a{i}\tu{j}\t{}\n", s[(i, j)]));
        }
    }
    std::fs::write(path, text).unwrap();
}
