//! Sylvester equation solver `AW + WB = C`.
//!
//! The production path is Bartels-Stewart: real Schur forms of `A` and `B`,
//! a quasi-triangular back-substitution in the rotated frame, and a rotation
//! back. `kron_oracle_solve` solves the same equation through the dense
//! `(I (x) A + B' (x) I) vec(W) = vec(C)` system by Gaussian elimination and
//! exists purely as an independent cross-check for small problems.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::schur::{real_schur, SchurDecomposition};

/// Largest `a.rows * b.rows` the dense Kronecker oracle accepts.
pub const KRON_SIZE_CAP: usize = 4096;

/// Relative pivot floor below which the spectra of `A` and `-B` are treated
/// as overlapping.
const OVERLAP_RTOL: f64 = 1e-12;

fn check_shapes(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !b.is_square() {
        return Err(Error::NotSquare {
            rows: b.rows(),
            cols: b.cols(),
        });
    }
    if c.rows() != a.rows() || c.cols() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "solve_sylvester",
            left: (a.rows(), b.rows()),
            right: c.shape(),
        });
    }
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::EmptyMatrix {
            op: "solve_sylvester",
        });
    }
    Ok(())
}

/// Solves `AW + WB = C` by Bartels-Stewart.
///
/// Requires the spectra of `A` and `-B` to be disjoint; a near-zero pivot in
/// the back-substitution surfaces as [`Error::SpectralOverlap`].
pub fn solve_sylvester(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    check_shapes(a, b, c)?;
    let schur_a = real_schur(a)?;
    let schur_b = real_schur(b)?;
    solve_sylvester_prefactored(&schur_a, &schur_b, c)
}

/// Bartels-Stewart back end working from precomputed Schur forms, so a
/// caller solving against a fixed `B` can factor it once.
pub fn solve_sylvester_prefactored(
    schur_a: &SchurDecomposition,
    schur_b: &SchurDecomposition,
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    let k = schur_a.t.rows();
    let d = schur_b.t.rows();
    if c.rows() != k || c.cols() != d {
        return Err(Error::ShapeMismatch {
            op: "solve_sylvester",
            left: (k, d),
            right: c.shape(),
        });
    }

    let ta = &schur_a.t;
    let tb = &schur_b.t;
    // Rotate the right-hand side into the Schur frame: F = Qa' C Qb.
    let f = schur_a
        .q
        .transpose()
        .matmul(c)?
        .matmul(&schur_b.q)?;

    let pivot_tol =
        OVERLAP_RTOL * (ta.frobenius_norm() + tb.frobenius_norm()).max(1.0);

    // Solve Ta Y + Y Tb = F column-block by column-block, left to right.
    let mut y = DenseMatrix::zeros(k, d);
    let mut j = 0;
    while j < d {
        let wide = j + 1 < d && tb[(j + 1, j)] != 0.0;
        if !wide {
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let mut v = f[(i, j)];
                for m in 0..j {
                    v -= y[(i, m)] * tb[(m, j)];
                }
                rhs[i] = v;
            }
            solve_shifted_column(ta, tb[(j, j)], &rhs, &mut y, j, pivot_tol)?;
            j += 1;
        } else {
            // Columns j and j+1 couple through a 2x2 block of Tb.
            let mut rhs0 = vec![0.0; k];
            let mut rhs1 = vec![0.0; k];
            for i in 0..k {
                let mut v0 = f[(i, j)];
                let mut v1 = f[(i, j + 1)];
                for m in 0..j {
                    v0 -= y[(i, m)] * tb[(m, j)];
                    v1 -= y[(i, m)] * tb[(m, j + 1)];
                }
                rhs0[i] = v0;
                rhs1[i] = v1;
            }
            let block = [
                tb[(j, j)],
                tb[(j, j + 1)],
                tb[(j + 1, j)],
                tb[(j + 1, j + 1)],
            ];
            solve_coupled_columns(ta, &block, &rhs0, &rhs1, &mut y, j, pivot_tol)?;
            j += 2;
        }
    }

    // Rotate back: W = Qa Y Qb'.
    schur_a
        .q
        .matmul(&y)?
        .matmul(&schur_b.q.transpose())
}

/// Back-substitution for `(Ta + shift I) x = rhs` with `Ta` quasi-triangular;
/// the solution lands in column `col` of `y`.
fn solve_shifted_column(
    ta: &DenseMatrix,
    shift: f64,
    rhs: &[f64],
    y: &mut DenseMatrix,
    col: usize,
    pivot_tol: f64,
) -> Result<()> {
    let k = ta.rows();
    let mut x = vec![0.0; k];
    let mut i = k;
    while i > 0 {
        i -= 1;
        let in_block = i > 0 && ta[(i, i - 1)] != 0.0;
        if in_block {
            let p = i - 1;
            let mut r0 = rhs[p];
            let mut r1 = rhs[i];
            for m in i + 1..k {
                r0 -= ta[(p, m)] * x[m];
                r1 -= ta[(i, m)] * x[m];
            }
            let mat = [
                ta[(p, p)] + shift,
                ta[(p, i)],
                ta[(i, p)],
                ta[(i, i)] + shift,
            ];
            let sol = solve_small::<2>(
                [[mat[0], mat[1]], [mat[2], mat[3]]],
                [r0, r1],
                pivot_tol,
            )?;
            x[p] = sol[0];
            x[i] = sol[1];
            i -= 1;
        } else {
            let pivot = ta[(i, i)] + shift;
            if pivot.abs() <= pivot_tol {
                return Err(Error::SpectralOverlap {
                    pivot: pivot.abs(),
                    tolerance: pivot_tol,
                });
            }
            let mut r = rhs[i];
            for m in i + 1..k {
                r -= ta[(i, m)] * x[m];
            }
            x[i] = r / pivot;
        }
    }
    for i in 0..k {
        y[(i, col)] = x[i];
    }
    Ok(())
}

/// Coupled solve for a 2x2 block of `Tb`: columns `col`, `col + 1` of `y`.
fn solve_coupled_columns(
    ta: &DenseMatrix,
    tb_block: &[f64; 4],
    rhs0: &[f64],
    rhs1: &[f64],
    y: &mut DenseMatrix,
    col: usize,
    pivot_tol: f64,
) -> Result<()> {
    let k = ta.rows();
    let (b00, b01, b10, b11) = (tb_block[0], tb_block[1], tb_block[2], tb_block[3]);
    let mut x0 = vec![0.0; k];
    let mut x1 = vec![0.0; k];
    let mut i = k;
    while i > 0 {
        i -= 1;
        let in_block = i > 0 && ta[(i, i - 1)] != 0.0;
        if in_block {
            let p = i - 1;
            let mut r = [rhs0[p], rhs0[i], rhs1[p], rhs1[i]];
            for m in i + 1..k {
                r[0] -= ta[(p, m)] * x0[m];
                r[1] -= ta[(i, m)] * x0[m];
                r[2] -= ta[(p, m)] * x1[m];
                r[3] -= ta[(i, m)] * x1[m];
            }
            let (a00, a01, a10, a11) = (ta[(p, p)], ta[(p, i)], ta[(i, p)], ta[(i, i)]);
            // Unknowns ordered (x0[p], x0[i], x1[p], x1[i]).
            let m4 = [
                [a00 + b00, a01, b10, 0.0],
                [a10, a11 + b00, 0.0, b10],
                [b01, 0.0, a00 + b11, a01],
                [0.0, b01, a10, a11 + b11],
            ];
            let sol = solve_small::<4>(m4, r, pivot_tol)?;
            x0[p] = sol[0];
            x0[i] = sol[1];
            x1[p] = sol[2];
            x1[i] = sol[3];
            i -= 1;
        } else {
            let aii = ta[(i, i)];
            let mut r0 = rhs0[i];
            let mut r1 = rhs1[i];
            for m in i + 1..k {
                r0 -= ta[(i, m)] * x0[m];
                r1 -= ta[(i, m)] * x1[m];
            }
            let m2 = [[aii + b00, b10], [b01, aii + b11]];
            let sol = solve_small::<2>(m2, [r0, r1], pivot_tol)?;
            x0[i] = sol[0];
            x1[i] = sol[1];
        }
    }
    for i in 0..k {
        y[(i, col)] = x0[i];
        y[(i, col + 1)] = x1[i];
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting on a tiny fixed-size system.
fn solve_small<const N: usize>(
    mut m: [[f64; N]; N],
    mut rhs: [f64; N],
    pivot_tol: f64,
) -> Result<[f64; N]> {
    for col in 0..N {
        let mut best = col;
        for row in col + 1..N {
            if m[row][col].abs() > m[best][col].abs() {
                best = row;
            }
        }
        if m[best][col].abs() <= pivot_tol {
            return Err(Error::SpectralOverlap {
                pivot: m[best][col].abs(),
                tolerance: pivot_tol,
            });
        }
        if best != col {
            m.swap(col, best);
            rhs.swap(col, best);
        }
        let pivot_row = m[col];
        for row in col + 1..N {
            let factor = m[row][col] / pivot_row[col];
            for (entry, pivot) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *entry -= factor * pivot;
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut v = rhs[i];
        for j in i + 1..N {
            v -= m[i][j] * x[j];
        }
        x[i] = v / m[i][i];
    }
    Ok(x)
}

/// Dense Kronecker-product oracle for `AW + WB = C`.
///
/// Builds `(I_d (x) A + B' (x) I_k) vec(W) = vec(C)` with column-stacked
/// `vec` and solves it by Gaussian elimination with partial pivoting.
/// Capped at `a.rows * b.rows <= 4096`.
pub fn kron_oracle_solve(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    check_shapes(a, b, c)?;
    let k = a.rows();
    let d = b.rows();
    let n = k * d;
    if n > KRON_SIZE_CAP {
        return Err(Error::SizeCap {
            op: "kron_oracle_solve",
            size: n,
            cap: KRON_SIZE_CAP,
        });
    }

    // vec index of W(i, j) under column stacking is j*k + i.
    let mut sys = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for j in 0..d {
        for i in 0..k {
            let row = j * k + i;
            rhs[row] = c[(i, j)];
            for m in 0..k {
                sys[row * n + (j * k + m)] += a[(i, m)];
            }
            for l in 0..d {
                sys[row * n + (l * k + i)] += b[(l, j)];
            }
        }
    }

    gauss_solve(&mut sys, &mut rhs, n)?;

    let mut w = DenseMatrix::zeros(k, d);
    for j in 0..d {
        for i in 0..k {
            w[(i, j)] = rhs[j * k + i];
        }
    }
    Ok(w)
}

/// In-place Gaussian elimination with partial pivoting; the solution
/// replaces `rhs`.
fn gauss_solve(m: &mut [f64], rhs: &mut [f64], n: usize) -> Result<()> {
    let mut scale = 0.0f64;
    for v in m.iter() {
        scale = scale.max(v.abs());
    }
    let tol = f64::EPSILON * scale.max(1.0) * n as f64;

    for col in 0..n {
        let mut best = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[best * n + col].abs() {
                best = row;
            }
        }
        if m[best * n + col].abs() <= tol {
            return Err(Error::SingularSystem {
                op: "kron_oracle_solve",
            });
        }
        if best != col {
            for j in 0..n {
                m.swap(col * n + j, best * n + j);
            }
            rhs.swap(col, best);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for j in i + 1..n {
            v -= m[i * n + j] * rhs[j];
        }
        rhs[i] = v / m[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    fn rand_spd(seed: u64, n: usize) -> DenseMatrix {
        let g = rand_matrix(seed, n, n);
        let mut spd = g.matmul(&g.transpose()).unwrap();
        for i in 0..n {
            spd[(i, i)] += 0.5;
        }
        spd
    }

    fn residual(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, w: &DenseMatrix) -> f64 {
        a.matmul(w)
            .unwrap()
            .add(&w.matmul(b).unwrap())
            .unwrap()
            .sub(c)
            .unwrap()
            .frobenius_norm()
    }

    #[test]
    fn diagonal_case_is_entrywise_division() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 3.0]]).unwrap();
        let b = DenseMatrix::identity(2);
        let c = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 4.0]]).unwrap();
        let w = solve_sylvester(&a, &b, &c).unwrap();
        // w_ij = c_ij / (a_ii + b_jj)
        assert!((w[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((w[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(w[(0, 1)].abs() < 1e-12);
        assert!(w[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn identity_a_zero_b_returns_c() {
        let a = DenseMatrix::identity(3);
        let b = DenseMatrix::zeros(2, 2);
        let c = rand_matrix(1, 3, 2);
        let w = solve_sylvester(&a, &b, &c).unwrap();
        assert!(w.sub(&c).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn random_spd_matches_kron_oracle() {
        let a = rand_spd(10, 6);
        let b = rand_spd(11, 4);
        let c = rand_matrix(12, 6, 4);
        let w = solve_sylvester(&a, &b, &c).unwrap();
        let w_oracle = kron_oracle_solve(&a, &b, &c).unwrap();
        let gap = w.sub(&w_oracle).unwrap().frobenius_norm();
        assert!(gap <= 1e-8, "solver/oracle gap {gap}");
        assert!(residual(&a, &b, &c, &w) <= 1e-8 * c.frobenius_norm().max(1.0));
    }

    #[test]
    fn nonsymmetric_b_still_solves() {
        // Shapes and spectra as in alternating training: SPD-ish A, a
        // nonsymmetric product for B.
        let a = rand_spd(20, 5);
        let x = rand_matrix(21, 7, 9);
        let x2 = rand_matrix(22, 7, 9);
        let b = x.matmul(&x2.transpose()).unwrap().scale(0.3);
        let b = b.add(&DenseMatrix::identity(7).scale(2.0)).unwrap();
        let c = rand_matrix(23, 5, 7);
        let w = solve_sylvester(&a, &b, &c).unwrap();
        assert!(residual(&a, &b, &c, &w) <= 1e-8 * c.frobenius_norm().max(1.0));
        let w_oracle = kron_oracle_solve(&a, &b, &c).unwrap();
        assert!(w.sub(&w_oracle).unwrap().frobenius_norm() <= 1e-7);
    }

    #[test]
    fn complex_spectrum_b_exercises_coupled_columns() {
        // 90-degree rotation keeps a genuine 2x2 Schur block in B.
        let rot = DenseMatrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let a = rand_spd(30, 3);
        let c = rand_matrix(31, 3, 2);
        let w = solve_sylvester(&a, &rot, &c).unwrap();
        assert!(residual(&a, &rot, &c, &w) <= 1e-10);
        let w_oracle = kron_oracle_solve(&a, &rot, &c).unwrap();
        assert!(w.sub(&w_oracle).unwrap().frobenius_norm() <= 1e-9);
    }

    #[test]
    fn kron_scalar_case() {
        let a = DenseMatrix::new(1, 1, vec![2.0]).unwrap();
        let b = DenseMatrix::new(1, 1, vec![3.0]).unwrap();
        let c = DenseMatrix::new(1, 1, vec![10.0]).unwrap();
        let w = kron_oracle_solve(&a, &b, &c).unwrap();
        assert!((w[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kron_zero_a_identity_b_returns_c() {
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::identity(3);
        let c = rand_matrix(2, 2, 3);
        let w = kron_oracle_solve(&a, &b, &c).unwrap();
        assert!(w.sub(&c).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn kron_size_cap_enforced() {
        let a = DenseMatrix::identity(65);
        let b = DenseMatrix::identity(64);
        let c = DenseMatrix::zeros(65, 64);
        assert!(matches!(
            kron_oracle_solve(&a, &b, &c),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn spectral_overlap_is_detected() {
        let a = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let b = DenseMatrix::new(1, 1, vec![-1.0]).unwrap();
        let c = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let err = solve_sylvester(&a, &b, &c).unwrap_err();
        assert!(matches!(err, Error::SpectralOverlap { .. }));
        assert!(err.to_string().contains("ridge"));
    }

    #[test]
    fn linearity_in_rhs() {
        let a = rand_spd(40, 4);
        let b = rand_spd(41, 3);
        let c1 = rand_matrix(42, 4, 3);
        let c2 = rand_matrix(43, 4, 3);
        let w1 = solve_sylvester(&a, &b, &c1).unwrap();
        let w2 = solve_sylvester(&a, &b, &c2).unwrap();
        let w12 = solve_sylvester(&a, &b, &c1.add(&c2).unwrap()).unwrap();
        let gap = w12
            .sub(&w1.add(&w2).unwrap())
            .unwrap()
            .frobenius_norm();
        assert!(gap <= 1e-8 * w12.frobenius_norm().max(1.0));
    }

    #[test]
    fn shape_mismatch_reported() {
        let a = DenseMatrix::identity(2);
        let b = DenseMatrix::identity(3);
        let c = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            solve_sylvester(&a, &b, &c),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
