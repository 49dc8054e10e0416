//! Real Schur decomposition.
//!
//! Householder reduction to Hessenberg form followed by the Francis
//! double-shift QR iteration with accumulation of the orthogonal factor.
//! The result satisfies `M = Q T Q'` with `T` quasi-upper-triangular:
//! 1x1 diagonal blocks for real eigenvalues and 2x2 blocks only for
//! complex-conjugate pairs. Converged 2x2 blocks whose eigenvalues turn out
//! real are rotated apart before returning.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// QR iteration cap per deflated eigenvalue.
const MAX_ITERS_PER_EIGENVALUE: usize = 40;

/// Exceptional-shift cadence, matching common practice.
const EXCEPTIONAL_EVERY: usize = 10;

/// Orthogonal similarity `M = Q T Q'` in real Schur form.
#[derive(Debug, Clone)]
pub struct SchurDecomposition {
    /// Orthogonal factor.
    pub q: DenseMatrix,
    /// Quasi-upper-triangular factor.
    pub t: DenseMatrix,
}

impl SchurDecomposition {
    /// Eigenvalues read off the diagonal blocks of `t` as
    /// `(real, imaginary)` pairs.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let n = self.t.rows();
        let mut out = Vec::with_capacity(n);
        let mut p = 0;
        while p < n {
            if p + 1 < n && self.t[(p + 1, p)] != 0.0 {
                let a = self.t[(p, p)];
                let b = self.t[(p, p + 1)];
                let c = self.t[(p + 1, p)];
                let d = self.t[(p + 1, p + 1)];
                let mean = 0.5 * (a + d);
                let half = 0.5 * (a - d);
                let disc = half * half + b * c;
                // Quasi-triangular form keeps only complex pairs in 2x2s.
                let im = (-disc).max(0.0).sqrt();
                out.push((mean, im));
                out.push((mean, -im));
                p += 2;
            } else {
                out.push((self.t[(p, p)], 0.0));
                p += 1;
            }
        }
        out
    }
}

/// Computes the real Schur decomposition of a square matrix.
///
/// # Errors
///
/// Fails with [`Error::ConvergenceFailure`] if the QR iteration does not
/// deflate an eigenvalue within 40 sweeps, reporting the matrix size and the
/// offending subdiagonal residual.
pub fn real_schur(m: &DenseMatrix) -> Result<SchurDecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::EmptyMatrix { op: "real_schur" });
    }

    let mut t = m.clone();
    let mut q = DenseMatrix::identity(n);
    hessenberg(&mut t, &mut q);
    francis_qr(&mut t, &mut q)?;
    split_real_blocks(&mut t, &mut q);
    Ok(SchurDecomposition { q, t })
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// transformation into `q`.
fn hessenberg(h: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        let mut v: Vec<f64> = (j + 1..n).map(|i| h[(i, j)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Left: rows j+1..n over columns j..n.
        for col in j..n {
            let mut dot = 0.0;
            for (r, vi) in v.iter().enumerate() {
                dot += vi * h[(j + 1 + r, col)];
            }
            let f = beta * dot;
            for (r, vi) in v.iter().enumerate() {
                h[(j + 1 + r, col)] -= f * vi;
            }
        }
        // Right: columns j+1..n over all rows.
        for row in 0..n {
            let mut dot = 0.0;
            for (c, vi) in v.iter().enumerate() {
                dot += vi * h[(row, j + 1 + c)];
            }
            let f = beta * dot;
            for (c, vi) in v.iter().enumerate() {
                h[(row, j + 1 + c)] -= f * vi;
            }
        }
        // Accumulate into q (right application).
        for row in 0..n {
            let mut dot = 0.0;
            for (c, vi) in v.iter().enumerate() {
                dot += vi * q[(row, j + 1 + c)];
            }
            let f = beta * dot;
            for (c, vi) in v.iter().enumerate() {
                q[(row, j + 1 + c)] -= f * vi;
            }
        }
        // The annihilated column is known exactly.
        h[(j + 1, j)] = alpha;
        for i in j + 2..n {
            h[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn francis_qr(h: &mut DenseMatrix, q: &mut DenseMatrix) -> Result<()> {
    let n = h.rows();
    if n < 2 {
        return Ok(());
    }
    let hnorm = h.frobenius_norm();
    // Full-width rotations re-inject rounding noise of order eps * ||H||,
    // so deflation must accept subdiagonals at that floor; a purely local
    // criterion stalls on eigenvalue clusters far below the matrix norm.
    let floor = (8.0 * f64::EPSILON * hnorm).max(1e-300);
    let mut hi = n - 1;
    let mut iters = 0usize;

    loop {
        // Deflation scan: find the start of the active block ending at hi.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].abs();
            let local = h[(lo - 1, lo - 1)].abs() + h[(lo, lo)].abs();
            if sub <= (f64::EPSILON * local).max(floor) {
                h[(lo, lo - 1)] = 0.0;
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            // 1x1 block converged.
            if hi <= 1 {
                break;
            }
            hi -= 1;
            iters = 0;
            continue;
        }
        if lo + 1 == hi {
            // 2x2 block converged; the split pass standardizes it later.
            if lo <= 1 {
                break;
            }
            hi = lo - 1;
            iters = 0;
            continue;
        }

        iters += 1;
        if iters > MAX_ITERS_PER_EIGENVALUE {
            return Err(Error::ConvergenceFailure {
                op: "real_schur",
                size: n,
                residual: h[(hi, hi - 1)].abs(),
            });
        }

        // Shift pair: trace and determinant of the trailing 2x2, replaced by
        // an ad-hoc pair on exceptional iterations to break cycles.
        let (tr, det) = if iters.is_multiple_of(EXCEPTIONAL_EVERY) {
            let s = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            let a = 0.75 * s + h[(hi, hi)];
            (2.0 * a, a * a + 0.4375 * s * s)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            (a + d, a * d - b * c)
        };

        // First column of (H - aI)(H - bI) restricted to the active block.
        let h00 = h[(lo, lo)];
        let h01 = h[(lo, lo + 1)];
        let h10 = h[(lo + 1, lo)];
        let h11 = h[(lo + 1, lo + 1)];
        let h21 = h[(lo + 2, lo + 1)];
        let mut x = h00 * h00 + h01 * h10 - tr * h00 + det;
        let mut y = h10 * (h00 + h11 - tr);
        let mut z = h10 * h21;

        // Bulge chase with 3-element reflectors.
        for k in lo..hi - 1 {
            let scale = x.abs().max(y.abs()).max(z.abs());
            if scale == 0.0 {
                // Nothing to chase at this column; advance the window.
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
                z = if k + 3 <= hi { h[(k + 3, k)] } else { 0.0 };
                continue;
            }
            let (xs, ys, zs) = (x / scale, y / scale, z / scale);
            let norm = (xs * xs + ys * ys + zs * zs).sqrt();
            let alpha = if xs >= 0.0 { -norm } else { norm };
            let v = [xs - alpha, ys, zs];
            let vnorm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if vnorm2 > 0.0 {
                let beta = 2.0 / vnorm2;
                let last = (k + 2).min(hi);
                let rows = last - k + 1; // 3 except at the window edge

                // Left application: rows k..=last, columns k-1..n.
                let c0 = k.saturating_sub(1);
                for col in c0..n {
                    let mut dot = 0.0;
                    for r in 0..rows {
                        dot += v[r] * h[(k + r, col)];
                    }
                    let f = beta * dot;
                    for r in 0..rows {
                        h[(k + r, col)] -= f * v[r];
                    }
                }
                // Right application: columns k..=last, rows 0..=min(k+3, hi).
                let rmax = (k + 3).min(hi);
                for row in 0..=rmax {
                    let mut dot = 0.0;
                    for c in 0..rows {
                        dot += v[c] * h[(row, k + c)];
                    }
                    let f = beta * dot;
                    for c in 0..rows {
                        h[(row, k + c)] -= f * v[c];
                    }
                }
                // Accumulate into q.
                for row in 0..n {
                    let mut dot = 0.0;
                    for c in 0..rows {
                        dot += v[c] * q[(row, k + c)];
                    }
                    let f = beta * dot;
                    for c in 0..rows {
                        q[(row, k + c)] -= f * v[c];
                    }
                }
                // The chased bulge column is annihilated exactly.
                if k > lo {
                    h[(k + 1, k - 1)] = 0.0;
                    if k + 2 <= hi {
                        h[(k + 2, k - 1)] = 0.0;
                    }
                }
            }
            x = h[(k + 1, k)];
            y = if k + 2 <= hi { h[(k + 2, k)] } else { 0.0 };
            z = if k + 3 <= hi { h[(k + 3, k)] } else { 0.0 };
        }

        // Final plane rotation zeroing h[hi][hi-2].
        let xg = h[(hi - 1, hi - 2)];
        let yg = h[(hi, hi - 2)];
        let r = xg.hypot(yg);
        if r > 0.0 && yg != 0.0 {
            let cs = xg / r;
            let sn = yg / r;
            apply_rotation_left(h, hi - 1, hi, cs, sn, hi - 2);
            apply_rotation_right(h, hi - 1, hi, cs, sn, hi);
            apply_rotation_q(q, hi - 1, hi, cs, sn);
            h[(hi, hi - 2)] = 0.0;
        }
    }

    // Everything below the first subdiagonal is structurally zero by now;
    // clear rounding residue so downstream block scans see exact zeros.
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Rows `p`, `r`: `T <- G' T` over columns `c0..`, with `G = [[cs, -sn], [sn, cs]]`.
fn apply_rotation_left(t: &mut DenseMatrix, p: usize, r: usize, cs: f64, sn: f64, c0: usize) {
    for col in c0..t.cols() {
        let a = t[(p, col)];
        let b = t[(r, col)];
        t[(p, col)] = cs * a + sn * b;
        t[(r, col)] = -sn * a + cs * b;
    }
}

/// Columns `p`, `r`: `T <- T G` over rows `0..=rmax`.
fn apply_rotation_right(t: &mut DenseMatrix, p: usize, r: usize, cs: f64, sn: f64, rmax: usize) {
    for row in 0..=rmax {
        let a = t[(row, p)];
        let b = t[(row, r)];
        t[(row, p)] = cs * a + sn * b;
        t[(row, r)] = -sn * a + cs * b;
    }
}

fn apply_rotation_q(q: &mut DenseMatrix, p: usize, r: usize, cs: f64, sn: f64) {
    for row in 0..q.rows() {
        let a = q[(row, p)];
        let b = q[(row, r)];
        q[(row, p)] = cs * a + sn * b;
        q[(row, r)] = -sn * a + cs * b;
    }
}

/// Rotates apart any 2x2 diagonal block whose eigenvalues are real, so the
/// returned form keeps 2x2 blocks only for complex-conjugate pairs.
fn split_real_blocks(t: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = t.rows();
    let mut p = 0;
    while p + 1 < n {
        let c = t[(p + 1, p)];
        if c == 0.0 {
            p += 1;
            continue;
        }
        let a = t[(p, p)];
        let b = t[(p, p + 1)];
        let d = t[(p + 1, p + 1)];
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let disc = half * half + b * c;
        if disc < 0.0 {
            // Complex pair, keep the block.
            p += 2;
            continue;
        }
        // Real eigenvalues: rotate so the first column of G spans the
        // eigenvector (mu - d, c), which is exact for any 2x2 block.
        let sq = disc.sqrt();
        let mu = if half >= 0.0 { mean + sq } else { mean - sq };
        let vx = mu - d;
        let r = vx.hypot(c);
        let (cs, sn) = (vx / r, c / r);
        apply_rotation_left(t, p, p + 1, cs, sn, p);
        apply_rotation_right(t, p, p + 1, cs, sn, p + 1);
        apply_rotation_q(q, p, p + 1, cs, sn);
        t[(p + 1, p)] = 0.0;
        p += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_matrix(seed: u64, n: usize) -> DenseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::new(n, n, data).unwrap()
    }

    fn check_reconstruction(m: &DenseMatrix, schur: &SchurDecomposition, rtol: f64) {
        let rebuilt = schur
            .q
            .matmul(&schur.t)
            .unwrap()
            .matmul(&schur.q.transpose())
            .unwrap();
        let err = rebuilt.sub(m).unwrap().frobenius_norm();
        assert!(
            err <= rtol * m.frobenius_norm().max(1.0),
            "reconstruction residual {err}"
        );
    }

    fn check_orthogonal(q: &DenseMatrix, tol: f64) {
        let qtq = q.transpose().matmul(q).unwrap();
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - want).abs() <= tol);
            }
        }
    }

    fn check_quasi_triangular(t: &DenseMatrix) {
        let n = t.rows();
        for i in 2..n {
            for j in 0..i - 1 {
                assert_eq!(t[(i, j)], 0.0, "below-subdiagonal entry at ({i},{j})");
            }
        }
        // No two adjacent subdiagonals, and 2x2 blocks are complex pairs.
        let mut prev = false;
        for i in 1..n {
            let nz = t[(i, i - 1)] != 0.0;
            assert!(!(nz && prev), "overlapping 2x2 blocks at row {i}");
            if nz {
                let a = t[(i - 1, i - 1)];
                let b = t[(i - 1, i)];
                let c = t[(i, i - 1)];
                let d = t[(i, i)];
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                assert!(disc < 0.0, "2x2 block with real eigenvalues kept");
            }
            prev = nz;
        }
    }

    #[test]
    fn upper_triangular_is_its_own_schur_form() {
        let m = DenseMatrix::from_rows(&[
            &[2.0, 1.0, 0.5],
            &[0.0, -1.0, 3.0],
            &[0.0, 0.0, 4.0],
        ])
        .unwrap();
        let s = real_schur(&m).unwrap();
        assert_eq!(s.t, m);
        assert_eq!(s.q, DenseMatrix::identity(3));
    }

    #[test]
    fn symmetric_input_diagonalizes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let s = real_schur(&m).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(s.t[(i, j)].abs() <= 1e-8, "off-diagonal {}", s.t[(i, j)]);
                }
            }
        }
        check_reconstruction(&m, &s, 1e-10);
    }

    #[test]
    fn random_eight_by_eight() {
        for seed in 0..6 {
            let m = rand_matrix(seed, 8);
            let s = real_schur(&m).unwrap();
            check_reconstruction(&m, &s, 1e-8);
            check_orthogonal(&s.q, 1e-10);
            check_quasi_triangular(&s.t);
        }
    }

    #[test]
    fn rotation_matrix_keeps_complex_block() {
        // Plane rotation by 90 degrees has eigenvalues +-i.
        let m = DenseMatrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let s = real_schur(&m).unwrap();
        assert!(s.t[(1, 0)] != 0.0);
        let eigs = s.eigenvalues();
        assert!((eigs[0].0).abs() < 1e-12);
        assert!((eigs[0].1.abs() - 1.0).abs() < 1e-12);
        check_reconstruction(&m, &s, 1e-12);
    }

    #[test]
    fn defective_jordan_block_converges() {
        let m = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let s = real_schur(&m).unwrap();
        check_reconstruction(&m, &s, 1e-12);
        // Already triangular, stays put.
        assert_eq!(s.t, m);
    }

    #[test]
    fn real_two_by_two_gets_split() {
        // Eigenvalues 3 and -1 hide in a full 2x2.
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let s = real_schur(&m).unwrap();
        assert_eq!(s.t[(1, 0)], 0.0);
        check_reconstruction(&m, &s, 1e-12);
        let mut eigs: Vec<f64> = s.eigenvalues().iter().map(|e| e.0).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            real_schur(&DenseMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn larger_random_matrices() {
        for seed in 0..3 {
            let m = rand_matrix(100 + seed, 24);
            let s = real_schur(&m).unwrap();
            check_reconstruction(&m, &s, 1e-8);
            check_orthogonal(&s.q, 1e-10);
            check_quasi_triangular(&s.t);
        }
    }
}
