//! Symmetric eigendecomposition.
//!
//! Householder tridiagonalization followed by implicit-shift QL iteration,
//! with eigenvectors accumulated through both stages. Eigenvalues come back
//! sorted ascending; ties keep their pre-sort order so the selection of a
//! smallest-eigenvalue subspace is deterministic.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Iteration cap per eigenvalue in the QL stage.
const MAX_QL_ITERS: usize = 50;

/// Accepted relative asymmetry of the input, Frobenius-normalized.
const SYMMETRY_RTOL: f64 = 1e-8;

/// Full spectral decomposition of a symmetric matrix.
///
/// `eigenvalues[j]` pairs with column `j` of `eigenvectors`; the columns are
/// orthonormal and each is sign-fixed so that its first component of
/// non-negligible magnitude is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymmetricEigenResult {
    /// Sum of the `count` smallest eigenvalues.
    pub fn smallest_sum(&self, count: usize) -> f64 {
        self.eigenvalues.iter().take(count).sum()
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input must be square and symmetric to within
/// `1e-8 * max(1, ||m||_F)`; it is then symmetrized as `(m + m') / 2`
/// before factorization so the iteration sees an exactly symmetric operand.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<SymmetricEigenResult> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::EmptyMatrix {
            op: "symmetric_eigen",
        });
    }

    let tolerance = SYMMETRY_RTOL * m.frobenius_norm().max(1.0);
    let deviation = m.sub(&m.transpose())?.frobenius_norm();
    if deviation > tolerance {
        return Err(Error::NotSymmetric {
            deviation,
            tolerance,
        });
    }

    // Symmetrized working copy; z is overwritten with the eigenvectors.
    let mut z = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    tridiagonalize(&mut z, &mut diag, &mut off);
    ql_implicit(&mut z, &mut diag, &mut off)?;
    sort_and_fix_signs(&mut z, &mut diag);

    Ok(SymmetricEigenResult {
        eigenvalues: diag,
        eigenvectors: z,
    })
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// On return `diag` holds the diagonal, `off[1..]` the subdiagonal, and `z`
/// the accumulated orthogonal transformation.
fn tridiagonalize(z: &mut DenseMatrix, diag: &mut [f64], off: &mut [f64]) {
    let n = diag.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[(i, k)].abs()).sum();
            if scale == 0.0 {
                off[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let f = z[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                off[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    off[j] = g / h;
                    f_acc += off[j] * z[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[(i, j)];
                    let g = off[j] - hh * f;
                    off[j] = g;
                    for k in 0..=j {
                        let delta = f * off[k] + g * z[(i, k)];
                        z[(j, k)] -= delta;
                    }
                }
            }
        } else {
            off[i] = z[(i, l)];
        }
        diag[i] = h;
    }
    diag[0] = 0.0;
    off[0] = 0.0;
    // Accumulate the transformation so z maps tridiagonal eigenvectors back.
    for i in 0..n {
        let l = i;
        if diag[i] != 0.0 {
            for j in 0..l {
                let mut g = 0.0;
                for k in 0..l {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..l {
                    let delta = g * z[(k, i)];
                    z[(k, j)] -= delta;
                }
            }
        }
        diag[i] = z[(i, i)];
        z[(i, i)] = 1.0;
        for j in 0..l {
            z[(j, i)] = 0.0;
            z[(i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotating the
/// accumulated eigenvector matrix along.
fn ql_implicit(z: &mut DenseMatrix, diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        off[i - 1] = off[i];
    }
    off[n - 1] = 0.0;

    // Noise floor relative to the overall tridiagonal scale; a purely
    // local test can stall on clustered eigenvalues near zero.
    let anorm = (0..n).fold(0.0f64, |a, i| a.max(diag[i].abs() + off[i].abs()));
    let floor = (f64::EPSILON * anorm).max(1e-300);

    for l in 0..n {
        let mut iters = 0;
        loop {
            // Find a negligible subdiagonal entry to split the problem.
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= (f64::EPSILON * dd).max(floor) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iters += 1;
            if iters > MAX_QL_ITERS {
                return Err(Error::ConvergenceFailure {
                    op: "symmetric_eigen",
                    size: n,
                    residual: off[l].abs(),
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    // Rotation underflowed; deflate here and restart.
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Ascending stable sort of the spectrum plus the deterministic sign fix.
fn sort_and_fix_signs(z: &mut DenseMatrix, diag: &mut [f64]) {
    let n = diag.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).expect("finite eigenvalues"));

    let sorted_vals: Vec<f64> = order.iter().map(|&j| diag[j]).collect();
    let mut sorted_vecs = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        // Sign convention: the first component whose magnitude is within a
        // factor 1e-9 of the column peak decides the sign.
        let peak = (0..n).fold(0.0f64, |m, i| m.max(z[(i, src)].abs()));
        let mut flip = false;
        for i in 0..n {
            let v = z[(i, src)];
            if v.abs() > 1e-9 * peak {
                flip = v < 0.0;
                break;
            }
        }
        for i in 0..n {
            let v = z[(i, src)];
            sorted_vecs[(i, dst)] = if flip { -v } else { v };
        }
    }
    diag.copy_from_slice(&sorted_vals);
    *z = sorted_vecs;
}
