//! Tied-weight linear autoencoder with a low-rank penalty, trained in
//! closed form.
//!
//! Training alternates two exact updates. Holding the encoder fixed, the
//! penalty subspace `V` is the span of the trailing eigenvectors of `WW'`;
//! holding `V` fixed, the encoder solves the Sylvester system
//! `(SS' + beta VV') W + W (lambda X Xh') = S X' + lambda S Xh'`,
//! where `Xh` is a denoising-corrupted copy of the behavior matrix drawn
//! once up front. Both steps are deterministic given the seed, so training
//! is reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::schur::{real_schur, SchurDecomposition};
use crate::sylvester::solve_sylvester_prefactored;

/// Column treatment applied to inputs before training and, symmetrically,
/// to anything passed through the trained encoder or decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// Each column scaled to unit Euclidean norm (zero columns untouched).
    L2,
}

/// Hyperparameters for training.
///
/// `lambda` weighs the attribute-prediction penalty and must be positive;
/// `beta` weighs the low-rank penalty and may be zero to switch the penalty
/// off. `rank_r` is the number of leading spectral directions of `WW'` left
/// unpenalized and may not exceed the attribute count.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub lambda: f64,
    pub beta: f64,
    pub rank_r: usize,
    pub corruption_rate: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            beta: 0.0,
            rank_r: 0,
            corruption_rate: 0.10,
            max_iters: 50,
            rel_tol: 1e-5,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Validates ranges; `k` is the attribute dimension the config will be
    /// used with.
    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidConfig {
                field: "lambda",
                message: format!("must be positive and finite, got {}", self.lambda),
            });
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidConfig {
                field: "beta",
                message: format!("must be non-negative and finite, got {}", self.beta),
            });
        }
        if self.rank_r > k {
            return Err(Error::InvalidConfig {
                field: "rank_r",
                message: format!("must not exceed the attribute count {k}, got {}", self.rank_r),
            });
        }
        if !(self.corruption_rate.is_finite()
            && (0.0..1.0).contains(&self.corruption_rate))
        {
            return Err(Error::InvalidConfig {
                field: "corruption_rate",
                message: format!("must lie in [0, 1), got {}", self.corruption_rate),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig {
                field: "max_iters",
                message: "must be at least 1".to_string(),
            });
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig {
                field: "rel_tol",
                message: format!("must be positive and finite, got {}", self.rel_tol),
            });
        }
        Ok(())
    }
}

/// A trained encoder. The decoder is its transpose (tied weights).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// Encoder, `k x d`: attribute space from behavior space.
    pub w: DenseMatrix,
    pub config: ModelConfig,
    /// Objective value after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub column_normalization: Normalization,
}

impl TrainedModel {
    /// Behavior-space dimension `d`.
    pub fn behavior_dim(&self) -> usize {
        self.w.cols()
    }

    /// Attribute-space dimension `k`.
    pub fn attribute_dim(&self) -> usize {
        self.w.rows()
    }

    /// Projects behavior columns into the attribute space: `W x_new`.
    ///
    /// Inputs are normalized the same way training inputs were.
    pub fn encode(&self, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        if x_new.rows() != self.behavior_dim() {
            return Err(Error::ShapeMismatch {
                op: "encode",
                left: self.w.shape(),
                right: x_new.shape(),
            });
        }
        let x = self.apply_normalization(x_new);
        self.w.matmul(&x)
    }

    /// Reconstructs behavior columns from attribute columns: `W' s_new`.
    pub fn decode(&self, s_new: &DenseMatrix) -> Result<DenseMatrix> {
        if s_new.rows() != self.attribute_dim() {
            return Err(Error::ShapeMismatch {
                op: "decode",
                left: self.w.shape(),
                right: s_new.shape(),
            });
        }
        let s = self.apply_normalization(s_new);
        self.w.transpose().matmul(&s)
    }

    fn apply_normalization(&self, m: &DenseMatrix) -> DenseMatrix {
        match self.column_normalization {
            Normalization::None => m.clone(),
            Normalization::L2 => normalize_columns_l2(m),
        }
    }
}

/// Scales every column to unit Euclidean norm; zero columns stay zero.
pub fn normalize_columns_l2(m: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = m.shape();
    let mut out = m.clone();
    for j in 0..cols {
        let norm = (0..rows).map(|i| m[(i, j)] * m[(i, j)]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..rows {
                out[(i, j)] /= norm;
            }
        }
    }
    out
}

/// Zeroes exactly `floor(rate * rows * cols)` entry positions of `x`,
/// sampled uniformly without replacement from the seeded generator.
/// Positions are chosen independently of the current values, so a selected
/// entry that is already zero still counts toward the quota.
pub fn corrupt(x: &DenseMatrix, rate: f64, seed: u64) -> Result<DenseMatrix> {
    if !(rate.is_finite() && (0.0..1.0).contains(&rate)) {
        return Err(Error::InvalidArgument {
            op: "corrupt",
            message: format!("corruption rate must lie in [0, 1), got {rate}"),
        });
    }
    let total = x.rows() * x.cols();
    let count = ((rate * total as f64).floor()) as usize;
    let mut out = x.clone();
    if count == 0 {
        return Ok(out);
    }
    // Partial Fisher-Yates: the first `count` slots end up a uniform sample
    // of positions without replacement.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.random_range(i..total);
        positions.swap(i, j);
    }
    let data = out.data_mut();
    for &p in &positions[..count] {
        data[p] = 0.0;
    }
    Ok(out)
}

/// Orthonormal basis of the trailing eigenspace of `WW'`: the eigenvectors
/// of its `k - rank_r` smallest eigenvalues, ascending, as a
/// `k x (k - rank_r)` matrix. `rank_r = k` yields a `k x 0` matrix.
pub fn compute_v(w: &DenseMatrix, rank_r: usize) -> Result<DenseMatrix> {
    let k = w.rows();
    if rank_r > k {
        return Err(Error::InvalidConfig {
            field: "rank_r",
            message: format!("must not exceed the attribute count {k}, got {rank_r}"),
        });
    }
    let keep = k - rank_r;
    if keep == 0 {
        return Ok(DenseMatrix::zeros(k, 0));
    }
    let gram = w.matmul(&w.transpose())?;
    let eig = symmetric_eigen(&gram)?;
    let mut v = DenseMatrix::zeros(k, keep);
    for j in 0..keep {
        for i in 0..k {
            v[(i, j)] = eig.eigenvectors[(i, j)];
        }
    }
    Ok(v)
}

fn check_objective_shapes(
    w: &DenseMatrix,
    x: &DenseMatrix,
    x_hat: &DenseMatrix,
    s: &DenseMatrix,
) -> Result<()> {
    let (k, d) = w.shape();
    if x.rows() != d || s.rows() != k || x.cols() != s.cols() || x_hat.shape() != x.shape() {
        return Err(Error::ShapeMismatch {
            op: "objective",
            left: (k, d),
            right: (x.rows(), s.rows()),
        });
    }
    Ok(())
}

/// Training objective
/// `||X - W'S||_F^2 + lambda ||W Xh - S||_F^2 + beta tr(V' W W' V)`
/// with `V` recomputed from the given encoder.
pub fn objective(
    w: &DenseMatrix,
    x: &DenseMatrix,
    x_hat: &DenseMatrix,
    s: &DenseMatrix,
    config: &ModelConfig,
) -> Result<f64> {
    check_objective_shapes(w, x, x_hat, s)?;
    let v = compute_v(w, config.rank_r)?;
    objective_with_fixed_v(w, x, x_hat, s, &v, config.lambda, config.beta)
}

/// Same objective with the penalty subspace held fixed, which makes the
/// function differentiable in `W` alone. Used by the gradient checks.
pub fn objective_with_fixed_v(
    w: &DenseMatrix,
    x: &DenseMatrix,
    x_hat: &DenseMatrix,
    s: &DenseMatrix,
    v: &DenseMatrix,
    lambda: f64,
    beta: f64,
) -> Result<f64> {
    check_objective_shapes(w, x, x_hat, s)?;
    let recon = x.sub(&w.transpose().matmul(s)?)?;
    let attr = w.matmul(x_hat)?.sub(s)?;
    let tail = v.transpose().matmul(w)?;
    let t1 = recon.frobenius_norm().powi(2);
    let t2 = attr.frobenius_norm().powi(2);
    let t3 = tail.frobenius_norm().powi(2);
    Ok(t1 + lambda * t2 + beta * t3)
}

/// Analytic gradient of [`objective_with_fixed_v`] with respect to `W`:
/// `2 [ -S X' + S S' W + lambda (W Xh - S) Xh' + beta V V' W ]`.
pub fn objective_gradient(
    w: &DenseMatrix,
    x: &DenseMatrix,
    x_hat: &DenseMatrix,
    s: &DenseMatrix,
    v: &DenseMatrix,
    lambda: f64,
    beta: f64,
) -> Result<DenseMatrix> {
    check_objective_shapes(w, x, x_hat, s)?;
    let term1 = s.matmul(&x.transpose())?.scale(-1.0);
    let term2 = s.matmul(&s.transpose())?.matmul(w)?;
    let term3 = w
        .matmul(x_hat)?
        .sub(s)?
        .matmul(&x_hat.transpose())?
        .scale(lambda);
    let grad = term1.add(&term2)?.add(&term3)?;
    let grad = if beta != 0.0 && v.cols() > 0 {
        let vvw = v.matmul(&v.transpose())?.matmul(w)?;
        grad.add(&vvw.scale(beta))?
    } else {
        grad
    };
    Ok(grad.scale(2.0))
}

/// Precomputed sample-independent products; everything the iteration needs
/// once the corrupted copy is fixed.
struct TrainingGrams {
    ss: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    s_xhat: DenseMatrix,
    s_x: DenseMatrix,
    xhat_gram: DenseMatrix,
    x_norm2: f64,
    s_norm2: f64,
}

impl TrainingGrams {
    fn build(
        x: &DenseMatrix,
        x_hat: &DenseMatrix,
        s: &DenseMatrix,
        lambda: f64,
    ) -> Result<Self> {
        let xhat_t = x_hat.transpose();
        let ss = s.matmul(&s.transpose())?;
        let s_x = s.matmul(&x.transpose())?;
        let s_xhat = s.matmul(&xhat_t)?;
        let b = x.matmul(&xhat_t)?.scale(lambda);
        let c = s_x.add(&s_xhat.scale(lambda))?;
        let xhat_gram = x_hat.matmul(&xhat_t)?;
        Ok(Self {
            ss,
            b,
            c,
            s_xhat,
            s_x,
            x_norm2: x.frobenius_norm().powi(2),
            s_norm2: s.frobenius_norm().powi(2),
            xhat_gram,
        })
    }

    /// Objective evaluated from the cached products; algebraically equal to
    /// [`objective`] but independent of the sample count. The penalty term
    /// uses the trace identity: the sum of squared trailing singular values
    /// of `W` is the sum of the trailing eigenvalues of `WW'`.
    fn objective(&self, w: &DenseMatrix, lambda: f64, beta: f64, rank_r: usize) -> Result<f64> {
        let t1 = self.x_norm2 - 2.0 * w.fro_inner(&self.s_x)?
            + w.fro_inner(&self.ss.matmul(w)?)?;
        let t2 = w.fro_inner(&w.matmul(&self.xhat_gram)?)?
            - 2.0 * w.fro_inner(&self.s_xhat)? + self.s_norm2;
        let t3 = if beta != 0.0 {
            let k = w.rows();
            let eig = symmetric_eigen(&w.matmul(&w.transpose())?)?;
            eig.smallest_sum(k - rank_r.min(k))
        } else {
            0.0
        };
        Ok(t1 + lambda * t2 + beta * t3)
    }
}

/// Solve the encoder system against a fixed Schur form of `B`, retrying
/// with a growing ridge on `A` if the spectra overlap. The ridge starts at
/// `1e-10 ||A||_F` (floored at 1e-12) and doubles at most three times.
fn solve_encoder(
    a: &DenseMatrix,
    schur_b: &SchurDecomposition,
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    let schur_a = real_schur(a)?;
    match solve_sylvester_prefactored(&schur_a, schur_b, c) {
        Ok(w) => return Ok(w),
        Err(Error::SpectralOverlap { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut ridge = (1e-10 * a.frobenius_norm()).max(1e-12);
    let mut last = Error::SpectralOverlap {
        pivot: 0.0,
        tolerance: 0.0,
    };
    for _ in 0..4 {
        let mut shifted = a.clone();
        for i in 0..a.rows() {
            shifted[(i, i)] += ridge;
        }
        let schur_a = real_schur(&shifted)?;
        match solve_sylvester_prefactored(&schur_a, schur_b, c) {
            Ok(w) => return Ok(w),
            Err(e @ Error::SpectralOverlap { .. }) => last = e,
            Err(e) => return Err(e),
        }
        ridge *= 2.0;
    }
    Err(last)
}

/// Trains the autoencoder on behavior matrix `x` (`d x n`) and attribute
/// matrix `s` (`k x n`).
///
/// The corrupted copy is drawn once before iterating. The encoder is
/// initialized from the closed-form solve with the low-rank term absent,
/// then the `V` and `W` updates alternate until the objective change falls
/// below `rel_tol * max(1, |J|)` or `max_iters` is hit.
pub fn train(
    x: &DenseMatrix,
    s: &DenseMatrix,
    config: &ModelConfig,
    normalization: Normalization,
) -> Result<TrainedModel> {
    let d = x.rows();
    let k = s.rows();
    let n = x.cols();
    if n == 0 || d == 0 || k == 0 {
        return Err(Error::EmptyMatrix { op: "train" });
    }
    if s.cols() != n {
        return Err(Error::ShapeMismatch {
            op: "train",
            left: x.shape(),
            right: s.shape(),
        });
    }
    config.validate(k)?;

    let (x, s) = match normalization {
        Normalization::None => (x.clone(), s.clone()),
        Normalization::L2 => (normalize_columns_l2(x), normalize_columns_l2(s)),
    };
    let x_hat = corrupt(&x, config.corruption_rate, config.seed)?;
    let grams = TrainingGrams::build(&x, &x_hat, &s, config.lambda)?;
    let schur_b = real_schur(&grams.b)?;

    // Warm start: the system with the low-rank term absent is convex with a
    // unique solution, so the first V is well defined and runs reproduce.
    let mut w = solve_encoder(&grams.ss, &schur_b, &grams.c)?;
    let mut prev = grams.objective(&w, config.lambda, config.beta, config.rank_r)?;

    let mut trace = Vec::new();
    for _ in 0..config.max_iters {
        let a = if config.beta != 0.0 {
            let v = compute_v(&w, config.rank_r)?;
            let vvt = v.matmul(&v.transpose())?;
            grams.ss.add(&vvt.scale(config.beta))?
        } else {
            grams.ss.clone()
        };
        w = solve_encoder(&a, &schur_b, &grams.c)?;
        let value = grams.objective(&w, config.lambda, config.beta, config.rank_r)?;
        trace.push(value);
        if (value - prev).abs() <= config.rel_tol * prev.abs().max(1.0) {
            break;
        }
        prev = value;
    }

    if !w.all_finite() {
        return Err(Error::InvalidArgument {
            op: "train",
            message: "encoder came back non-finite; inputs may be ill-scaled".to_string(),
        });
    }

    Ok(TrainedModel {
        w,
        config: config.clone(),
        objective_trace: trace,
        column_normalization: normalization,
    })
}
