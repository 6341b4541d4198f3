//! Synthetic benchmark inputs: two ill-conditioned matrix families and a
//! noisy regression instance with sparse gross corruption.

use crate::error::{Error, Result};
use crate::matrix::{norm_l2, DenseMatrix};
use crate::rng::RngStream;

/// Top of the linear scale ramp used by both diagonal rescalings.
pub const RAMP_TOP: f64 = 1e4;

/// Noise-to-signal ratio of generated instances, enforced exactly.
pub const NOISE_RATIO: f64 = 0.1;

/// Per-row probability of replacing b_i by a gross outlier.
pub const CORRUPT_PROB: f64 = 1e-3;

/// Corrupted entries are set to this multiple of the noise norm.
pub const CORRUPT_LEVEL: f64 = 100.0;

/// Value i of `len` points linearly spaced over [1, RAMP_TOP].
fn ramp(i: usize, len: usize) -> f64 {
    if len <= 1 {
        1.0
    } else {
        1.0 + (RAMP_TOP - 1.0) * i as f64 / (len - 1) as f64
    }
}

/// Row-and-column rescaled Gaussian product: rows and inner columns are
/// scaled by ramps from 1 to 10^4, giving rows whose norms span four
/// orders of magnitude. The n x n row scaling is applied in place and
/// never materialized.
pub fn gen_matrix_a1(n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::Argument("matrix dimensions must be >= 1".into()));
    }
    let mut rng = RngStream::new(seed, 0);
    let g1 = DenseMatrix::from_vec(n, d, rng.fill_gaussian(n * d))?;
    let mut g2 = DenseMatrix::from_vec(d, d, rng.fill_gaussian(d * d))?;
    for j in 0..d {
        let c = ramp(j, d);
        for v in g2.row_mut(j) {
            *v *= c;
        }
    }
    let mut a = g1.matmul(&g2)?;
    for i in 0..n {
        let c = ramp(i, n);
        for v in a.row_mut(i) {
            *v *= c;
        }
    }
    Ok(a)
}

/// Rank-d matrix whose last n-d+1 rows repeat one Gaussian direction, so
/// the first d-1 rows carry almost all of the leverage.
pub fn gen_matrix_a2(n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    let mut rng = RngStream::new(seed, 0);
    let g = DenseMatrix::from_vec(d, d, rng.fill_gaussian(d * d))?;
    Ok(DenseMatrix::from_fn(n, d, |i, j| g.get(i.min(d - 1), j)))
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceOptions {
    /// Use the rescaled-Gaussian family for A; otherwise plain Gaussian.
    pub scaled: bool,
    /// Skip noise and corruption entirely, so b = A x_exact.
    pub zero_noise: bool,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions { scaled: true, zero_noise: false }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_exact: Vec<f64>,
    /// Euclidean norm of the pre-corruption noise vector (0 if disabled).
    pub noise_l2: f64,
    /// Rows whose b entry was replaced by the gross outlier value.
    pub corrupted: Vec<usize>,
}

/// b = A x_exact + eps with i.i.d. Laplace eps rescaled so that
/// ||eps||_2 / ||A x_exact||_2 = NOISE_RATIO holds exactly, then each
/// entry independently replaced by CORRUPT_LEVEL * ||eps||_2 with
/// probability CORRUPT_PROB.
pub fn gen_regression_instance(
    n: usize,
    d: usize,
    seed: u64,
    opts: InstanceOptions,
) -> Result<RegressionInstance> {
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    let a = if opts.scaled {
        gen_matrix_a1(n, d, seed)?
    } else {
        let mut rng = RngStream::new(seed, 0);
        DenseMatrix::from_vec(n, d, rng.fill_gaussian(n * d))?
    };
    instance_for_matrix(a, seed, opts)
}

/// Noise protocol of `gen_regression_instance` applied to a caller-built
/// design matrix (x_exact and noise draw from the same streams, so the
/// result matches the generator when `a` does).
pub fn instance_for_matrix(
    a: DenseMatrix,
    seed: u64,
    opts: InstanceOptions,
) -> Result<RegressionInstance> {
    let (n, d) = (a.rows(), a.cols());
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    let mut rng = RngStream::new(seed, 1);
    let x_exact = rng.fill_gaussian(d);
    let ax = a.matvec(&x_exact)?;
    if opts.zero_noise {
        return Ok(RegressionInstance { a, b: ax, x_exact, noise_l2: 0.0, corrupted: Vec::new() });
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.laplace()).collect();
    let raw_l2 = norm_l2(&raw);
    let noise_l2 = NOISE_RATIO * norm_l2(&ax);
    let scale = if raw_l2 > 0.0 { noise_l2 / raw_l2 } else { 0.0 };
    let mut b: Vec<f64> = ax.iter().zip(&raw).map(|(y, e)| y + scale * e).collect();
    let mut coin = RngStream::new(seed, 2);
    let mut corrupted = Vec::new();
    for (i, entry) in b.iter_mut().enumerate() {
        if coin.uniform_open() < CORRUPT_PROB {
            *entry = CORRUPT_LEVEL * noise_l2;
            corrupted.push(i);
        }
    }
    Ok(RegressionInstance { a, b, x_exact, noise_l2, corrupted })
}
