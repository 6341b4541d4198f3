//! Sampling pipelines for l1 regression: leverage-score estimation by
//! random projection medians, Bernoulli coreset construction, and the
//! end-to-end sampled solvers (single and multiple right-hand sides, plus
//! best-column subspace approximation).
//!
//! The common shape: condition X = [A | -b], estimate row importance from
//! a small projection of the conditioned basis, sample rows with
//! probability proportional to importance, and solve the reweighted
//! problem exactly on the sample.

use rayon::prelude::*;

use crate::conditioning::{fast_l1_basis, l1_leverage_scores};
use crate::error::{Error, Result};
use crate::linalg::{invert_upper, qr_thin};
use crate::lp::{solve_weighted_l1, L1Problem, L1Solution};
use crate::matrix::{norm_l1, DenseMatrix};
use crate::rng::RngStream;
use crate::sketch::{cauchy_default_r1, SketchKind};
use crate::stats::median_abs;

/// Median of |Z| for a standard normal Z; the Gaussian projection median
/// estimates this multiple of each row's l2 norm.
pub const HALF_NORMAL_MEDIAN: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeverageEstimator {
    /// Median of |row . Cauchy| estimates the row l1 norm directly.
    CauchyMedian,
    /// Median of |row . Gaussian| estimates a fixed multiple of the row
    /// l2 norm; cheaper (fewer projections) and norm-equivalent up to
    /// factors the normalization absorbs.
    GaussianMedian,
}

#[derive(Debug, Clone)]
pub struct LeverageEstimate {
    pub lambda: Vec<f64>,
    pub estimator: LeverageEstimator,
    pub r2: usize,
}

/// Rows sampled for a weighted subproblem. Weights are the inverse
/// inclusion probabilities, so sampled objectives are unbiased.
#[derive(Debug, Clone)]
pub struct Coreset {
    /// Strictly increasing row indices.
    pub indices: Vec<usize>,
    /// 1/p_i per sampled row; rows with p_i = 1 carry weight exactly 1.
    pub weights: Vec<f64>,
    pub s_target: usize,
    pub seed: u64,
}

/// Projection count for the Cauchy median estimator: ceil(15 ln(2n/0.1)).
pub fn cauchy_median_r2(n: usize) -> usize {
    ((15.0 * (2.0 * n.max(1) as f64 / 0.1).ln()).ceil() as usize).max(1)
}

/// Projection count for the Gaussian median estimator:
/// ceil(2 ln(2 s q sqrt(r1) (ln n)^{5/2})); much smaller than the Cauchy
/// count because it only feeds a coarser norm equivalence.
pub fn gaussian_median_r2(n: usize, s: usize, q: usize, r1: usize) -> usize {
    let arg = 2.0
        * s.max(1) as f64
        * q.max(1) as f64
        * (r1.max(1) as f64).sqrt()
        * (n.max(2) as f64).ln().powf(2.5);
    ((2.0 * arg.ln()).ceil() as usize).max(1)
}

/// Worst-case coreset size from the sampling analysis, with q sqrt(r1)
/// standing in for the sketch distortion. Astronomically conservative;
/// benchmarks always pass an explicit target instead.
pub fn theoretical_sample_size(q: usize, r1: usize, eps: f64) -> usize {
    let kq = q.max(1) as f64 * (r1.max(1) as f64).sqrt();
    let lead = 63.0 * kq * kq / (eps * eps);
    let inner = q as f64 * (24.0 * kq * kq / eps).ln() + 20.0f64.ln();
    (lead * inner).ceil() as usize
}

/// lambda_i = median_j |(X R^{-1} Pi)_{ij}| from an r2-column random
/// projection. The q x r2 product R^{-1} Pi is formed first, so X R^{-1}
/// (n x q) is never materialized.
pub fn estimate_leverage(
    x: &DenseMatrix,
    r_inv: &DenseMatrix,
    estimator: LeverageEstimator,
    r2: usize,
    seed: u64,
) -> Result<LeverageEstimate> {
    if r2 == 0 {
        return Err(Error::Argument("projection count r2 must be >= 1".into()));
    }
    let q = x.cols();
    if r_inv.rows() != q || r_inv.cols() != q {
        return Err(Error::Dimension(format!(
            "change of basis is {} x {}, need {q} x {q}",
            r_inv.rows(),
            r_inv.cols()
        )));
    }
    let mut rng = RngStream::new(seed, 0);
    let pi2 = match estimator {
        LeverageEstimator::CauchyMedian => DenseMatrix::from_vec(q, r2, rng.fill_cauchy(q * r2))?,
        LeverageEstimator::GaussianMedian => {
            DenseMatrix::from_vec(q, r2, rng.fill_gaussian(q * r2))?
        }
    };
    let proj = r_inv.matmul(&pi2)?;
    let spread = x.matmul(&proj)?;
    let lambda: Result<Vec<f64>> = (0..x.rows()).map(|i| median_abs(spread.row(i))).collect();
    Ok(LeverageEstimate { lambda: lambda?, estimator, r2 })
}

/// Bernoulli row sampling with p_i = min(1, s lambda_i / sum lambda).
/// Each row draws from its own stream keyed by the row index, so the
/// sample is independent of iteration order and parallel schedule.
pub fn coreset_from_scores(lambda: &[f64], s: usize, seed: u64) -> Result<Coreset> {
    if s == 0 {
        return Err(Error::Argument("sample target s must be >= 1".into()));
    }
    if lambda.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Argument("leverage scores must be finite and nonnegative".into()));
    }
    let total: f64 = lambda.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Argument("leverage scores sum to zero".into()));
    }
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    let mut expected = 0.0;
    for (i, &lam) in lambda.iter().enumerate() {
        let p = (s as f64 * lam / total).min(1.0);
        expected += p;
        if p <= 0.0 {
            continue;
        }
        if p >= 1.0 {
            indices.push(i);
            weights.push(1.0);
            continue;
        }
        if RngStream::new(seed, i as u64).uniform_open() < p {
            indices.push(i);
            weights.push(1.0 / p);
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptyCoreset { expected });
    }
    Ok(Coreset { indices, weights, s_target: s, seed })
}

/// `coreset_from_scores` applied to an estimate's scores.
pub fn build_coreset(lev: &LeverageEstimate, s: usize, seed: u64) -> Result<Coreset> {
    coreset_from_scores(&lev.lambda, s, seed)
}

/// How row importance is scored before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    /// Projection medians of the conditioned basis (the full pipeline).
    Conditioned(LeverageEstimator),
    /// Exact row l1 norms of the conditioned basis; O(n q^2) but noise
    /// free, for evaluation runs.
    ConditionedExact,
    /// Equal scores, p_i = min(1, s/n).
    Uniform,
    /// Projection medians of X itself, skipping the change of basis.
    Unconditioned(LeverageEstimator),
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub kind: SketchKind,
    pub seed: u64,
    pub eps: f64,
    /// Coreset size target; defaults to `theoretical_sample_size`.
    pub s_override: Option<usize>,
    /// Projection count; defaults to the estimator's formula.
    pub r2_override: Option<usize>,
    pub scheme: SamplingScheme,
}

impl SamplerConfig {
    pub fn new(kind: SketchKind, seed: u64, eps: f64) -> Self {
        SamplerConfig {
            kind,
            seed,
            eps,
            s_override: None,
            r2_override: None,
            scheme: SamplingScheme::Conditioned(LeverageEstimator::CauchyMedian),
        }
    }
}

/// Derives one independent seed per pipeline stage (sketch, leverage
/// projection, coreset draws) so no stage reuses another's stream.
fn stage_seeds(seed: u64) -> (u64, u64, u64) {
    let mut master = RngStream::new(seed, u64::MAX);
    (master.next_u64(), master.next_u64(), master.next_u64())
}

fn default_r2(est: LeverageEstimator, n: usize, s: usize, q: usize, r1: usize) -> usize {
    match est {
        LeverageEstimator::CauchyMedian => cauchy_median_r2(n),
        LeverageEstimator::GaussianMedian => gaussian_median_r2(n, s, q, r1),
    }
}

fn leverage_scores_for(
    x: &DenseMatrix,
    cfg: &SamplerConfig,
    s: usize,
    sketch_seed: u64,
    lev_seed: u64,
) -> Result<Vec<f64>> {
    let (n, q) = (x.rows(), x.cols());
    match cfg.scheme {
        SamplingScheme::Uniform => Ok(vec![1.0; n]),
        SamplingScheme::Conditioned(est) => {
            let basis = fast_l1_basis(x, cfg.kind, sketch_seed)?;
            let r2 = cfg.r2_override.unwrap_or_else(|| default_r2(est, n, s, q, basis.sketch.r1));
            Ok(estimate_leverage(x, &basis.r_inv, est, r2, lev_seed)?.lambda)
        }
        SamplingScheme::ConditionedExact => {
            let basis = fast_l1_basis(x, cfg.kind, sketch_seed)?;
            Ok(l1_leverage_scores(&basis.basis(x)?))
        }
        SamplingScheme::Unconditioned(est) => {
            let r2 =
                cfg.r2_override.unwrap_or_else(|| default_r2(est, n, s, q, cauchy_default_r1(q)));
            Ok(estimate_leverage(x, &DenseMatrix::identity(q), est, r2, lev_seed)?.lambda)
        }
    }
}

/// Shared engine: score rows of [A | -B], sample one coreset, and solve
/// the weighted problem for every column of B on the same sample. Errors
/// on a rank-deficient subsample (callers record such runs as failures).
pub fn coreset_solves(
    a: &DenseMatrix,
    rhs: &DenseMatrix,
    cfg: &SamplerConfig,
) -> Result<(Vec<L1Solution>, Coreset)> {
    let (n, d) = (a.rows(), a.cols());
    let k = rhs.cols();
    if rhs.rows() != n {
        return Err(Error::Dimension(format!("{} rows of A vs {} of B", n, rhs.rows())));
    }
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0, 1), got {}", cfg.eps)));
    }
    let x = a.hstack(&rhs.scale(-1.0))?;
    let q = d + k;
    let (sketch_seed, lev_seed, cs_seed) = stage_seeds(cfg.seed);
    let s = cfg.s_override.unwrap_or_else(|| {
        theoretical_sample_size(q, cauchy_default_r1(q), cfg.eps)
    });
    let lambda = leverage_scores_for(&x, cfg, s, sketch_seed, lev_seed)?;
    let coreset = coreset_from_scores(&lambda, s, cs_seed)?;
    let a_s = a.select_rows(&coreset.indices)?;
    let (_, r_s) = qr_thin(&a_s)?;
    invert_upper(&r_s)?;
    let sols: Result<Vec<L1Solution>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let b_j: Vec<f64> = coreset.indices.iter().map(|&i| rhs.get(i, j)).collect();
            let prob = L1Problem::new(a_s.clone(), b_j, coreset.weights.clone());
            solve_weighted_l1(&prob)
        })
        .collect();
    Ok((sols?, coreset))
}

/// Sampled l1 regression with an arbitrary scoring scheme; the benchmark
/// entry point for baselines as well as the full pipeline.
pub fn sampled_l1_regression(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &SamplerConfig,
) -> Result<(L1Solution, Coreset)> {
    let rhs = DenseMatrix::from_vec(b.len(), 1, b.to_vec())?;
    let (mut sols, coreset) = coreset_solves(a, &rhs, cfg)?;
    Ok((sols.pop().expect("one solution per rhs column"), coreset))
}

/// The main pipeline: Cauchy-median leverage on the conditioned basis of
/// [A | -b], one coreset, one weighted solve.
pub fn fast_cauchy_regression(
    a: &DenseMatrix,
    b: &[f64],
    eps: f64,
    kind: SketchKind,
    seed: u64,
    s_override: Option<usize>,
) -> Result<(L1Solution, Coreset)> {
    let mut cfg = SamplerConfig::new(kind, seed, eps);
    cfg.s_override = s_override;
    sampled_l1_regression(a, b, &cfg)
}

/// Same pipeline with Gaussian-median leverage, which needs far fewer
/// projection columns.
pub fn optimized_fast_cauchy_regression(
    a: &DenseMatrix,
    b: &[f64],
    eps: f64,
    kind: SketchKind,
    seed: u64,
    s_override: Option<usize>,
) -> Result<(L1Solution, Coreset)> {
    let mut cfg = SamplerConfig::new(kind, seed, eps);
    cfg.s_override = s_override;
    cfg.scheme = SamplingScheme::Conditioned(LeverageEstimator::GaussianMedian);
    sampled_l1_regression(a, b, &cfg)
}

/// k right-hand sides sharing one coreset: scores come from [A | -B] and
/// all k weighted solves run on the same sampled rows. Returns the d x k
/// coefficient matrix.
pub fn multiple_regression(
    a: &DenseMatrix,
    bs: &DenseMatrix,
    eps: f64,
    kind: SketchKind,
    seed: u64,
    s_override: Option<usize>,
) -> Result<(DenseMatrix, Coreset)> {
    if a.rows() <= a.cols() + bs.cols() {
        return Err(Error::Argument(format!(
            "need n > d + k, got {} x {} with {} right-hand sides",
            a.rows(),
            a.cols(),
            bs.cols()
        )));
    }
    let mut cfg = SamplerConfig::new(kind, seed, eps);
    cfg.s_override = s_override;
    let (sols, coreset) = coreset_solves(a, bs, &cfg)?;
    let w = DenseMatrix::from_fn(a.cols(), bs.cols(), |i, j| sols[j].x[i]);
    Ok((w, coreset))
}

/// Best single-column l1 approximation: for each column j, regress it on
/// the remaining columns over a shared coreset, then pick the column
/// whose full-data residual ||A - A_hat_j||_1 is smallest (lowest index
/// on ties). Returns (j_star, W, objective) where W has -1 on the
/// diagonal and column j of A W is the signed residual of regression j.
pub fn subspace_approx_l1(
    a: &DenseMatrix,
    eps: f64,
    kind: SketchKind,
    seed: u64,
    s_override: Option<usize>,
) -> Result<(usize, DenseMatrix, f64)> {
    let (n, d) = (a.rows(), a.cols());
    if d < 2 {
        return Err(Error::Argument("need at least two columns".into()));
    }
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (sketch_seed, lev_seed, cs_seed) = stage_seeds(seed);
    let s = s_override.unwrap_or_else(|| theoretical_sample_size(d, cauchy_default_r1(d), eps));
    let basis = fast_l1_basis(a, kind, sketch_seed)?;
    let lev =
        estimate_leverage(a, &basis.r_inv, LeverageEstimator::CauchyMedian, cauchy_median_r2(n), lev_seed)?;
    let coreset = coreset_from_scores(&lev.lambda, s, cs_seed)?;
    let a_s = a.select_rows(&coreset.indices)?;
    let (_, r_s) = qr_thin(&a_s)?;
    invert_upper(&r_s)?;
    let fits: Result<Vec<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let others = a_s.drop_col(j)?;
            let target: Vec<f64> = coreset.indices.iter().map(|&i| a.get(i, j)).collect();
            let prob = L1Problem::new(others, target, coreset.weights.clone());
            Ok(solve_weighted_l1(&prob)?.x)
        })
        .collect();
    let fits = fits?;
    let w = DenseMatrix::from_fn(d, d, |i, j| {
        if i == j {
            -1.0
        } else if i < j {
            fits[j][i]
        } else {
            fits[j][i - 1]
        }
    });
    let mut j_star = 0;
    let mut best = f64::INFINITY;
    for j in 0..d {
        let obj = norm_l1(&a.matvec(&w.col(j))?);
        if obj < best {
            best = obj;
            j_star = j;
        }
    }
    Ok((j_star, w, best))
}
