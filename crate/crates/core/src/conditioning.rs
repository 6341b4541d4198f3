//! Well-conditioned basis construction and conditioning-quality metrics.
//!
//! A basis U = A R^{-1} is (alpha, beta)-conditioned for the l1 norm when
//! its entrywise l1 norm is at most alpha and ||x||_inf <= beta ||Ux||_1
//! for every x. The product kappa_bar = alpha * beta measures how far U is
//! from an ideal l1 basis; row l1 norms of U are the sampling weights used
//! downstream. `fast_l1_basis` obtains R from a QR factorization of a
//! sketched copy of A; `fast_lp_basis` extends this to general p via
//! ellipsoidal rounding of a block-sketched unit ball.

use rayon::prelude::*;

use crate::ellipsoid::{round_2d, BlockNormOracle, Ellipsoid};
use crate::error::{Error, Result};
use crate::fwht::{fwht_normalized, next_pow2};
use crate::linalg::{cholesky_upper, invert_upper, qr_thin};
use crate::lp::kappa_beta_lp;
use crate::matrix::{norm_l2, norm_lp, DenseMatrix};
use crate::rng::RngStream;
use crate::sketch::{fct2_default_blocks, SketchKind, SketchOperator, SketchSpec};
use crate::stats::{median, quartiles};

/// Change of basis making A R^{-1} well conditioned, plus the provenance
/// needed to reproduce it.
#[derive(Debug, Clone)]
pub struct ConditionedBasis {
    pub r_inv: DenseMatrix,
    /// Sketch parameters that produced R (for lp bases: the per-block
    /// transform, with r1 = rows kept per block and block_in = block width).
    pub sketch: SketchSpec,
    /// Norm index the basis targets.
    pub p: f64,
    /// Global rescale relating the sketched unit ball back to the true lp
    /// ball; only meaningful for p != 2 bases from `fast_lp_basis`.
    pub gamma: Option<f64>,
}

impl ConditionedBasis {
    /// Materializes U = A R^{-1}. O(n d^2); prefer applying R^{-1} to
    /// small right-hand sides when n is large.
    pub fn basis(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        a.matmul(&self.r_inv)
    }
}

/// Conditioning metrics of one basis, or aggregated quantiles over runs.
#[derive(Debug, Clone)]
pub struct ConditioningReport {
    pub kind: Option<SketchKind>,
    pub n: usize,
    pub d: usize,
    pub seed: Option<u64>,
    /// Entrywise l1 norm of U.
    pub alpha: f64,
    /// 1 / min_j min { ||Uz||_1 : ||z||_inf <= 1, z_j = 1 }.
    pub beta: f64,
    pub kappa_bar: f64,
    pub runs: usize,
    /// (q1, q3) of kappa_bar over the aggregated runs.
    pub quartiles: (f64, f64),
}

impl ConditioningReport {
    pub fn with_provenance(mut self, kind: SketchKind, seed: u64) -> Self {
        self.kind = Some(kind);
        self.seed = Some(seed);
        self
    }

    /// Medians of (alpha, beta, kappa_bar) with kappa_bar quartiles over
    /// several single-run reports.
    pub fn aggregate(reports: &[ConditioningReport]) -> Result<ConditioningReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Argument("cannot aggregate zero reports".into()))?;
        let alphas: Vec<f64> = reports.iter().map(|r| r.alpha).collect();
        let betas: Vec<f64> = reports.iter().map(|r| r.beta).collect();
        let kappas: Vec<f64> = reports.iter().map(|r| r.kappa_bar).collect();
        Ok(ConditioningReport {
            kind: first.kind,
            n: first.n,
            d: first.d,
            seed: first.seed,
            alpha: median(&alphas)?,
            beta: median(&betas)?,
            kappa_bar: median(&kappas)?,
            runs: reports.len(),
            quartiles: quartiles(&kappas)?,
        })
    }
}

/// R^{-1} from a thin QR of the sketched matrix; U = A R^{-1} is never
/// formed here. A rank-deficient sketch surfaces as a singularity error;
/// callers may retry with a fresh seed.
pub fn fast_l1_basis(a: &DenseMatrix, kind: SketchKind, seed: u64) -> Result<ConditionedBasis> {
    let (n, d) = (a.rows(), a.cols());
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    let spec = SketchSpec::with_defaults(kind, n, d, seed);
    let op = SketchOperator::from_spec(&spec)?;
    let pa = op.apply_left(a)?;
    let (_, r) = qr_thin(&pa)?;
    let r_inv = invert_upper(&r)?;
    Ok(ConditionedBasis { r_inv, sketch: spec, p: 1.0, gamma: None })
}

/// Exact (alpha, beta, kappa_bar) of U = A R^{-1}. One LP per column;
/// the LPs are independent and run in parallel.
pub fn kappa_bar_1(a: &DenseMatrix, r_inv: &DenseMatrix) -> Result<ConditioningReport> {
    let u = a.matmul(r_inv)?;
    let alpha = u.l1_entrywise();
    let per_col: Result<Vec<f64>> =
        (0..u.cols()).into_par_iter().map(|j| kappa_beta_lp(&u, j)).collect();
    let worst = per_col?.into_iter().fold(f64::INFINITY, f64::min);
    if !(worst.is_finite() && worst > 0.0) {
        return Err(Error::Numerical(format!(
            "conditioning LP returned a non-positive minimum {worst}"
        )));
    }
    let beta = 1.0 / worst;
    let kappa_bar = alpha * beta;
    Ok(ConditioningReport {
        kind: None,
        n: a.rows(),
        d: a.cols(),
        seed: None,
        alpha,
        beta,
        kappa_bar,
        runs: 1,
        quartiles: (kappa_bar, kappa_bar),
    })
}

/// Row l1 norms of U, the exact l1 leverage scores.
pub fn l1_leverage_scores(u: &DenseMatrix) -> Vec<f64> {
    u.row_l1_norms()
}

/// Stacks one shared subsampled-Hadamard sketch of every `block`-row slice
/// of A: the same sign pattern and the same `keep` sampled rows compress
/// each block of `block` rows (zero-padded at the tail) to `keep` rows,
/// scaled by sqrt(block/keep). Output has ceil(n/block) * keep rows.
pub fn srht_block_stack(
    a: &DenseMatrix,
    block: usize,
    keep: usize,
    seed: u64,
) -> Result<DenseMatrix> {
    if !block.is_power_of_two() {
        return Err(Error::Argument(format!("block width {block} must be a power of two")));
    }
    if keep == 0 || keep > block {
        return Err(Error::Argument(format!("need 1 <= keep <= block, got {keep} of {block}")));
    }
    let (n, d) = (a.rows(), a.cols());
    if n == 0 || d == 0 {
        return Err(Error::Argument("matrix must be nonempty".into()));
    }
    let mut rng = RngStream::new(seed, 0);
    let signs: Vec<f64> = (0..block).map(|_| rng.sign()).collect();
    let mut idx = RngStream::new(seed, 1);
    let sampled = idx.sample_distinct(block, keep);
    let scale = (block as f64 / keep as f64).sqrt();
    let blocks = n.div_ceil(block);
    let mut out = DenseMatrix::zeros(blocks * keep, d);
    let mut buf = vec![0.0; block];
    for bi in 0..blocks {
        let lo = bi * block;
        let hi = ((bi + 1) * block).min(n);
        for j in 0..d {
            buf.fill(0.0);
            for i in lo..hi {
                buf[i - lo] = signs[i - lo] * a.get(i, j);
            }
            fwht_normalized(&mut buf)?;
            for (k, &src) in sampled.iter().enumerate() {
                out.set(bi * keep + k, j, scale * buf[src]);
            }
        }
    }
    Ok(out)
}

/// Change of basis for general p >= 1: sketch row blocks with a shared
/// subsampled Hadamard transform, then ellipsoidally round the sketched
/// mixed-norm ball { x : (sum_i ||A~_i x||_2^p)^{1/p} <= 1 }. The start
/// ellipsoid comes from a QR of the sketched stack, which is already an
/// exact rounding when p = 2. `block` defaults to a power of two near
/// d^2 * keep (capped at the padded row count), `keep` to the block
/// sample-count default used by the fast Cauchy block sketch.
pub fn fast_lp_basis(
    a: &DenseMatrix,
    p: f64,
    seed: u64,
    block: Option<usize>,
    keep: Option<usize>,
) -> Result<ConditionedBasis> {
    let (n, d) = (a.rows(), a.cols());
    if n <= d {
        return Err(Error::Argument(format!("need n > d, got {n} x {d}")));
    }
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("norm index p must be >= 1, got {p}")));
    }
    let (keep_default, _) = fct2_default_blocks(d, n);
    let mut keep = keep.unwrap_or(keep_default);
    let block = block.unwrap_or_else(|| next_pow2(d * d * keep).min(next_pow2(n)));
    keep = keep.min(block);
    let tilde = srht_block_stack(a, block, keep, seed)?;
    let (_, r0) = qr_thin(&tilde)?;
    let r0_inv = invert_upper(&r0)?;
    let shape = r0_inv.matmul(&r0_inv.transpose())?;
    let start = Ellipsoid::new(shape)?;
    let total_rows = tilde.rows() as f64;
    let spread = total_rows.powf((1.0 / p - 0.5).abs()).max(1.0);
    let (e0, l) = if p <= 2.0 { (start, spread) } else { (start.scaled(spread)?, spread) };
    let oracle = BlockNormOracle::new(tilde, keep, p)?;
    let rounded = round_2d(&oracle, &e0, l)?;
    // E = { x^T M^{-1} x <= 1 } = { ||Rx||_2 <= 1 } with R^T R = M^{-1}.
    let u = cholesky_upper(rounded.matrix())?;
    let u_inv = invert_upper(&u)?;
    let m_inv = u_inv.matmul(&u_inv.transpose())?;
    let r = cholesky_upper(&m_inv)?;
    let r_inv = invert_upper(&r)?;
    let gamma = if (p - 2.0).abs() < 1e-12 {
        None
    } else if p < 2.0 {
        Some((block as f64).powf(1.0 / p - 0.5) * 2.0f64.sqrt())
    } else {
        Some((keep as f64).powf(0.5 - 1.0 / p) * 2.0f64.sqrt())
    };
    let spec =
        SketchSpec { kind: SketchKind::Srht, n, d, r1: keep, block_in: block, block_out: 0, seed };
    Ok(ConditionedBasis { r_inv, sketch: spec, p, gamma })
}

/// Monte Carlo (min, max) of ||A R^{-1} y||_p over random unit directions
/// y. The ratio max/min lower-bounds the true lp condition number.
pub fn kappa_p_sampled(
    a: &DenseMatrix,
    r_inv: &DenseMatrix,
    p: f64,
    num_dirs: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if num_dirs == 0 {
        return Err(Error::Argument("need at least one direction".into()));
    }
    let d = r_inv.rows();
    let mut rng = RngStream::new(seed, 0);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..num_dirs {
        let mut y = rng.fill_gaussian(d);
        let nrm = norm_l2(&y);
        if nrm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        let x = r_inv.matvec(&y)?;
        let val = norm_lp(&a.matvec(&x)?, p);
        lo = lo.min(val);
        hi = hi.max(val);
    }
    Ok((lo, hi))
}
