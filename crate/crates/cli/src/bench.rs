//! Benchmark protocols behind the `bench-*` and `tail-check` verbs.
//!
//! Runs are independent across seeds and execute in parallel; rows are
//! emitted in (kind, seed) order afterwards, so reports are byte stable.
//! A failed run (rank-deficient sketch or subsample, empty coreset)
//! becomes an `inf` row and the protocol keeps going.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use l1sketch::conditioning::{fast_l1_basis, kappa_bar_1};
use l1sketch::generators::{
    gen_matrix_a1, gen_matrix_a2, instance_for_matrix, InstanceOptions, RegressionInstance,
};
use l1sketch::lp::{solve_weighted_l1, L1Problem};
use l1sketch::matrix::norm_l1;
use l1sketch::regression::{LeverageEstimator, SamplerConfig, SamplingScheme};
use l1sketch::stats::{median, quartiles};
use l1sketch::{tailcheck, DenseMatrix, RngStream, SketchKind};

use crate::report::Report;

/// Where the benchmark design matrix comes from.
pub enum MatrixSource {
    A1,
    A2,
    File(PathBuf),
}

impl MatrixSource {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a1" => Ok(MatrixSource::A1),
            "a2" => Ok(MatrixSource::A2),
            other => {
                if let Some(path) = other.strip_prefix("file:") {
                    Ok(MatrixSource::File(PathBuf::from(path)))
                } else {
                    bail!("unknown matrix source {other:?}; expected a1, a2, or file:<path>")
                }
            }
        }
    }

    fn load(&self, n: Option<usize>, d: Option<usize>, seed: u64) -> Result<DenseMatrix> {
        match self {
            MatrixSource::A1 => {
                let (n, d) = require_dims(n, d)?;
                Ok(gen_matrix_a1(n, d, seed)?)
            }
            MatrixSource::A2 => {
                let (n, d) = require_dims(n, d)?;
                Ok(gen_matrix_a2(n, d, seed)?)
            }
            MatrixSource::File(path) => {
                let a = l1sketch::io::read_matrix(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                if let Some(n) = n {
                    if n != a.rows() {
                        bail!("--n {n} disagrees with the {} rows in the file", a.rows());
                    }
                }
                if let Some(d) = d {
                    if d != a.cols() {
                        bail!("--d {d} disagrees with the {} columns in the file", a.cols());
                    }
                }
                Ok(a)
            }
        }
    }
}

fn require_dims(n: Option<usize>, d: Option<usize>) -> Result<(usize, usize)> {
    match (n, d) {
        (Some(n), Some(d)) => Ok((n, d)),
        _ => bail!("generated matrices need both --n and --d"),
    }
}

/// A sketch-backed pipeline or one of the two sampling baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineKind {
    Sketch(SketchKind),
    /// Uniform row sampling, p_i = min(1, s/n).
    Unif,
    /// Leverage medians on the raw matrix, skipping conditioning.
    Nocd,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 7] = [
        PipelineKind::Sketch(SketchKind::Ct),
        PipelineKind::Sketch(SketchKind::Fct1),
        PipelineKind::Sketch(SketchKind::Fct2),
        PipelineKind::Sketch(SketchKind::Gt),
        PipelineKind::Sketch(SketchKind::Srht),
        PipelineKind::Unif,
        PipelineKind::Nocd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Sketch(k) => k.name(),
            PipelineKind::Unif => "unif",
            PipelineKind::Nocd => "nocd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unif" => Ok(PipelineKind::Unif),
            "nocd" => Ok(PipelineKind::Nocd),
            other => Ok(PipelineKind::Sketch(other.parse::<SketchKind>()?)),
        }
    }
}

pub fn parse_sketch_kinds(raw: &[String]) -> Result<Vec<SketchKind>> {
    if raw.is_empty() {
        return Ok(SketchKind::ALL.to_vec());
    }
    raw.iter().map(|s| Ok(s.parse::<SketchKind>()?)).collect()
}

pub fn parse_pipeline_kinds(raw: &[String]) -> Result<Vec<PipelineKind>> {
    if raw.is_empty() {
        return Ok(PipelineKind::ALL.to_vec());
    }
    raw.iter().map(|s| PipelineKind::parse(s)).collect()
}

/// Conditioning quality protocol: one fixed matrix, `runs` independent
/// sketches per kind, kappa-bar per run plus quartile summaries, and the
/// conditioning of the raw matrix as a shared reference row.
pub fn run_conditioning_bench(
    source: &MatrixSource,
    n: Option<usize>,
    d: Option<usize>,
    kinds: &[SketchKind],
    runs: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if runs == 0 {
        bail!("--runs must be >= 1");
    }
    let a = source.load(n, d, seed)?;
    let (n, d) = (a.rows(), a.cols());
    let mut rep = Report::new();

    let raw = kappa_bar_1(&a, &DenseMatrix::identity(d))?;
    rep.push("raw", n, d, seed, "alpha", raw.alpha);
    rep.push("raw", n, d, seed, "beta", raw.beta);
    rep.push("raw", n, d, seed, "kappa_bar", raw.kappa_bar);

    for &kind in kinds {
        let rows: Vec<(u64, f64, f64, f64)> = (0..runs)
            .into_par_iter()
            .map(|r| {
                let rs = seed + 1 + r as u64;
                match fast_l1_basis(&a, kind, rs).and_then(|b| kappa_bar_1(&a, &b.r_inv)) {
                    Ok(c) => (rs, c.alpha, c.beta, c.kappa_bar),
                    Err(_) => (rs, f64::INFINITY, f64::INFINITY, f64::INFINITY),
                }
            })
            .collect();
        for &(rs, alpha, beta, kappa) in &rows {
            rep.push(kind.name(), n, d, rs, "alpha", alpha);
            rep.push(kind.name(), n, d, rs, "beta", beta);
            rep.push(kind.name(), n, d, rs, "kappa_bar", kappa);
        }
        let kappas: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let (q1, q3) = quartiles(&kappas)?;
        rep.push(kind.name(), n, d, seed, "kappa_q1", q1);
        rep.push(kind.name(), n, d, seed, "kappa_median", median(&kappas)?);
        rep.push(kind.name(), n, d, seed, "kappa_q3", q3);
    }
    rep.write(out)
}

pub fn bench_instance(
    source: &MatrixSource,
    n: Option<usize>,
    d: Option<usize>,
    seed: u64,
) -> Result<RegressionInstance> {
    Ok(match source {
        // The plain generator keeps its internal matrix stream.
        MatrixSource::A1 => {
            let (n, d) = require_dims(n, d)?;
            l1sketch::generators::gen_regression_instance(n, d, seed, InstanceOptions::default())?
        }
        _ => instance_for_matrix(source.load(n, d, seed)?, seed, InstanceOptions::default())?,
    })
}

fn full_objective(a: &DenseMatrix, b: &[f64], x: &[f64]) -> f64 {
    a.matvec(x)
        .map(|ax| ax.iter().zip(b).map(|(v, w)| (v - w).abs()).sum())
        .unwrap_or(f64::INFINITY)
}

fn run_pipeline(
    inst: &RegressionInstance,
    pk: PipelineKind,
    s: usize,
    eps: f64,
    seed: u64,
) -> l1sketch::Result<Vec<f64>> {
    let kind = match pk {
        PipelineKind::Sketch(k) => k,
        _ => SketchKind::Ct,
    };
    let mut cfg = SamplerConfig::new(kind, seed, eps);
    cfg.s_override = Some(s);
    cfg.scheme = match pk {
        PipelineKind::Sketch(_) => SamplingScheme::Conditioned(LeverageEstimator::CauchyMedian),
        PipelineKind::Unif => SamplingScheme::Uniform,
        PipelineKind::Nocd => SamplingScheme::Unconditioned(LeverageEstimator::CauchyMedian),
    };
    l1sketch::regression::sampled_l1_regression(&inst.a, &inst.b, &cfg).map(|(sol, _)| sol.x)
}

/// Sampled-regression accuracy protocol: one instance, one exact optimum,
/// then relative objective error per (pipeline, sample size, run), with
/// quartile summaries and failures as `inf`.
#[allow(clippy::too_many_arguments)] // mirrors the CLI flag surface one-to-one
pub fn run_regression_bench(
    source: &MatrixSource,
    n: Option<usize>,
    d: Option<usize>,
    kinds: &[PipelineKind],
    samples: &[usize],
    runs: usize,
    eps: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if runs == 0 {
        bail!("--runs must be >= 1");
    }
    if samples.is_empty() {
        bail!("--samples must list at least one coreset size");
    }
    let inst = bench_instance(source, n, d, seed)?;
    let (n, d) = (inst.a.rows(), inst.a.cols());

    let exact = L1Problem::new(inst.a.clone(), inst.b.clone(), vec![1.0; n]);
    let f_star = solve_weighted_l1(&exact)?.objective;
    // NaN must land in the error branch, hence the negated comparison.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(f_star > 0.0) {
        bail!("exact optimum is {f_star}; relative error is undefined");
    }
    let mut rep = Report::new();
    rep.push("exact", n, d, seed, "f_star", f_star);

    for &pk in kinds {
        for &s in samples {
            let errs: Vec<(u64, f64)> = (0..runs)
                .into_par_iter()
                .map(|r| {
                    let rs = seed + 1 + r as u64;
                    let rel = match run_pipeline(&inst, pk, s, eps, rs) {
                        Ok(x_hat) => {
                            (full_objective(&inst.a, &inst.b, &x_hat) - f_star) / f_star
                        }
                        Err(_) => f64::INFINITY,
                    };
                    (rs, rel)
                })
                .collect();
            let metric = format!("rel_err_s{s}");
            for &(rs, e) in &errs {
                rep.push(pk.name(), n, d, rs, &metric, e);
            }
            let vals: Vec<f64> = errs.iter().map(|x| x.1).collect();
            let (q1, q3) = quartiles(&vals)?;
            rep.push(pk.name(), n, d, seed, &format!("rel_err_q1_s{s}"), q1);
            rep.push(pk.name(), n, d, seed, &format!("rel_err_med_s{s}"), median(&vals)?);
            rep.push(pk.name(), n, d, seed, &format!("rel_err_q3_s{s}"), q3);
        }
    }
    rep.write(out)
}

/// Monte Carlo checks of the three tail statements: heavy-tailed upper
/// tail of a Cauchy mean, lower tail of a sum of half-Cauchys, and the
/// sampled-norm bracket. Pass means empirical <= bound + 3 SE.
pub fn run_tail_checks(lemma: &str, trials: usize, seed: u64, out: &Path) -> Result<()> {
    let mut rep = Report::new();
    match lemma {
        "upper" => {
            let m = 100;
            for t in [10.0, 100.0] {
                let o = tailcheck::simulate_upper_tail(m, t, trials, seed)?;
                let tag = t as u64;
                rep.push("cauchy_upper", trials, m, seed, &format!("empirical_t{tag}"), o.empirical);
                rep.push("cauchy_upper", trials, m, seed, &format!("bound_t{tag}"), o.bound);
                rep.push("cauchy_upper", trials, m, seed, &format!("se_t{tag}"), o.se);
                rep.push(
                    "cauchy_upper",
                    trials,
                    m,
                    seed,
                    &format!("pass_t{tag}"),
                    if o.pass { 1.0 } else { 0.0 },
                );
            }
        }
        "lower" => {
            let r = 100;
            let o = tailcheck::simulate_lower_tail(r, 0.5, trials, seed)?;
            rep.push("cauchy_lower", trials, r, seed, "empirical", o.empirical);
            rep.push("cauchy_lower", trials, r, seed, "bound", o.bound);
            rep.push("cauchy_lower", trials, r, seed, "se", o.se);
            rep.push("cauchy_lower", trials, r, seed, "pass", if o.pass { 1.0 } else { 0.0 });
        }
        "sampling" => {
            // A fixed moderate instance; the simulators draw their own
            // trial randomness from stream 0, so the data uses stream 1.
            let (rows, cols, s, eps) = (100, 3, 60, 0.5);
            let mut rng = RngStream::new(seed, 1);
            let z = DenseMatrix::from_vec(rows, cols, rng.fill_gaussian(rows * cols))?;
            let x = rng.fill_gaussian(cols);
            let o = tailcheck::simulate_sampling_bracket(&z, &x, s, eps, trials, seed)?;
            rep.push("sampling", trials, cols, seed, "violation_rate", o.empirical);
            rep.push("sampling", trials, cols, seed, "violation_bound", o.bound);
            rep.push("sampling", trials, cols, seed, "violation_se", o.se);
            rep.push("sampling", trials, cols, seed, "violation_pass", if o.pass { 1.0 } else { 0.0 });
            let (mean, se, truth) = tailcheck::simulate_sampling_mean(&z, &x, s, trials, seed)?;
            let zx_l1 = norm_l1(&z.matvec(&x)?);
            debug_assert_eq!(truth, zx_l1);
            rep.push("sampling", trials, cols, seed, "mean_sampled_norm", mean);
            rep.push("sampling", trials, cols, seed, "mean_se", se);
            rep.push("sampling", trials, cols, seed, "exact_norm", truth);
            rep.push(
                "sampling",
                trials,
                cols,
                seed,
                "mean_pass",
                if (mean - truth).abs() <= 3.0 * se { 1.0 } else { 0.0 },
            );
        }
        other => bail!("unknown lemma {other:?}; expected upper, lower, or sampling"),
    }
    rep.write(out)
}
