//! Command-line harness: sketch/condition/regress utilities on matrix
//! files plus the benchmark and tail-check protocols, all reporting
//! long-format CSV. Identical flags and seed reproduce byte-identical
//! output.

mod bench;
mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use l1sketch::conditioning::{fast_l1_basis, kappa_bar_1};
use l1sketch::matrix::norm_l1;
use l1sketch::regression::{sampled_l1_regression, LeverageEstimator, SamplerConfig, SamplingScheme};
use l1sketch::sketch::{SketchOperator, SketchSpec};
use l1sketch::{io, DenseMatrix, SketchKind};

use bench::MatrixSource;
use report::Report;

#[derive(Parser)]
#[command(
    name = "l1sketch",
    version,
    about = "Sketching, conditioning, and coreset sampling for robust l1 regression"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn kind_arg(s: &str) -> Result<SketchKind, String> {
    s.parse::<SketchKind>().map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a sketch to a matrix file and write the compressed matrix.
    Sketch {
        /// Input matrix (csv or binary).
        #[arg(long = "in")]
        input: PathBuf,
        /// Sketch family: ct, fct1, fct2, gt, or srht.
        #[arg(long, value_parser = kind_arg)]
        kind: SketchKind,
        /// Output row count; defaults to the family's formula.
        #[arg(long)]
        r1: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output matrix path (.csv writes text, anything else binary).
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a conditioned basis and report its l1 conditioning quality.
    Condition {
        /// Input matrix (csv or binary).
        #[arg(long = "in")]
        input: PathBuf,
        /// Sketch family: ct, fct1, fct2, gt, or srht.
        #[arg(long, value_parser = kind_arg)]
        kind: SketchKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV report path.
        #[arg(long)]
        report: PathBuf,
    },
    /// Sampled l1 regression of b on the columns of A.
    Regress {
        /// Design matrix file.
        #[arg(long)]
        a: PathBuf,
        /// Right-hand side file (one column or one row).
        #[arg(long)]
        b: PathBuf,
        /// Sketch family: ct, fct1, fct2, gt, or srht.
        #[arg(long, value_parser = kind_arg)]
        kind: SketchKind,
        /// Coreset size target; defaults to the worst-case formula.
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use Gaussian projection medians for leverage (fewer columns).
        #[arg(long, conflicts_with = "exact_leverage")]
        optimized: bool,
        /// Score rows by exact basis norms instead of projection medians.
        #[arg(long)]
        exact_leverage: bool,
        /// CSV report path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Conditioning quality of every sketch family over repeated runs.
    BenchConditioning {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// a1, a2, or file:<path>.
        #[arg(long, default_value = "a1")]
        matrix: String,
        /// Comma-separated sketch kinds; default all five.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative error of sampled regression across coreset sizes.
    BenchRegression {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// a1, a2, or file:<path>.
        #[arg(long, default_value = "a1")]
        matrix: String,
        /// Comma-separated coreset sizes.
        #[arg(long, value_delimiter = ',', default_value = "32,128,512,2048,8192")]
        samples: Vec<usize>,
        /// Comma-separated pipelines (sketch kinds plus unif, nocd);
        /// default all seven.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo verification of one tail statement.
    TailCheck {
        /// upper, lower, or sampling.
        #[arg(long)]
        lemma: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Retries a seed-dependent computation after rank failures, bumping the
/// seed by one up to three times; every retry is logged to stderr.
fn with_rank_retry<T>(
    label: &str,
    seed: u64,
    f: impl Fn(u64) -> l1sketch::Result<T>,
) -> l1sketch::Result<(T, u64)> {
    const RETRIES: u64 = 3;
    let mut s = seed;
    loop {
        match f(s) {
            Ok(v) => return Ok((v, s)),
            Err(e @ l1sketch::Error::Singular { .. }) if s < seed + RETRIES => {
                eprintln!("{label}: {e} with seed {s}; retrying with seed {}", s + 1);
                s += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn rhs_vector(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.cols() == 1 {
        Ok(m.col(0))
    } else if m.rows() == 1 {
        Ok(m.row(0).to_vec())
    } else {
        bail!("right-hand side must be a single column or row, got {} x {}", m.rows(), m.cols())
    }
}

fn cmd_sketch(
    input: &Path,
    kind: SketchKind,
    r1: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let a = io::read_matrix(input)?;
    let mut spec = SketchSpec::with_defaults(kind, a.rows(), a.cols(), seed);
    if let Some(r1) = r1 {
        spec.r1 = r1;
    }
    let op = SketchOperator::from_spec(&spec)?;
    let sa = op.apply_left(&a)?;
    io::write_matrix(&sa, out)?;
    eprintln!(
        "sketched {} x {} down to {} x {} rows with {}",
        a.rows(),
        a.cols(),
        sa.rows(),
        sa.cols(),
        kind
    );
    Ok(())
}

fn cmd_condition(input: &Path, kind: SketchKind, seed: u64, out: &Path) -> Result<()> {
    let a = io::read_matrix(input)?;
    let (basis, used_seed) =
        with_rank_retry("condition", seed, |s| fast_l1_basis(&a, kind, s))?;
    let quality = kappa_bar_1(&a, &basis.r_inv)?;
    let mut rep = Report::new();
    let (n, d) = (a.rows(), a.cols());
    rep.push(kind.name(), n, d, used_seed, "alpha", quality.alpha);
    rep.push(kind.name(), n, d, used_seed, "beta", quality.beta);
    rep.push(kind.name(), n, d, used_seed, "kappa_bar", quality.kappa_bar);
    rep.push(kind.name(), n, d, used_seed, "r1", basis.sketch.r1 as f64);
    rep.write(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_regress(
    a_path: &Path,
    b_path: &Path,
    kind: SketchKind,
    s: Option<usize>,
    eps: f64,
    seed: u64,
    optimized: bool,
    exact_leverage: bool,
    out: &Path,
) -> Result<()> {
    let a = io::read_matrix(a_path)?;
    let b = rhs_vector(&io::read_matrix(b_path)?)?;
    let scheme = if exact_leverage {
        SamplingScheme::ConditionedExact
    } else if optimized {
        SamplingScheme::Conditioned(LeverageEstimator::GaussianMedian)
    } else {
        SamplingScheme::Conditioned(LeverageEstimator::CauchyMedian)
    };
    let ((sol, coreset), used_seed) = with_rank_retry("regress", seed, |rs| {
        let mut cfg = SamplerConfig::new(kind, rs, eps);
        cfg.s_override = s;
        cfg.scheme = scheme;
        sampled_l1_regression(&a, &b, &cfg)
    })?;
    let full = {
        let ax = a.matvec(&sol.x)?;
        ax.iter().zip(&b).map(|(v, w)| (v - w).abs()).sum::<f64>()
    };
    let mut rep = Report::new();
    let (n, d) = (a.rows(), a.cols());
    rep.push(kind.name(), n, d, used_seed, "s_target", coreset.s_target as f64);
    rep.push(kind.name(), n, d, used_seed, "coreset_size", coreset.indices.len() as f64);
    rep.push(kind.name(), n, d, used_seed, "sample_objective", sol.objective);
    rep.push(kind.name(), n, d, used_seed, "full_objective", full);
    rep.push(kind.name(), n, d, used_seed, "rhs_l1", norm_l1(&b));
    for (i, v) in sol.x.iter().enumerate() {
        rep.push(kind.name(), n, d, used_seed, &format!("x{i}"), *v);
    }
    rep.write(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Sketch { input, kind, r1, seed, out } => cmd_sketch(&input, kind, r1, seed, &out),
        Cmd::Condition { input, kind, seed, report } => cmd_condition(&input, kind, seed, &report),
        Cmd::Regress { a, b, kind, s, eps, seed, optimized, exact_leverage, out } => {
            cmd_regress(&a, &b, kind, s, eps, seed, optimized, exact_leverage, &out)
        }
        Cmd::BenchConditioning { n, d, matrix, kinds, runs, seed, out } => {
            let source = MatrixSource::parse(&matrix)?;
            let kinds = bench::parse_sketch_kinds(&kinds)?;
            bench::run_conditioning_bench(&source, n, d, &kinds, runs, seed, &out)
        }
        Cmd::BenchRegression { n, d, matrix, samples, kinds, runs, eps, seed, out } => {
            let source = MatrixSource::parse(&matrix)?;
            let kinds = bench::parse_pipeline_kinds(&kinds)?;
            bench::run_regression_bench(&source, n, d, &kinds, &samples, runs, eps, seed, &out)
        }
        Cmd::TailCheck { lemma, trials, seed, out } => {
            bench::run_tail_checks(&lemma, trials, seed, &out)
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
