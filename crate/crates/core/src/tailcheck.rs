//! Finite-sample concentration bounds for sums of half-Cauchy variables
//! and for l1 row sampling, together with Monte Carlo estimators of the
//! probabilities they bound. Every bound here is an exact closed form;
//! the simulators exist to verify empirically that the bounds hold.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::{norm_l1, norm_linf, DenseMatrix};
use crate::rng::RngStream;

/// One Monte Carlo check: an estimated probability next to the bound it
/// must not exceed. `pass` allows three standard errors of slack.
#[derive(Debug, Clone, Copy)]
pub struct TailOutcome {
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
    pub trials: usize,
    pub pass: bool,
}

fn outcome(hits: usize, trials: usize, bound: f64) -> TailOutcome {
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    TailOutcome { empirical: p, bound, se, trials, pass: p <= bound + 3.0 * se }
}

/// Upper tail of X = sum_i g_i |C_i| over m (possibly dependent) Cauchy
/// variables with g_i > 0 summing to g: for t >= 1,
/// Pr[X > g t] <= (1/(pi t)) (log(1+(2mt)^2)/(1-1/(pi t)) + 1).
pub fn cauchy_upper_bound(m: usize, t: f64) -> Result<f64> {
    if t < 1.0 || m == 0 {
        return Err(Error::Argument(format!("upper tail bound needs t >= 1 and m >= 1, got t = {t}, m = {m}")));
    }
    let pt = PI * t;
    Ok((1.0 / pt) * ((1.0 + (2.0 * m as f64 * t).powi(2)).ln() / (1.0 - 1.0 / pt) + 1.0))
}

/// Lower tail of X = sum_i g_i |C_i| over independent Cauchy variables
/// with sum g_i^2 <= g^2/beta^2: for t >= 0, Pr[X <= g(1-t)] <= exp(-beta^2 t^2/3).
/// Equal weights admit beta^2 = r, the number of terms.
pub fn cauchy_lower_bound(beta_sq: f64, t: f64) -> Result<f64> {
    if beta_sq <= 0.0 || t < 0.0 {
        return Err(Error::Argument(format!("lower tail bound needs beta^2 > 0 and t >= 0, got {beta_sq}, {t}")));
    }
    Ok((-beta_sq * t * t / 3.0).exp())
}

/// Failure probability of the (1 +- eps) sampling bracket:
/// 2 exp(-a s eps^2 ||Zx||_1 / ((2 + 2 eps/3) ||Z||_1 ||x||_inf)).
pub fn sampling_failure_bound(
    a: f64,
    s: f64,
    eps: f64,
    zx_l1: f64,
    z_l1: f64,
    x_linf: f64,
) -> Result<f64> {
    if !(a > 0.0 && s > 0.0 && eps > 0.0 && z_l1 > 0.0 && x_linf > 0.0) {
        return Err(Error::Argument("sampling bound needs positive a, s, eps, ||Z||_1, ||x||_inf".into()));
    }
    Ok(2.0 * (-a * s * eps * eps * zx_l1 / ((2.0 + 2.0 * eps / 3.0) * z_l1 * x_linf)).exp())
}

/// Largest a with t_i >= a ||Z_(i)||_1 / ||Z||_1 for every row: the min of
/// t_i ||Z||_1 / ||Z_(i)||_1 over rows with a nonzero norm.
pub fn sampling_tightness(t: &[f64], z: &DenseMatrix) -> Result<f64> {
    if t.len() != z.rows() {
        return Err(Error::Dimension(format!("{} sampling weights for {} rows", t.len(), z.rows())));
    }
    let z_l1 = z.l1_entrywise();
    let mut a = f64::INFINITY;
    for (i, &ti) in t.iter().enumerate() {
        let row = norm_l1(z.row(i));
        if row > 0.0 {
            a = a.min(ti * z_l1 / row);
        }
    }
    if !a.is_finite() {
        return Err(Error::Argument("all rows of Z are zero".into()));
    }
    Ok(a)
}

/// Estimates Pr[mean of m |Cauchy| draws > t] against the closed-form
/// upper tail bound (equal weights, so g = 1 after normalizing by m).
pub fn simulate_upper_tail(m: usize, t: f64, trials: usize, seed: u64) -> Result<TailOutcome> {
    let bound = cauchy_upper_bound(m, t)?;
    if trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut hits = 0usize;
    for _ in 0..trials {
        let x: f64 = (0..m).map(|_| rng.cauchy().abs()).sum::<f64>() / m as f64;
        if x > t {
            hits += 1;
        }
    }
    Ok(outcome(hits, trials, bound))
}

/// Estimates Pr[mean of r |Cauchy| draws <= 1 - t] against the lower tail
/// bound with the equal-weight beta^2 = r.
pub fn simulate_lower_tail(r: usize, t: f64, trials: usize, seed: u64) -> Result<TailOutcome> {
    if r == 0 || trials == 0 {
        return Err(Error::Argument("need r >= 1 and at least one trial".into()));
    }
    let bound = cauchy_lower_bound(r as f64, t)?;
    let mut rng = RngStream::new(seed, 0);
    let mut hits = 0usize;
    for _ in 0..trials {
        let x: f64 = (0..r).map(|_| rng.cauchy().abs()).sum::<f64>() / r as f64;
        if x <= 1.0 - t {
            hits += 1;
        }
    }
    Ok(outcome(hits, trials, bound))
}

/// Estimates how often ||DZx||_1 leaves the (1 +- eps) bracket around
/// ||Zx||_1 under row sampling with the exact l1 scores t_i =
/// ||Z_(i)||_1/||Z||_1 (so a = 1), against the stated failure bound.
pub fn simulate_sampling_bracket(
    z: &DenseMatrix,
    x: &[f64],
    s: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<TailOutcome> {
    if trials == 0 || s == 0 {
        return Err(Error::Argument("need s >= 1 and at least one trial".into()));
    }
    let zx = z.matvec(x)?;
    let zx_l1 = norm_l1(&zx);
    let z_l1 = z.l1_entrywise();
    let n = z.rows();
    let t: Vec<f64> = (0..n).map(|i| norm_l1(z.row(i)) / z_l1).collect();
    let a = sampling_tightness(&t, z)?;
    let bound = sampling_failure_bound(a, s as f64, eps, zx_l1, z_l1, norm_linf(x))?;
    let probs: Vec<f64> = t.iter().map(|&ti| (s as f64 * ti).min(1.0)).collect();
    let mut rng = RngStream::new(seed, 0);
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut sampled = 0.0;
        for i in 0..n {
            if probs[i] > 0.0 && rng.uniform_open() < probs[i] {
                sampled += zx[i].abs() / probs[i];
            }
        }
        if sampled < (1.0 - eps) * zx_l1 || sampled > (1.0 + eps) * zx_l1 {
            hits += 1;
        }
    }
    Ok(outcome(hits, trials, bound))
}

/// Mean and standard error of ||DZx||_1 over sampling trials, next to the
/// exact ||Zx||_1 it must match in expectation.
pub fn simulate_sampling_mean(
    z: &DenseMatrix,
    x: &[f64],
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if trials < 2 || s == 0 {
        return Err(Error::Argument("need s >= 1 and at least two trials".into()));
    }
    let zx = z.matvec(x)?;
    let zx_l1 = norm_l1(&zx);
    let z_l1 = z.l1_entrywise();
    let n = z.rows();
    let probs: Vec<f64> = (0..n).map(|i| (s as f64 * norm_l1(z.row(i)) / z_l1).min(1.0)).collect();
    let mut rng = RngStream::new(seed, 0);
    let mut values = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut sampled = 0.0;
        for i in 0..n {
            if probs[i] > 0.0 && rng.uniform_open() < probs[i] {
                sampled += zx[i].abs() / probs[i];
            }
        }
        values.push(sampled);
    }
    let (mean, se) = crate::stats::mean_and_se(&values)?;
    Ok((mean, se, zx_l1))
}
