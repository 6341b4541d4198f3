//! Ellipsoidal rounding of centrally symmetric convex bodies.
//!
//! An `Ellipsoid` stores the SPD shape matrix E of {x : x^T E^{-1} x <= 1}.
//! `todd_update` shrinks it to the minimum-volume ellipsoid containing the
//! intersection with a symmetric slab, and `round_2d` iterates axis probes
//! plus such cuts until E/(2d) fits inside the body, giving a 2d-rounding
//! with provably few oracle calls. Bodies are described by a
//! `SeparationOracle`; norm balls {x : ||Ax||_p <= 1} and their block mixed
//! l2/lp generalizations are provided.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_upper, jacobi_eigen, Lu};
use crate::matrix::DenseMatrix;

/// Shape matrix of {x : x^T E^{-1} x <= 1}; kept symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    e: DenseMatrix,
}

impl Ellipsoid {
    /// Validates symmetry and positive definiteness.
    pub fn new(e: DenseMatrix) -> Result<Self> {
        if e.rows() != e.cols() {
            return Err(Error::Dimension(format!(
                "shape matrix must be square, got {}x{}",
                e.rows(),
                e.cols()
            )));
        }
        let scale = e.max_abs().max(1e-300);
        for i in 0..e.rows() {
            for j in 0..i {
                if (e.get(i, j) - e.get(j, i)).abs() > 1e-10 * scale {
                    return Err(Error::Numerical(format!(
                        "shape matrix asymmetric at ({i},{j}): {} vs {}",
                        e.get(i, j),
                        e.get(j, i)
                    )));
                }
            }
        }
        cholesky_upper(&e)
            .map_err(|_| Error::Numerical("shape matrix is not positive definite".into()))?;
        Ok(Ellipsoid { e })
    }

    pub fn unit_ball(d: usize) -> Self {
        Ellipsoid { e: DenseMatrix::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.e.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.e
    }

    /// Multiplies the body's radii by c, i.e. the shape matrix by c^2.
    pub fn scaled(&self, c: f64) -> Result<Ellipsoid> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Argument(format!("scale must be positive, got {c}")));
        }
        Ok(Ellipsoid { e: self.e.scale(c * c) })
    }

    pub fn det(&self) -> Result<f64> {
        Ok(Lu::new(&self.e)?.det())
    }

    /// x^T E^{-1} x, the squared ellipsoidal norm of x.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let sol = Lu::new(&self.e)?.solve(x)?;
        Ok(x.iter().zip(sol.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.quad_form(x)? <= 1.0 + 1e-12)
    }

    /// Largest c with c*u on the boundary: c = 1/sqrt(u^T E^{-1} u).
    pub fn boundary_scale(&self, u: &[f64]) -> Result<f64> {
        let q = self.quad_form(u)?;
        if q <= 0.0 {
            return Err(Error::Argument("direction must be nonzero".into()));
        }
        Ok(1.0 / q.sqrt())
    }
}

/// Closed-form volume ratio sqrt(det E_plus / det E) of the Todd update:
/// sqrt(d) (d/(d-1))^((d-1)/2) beta (1-beta^2)^((d-1)/2), with the d = 1
/// limit equal to beta.
pub fn todd_volume_ratio(d: usize, beta: f64) -> f64 {
    if d <= 1 {
        return beta;
    }
    let df = d as f64;
    df.sqrt() * (df / (df - 1.0)).powf((df - 1.0) / 2.0) * beta * (1.0 - beta * beta).powf((df - 1.0) / 2.0)
}

/// Minimum-volume ellipsoid containing E intersected with the symmetric
/// slab {x : |g^T x| <= beta * sqrt(g^T E g)}. Returns the input unchanged
/// when beta >= 1/sqrt(d), since the slab then cuts nothing off.
pub fn todd_update(ell: &Ellipsoid, g: &[f64], beta: f64) -> Result<Ellipsoid> {
    let d = ell.dim();
    if g.len() != d {
        return Err(Error::Dimension(format!(
            "certificate has length {} for dimension {d}",
            g.len()
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Argument(format!("beta must be positive, got {beta}")));
    }
    if g.iter().all(|v| *v == 0.0) {
        return Err(Error::Argument("certificate must be nonzero".into()));
    }
    if beta >= 1.0 / (d as f64).sqrt() {
        return Ok(ell.clone());
    }
    if d == 1 {
        return Ellipsoid::new(ell.e.scale(beta * beta));
    }
    let df = d as f64;
    let delta = df * (1.0 - beta * beta) / (df - 1.0);
    let sigma = (1.0 - df * beta * beta) / (1.0 - beta * beta);
    let eg = ell.e.matvec(g)?;
    let geg: f64 = g.iter().zip(eg.iter()).map(|(a, b)| a * b).sum();
    if !(geg > 0.0) {
        return Err(Error::Numerical(format!("g^T E g = {geg} must be positive")));
    }
    let mut e_plus = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = delta * (ell.e.get(i, j) - sigma * eg[i] * eg[j] / geg);
            e_plus.set(i, j, v);
        }
    }
    // Exact symmetrization guards against drift in the rank-one term.
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (e_plus.get(i, j) + e_plus.get(j, i));
            e_plus.set(i, j, m);
            e_plus.set(j, i, m);
        }
    }
    Ellipsoid::new(e_plus).map_err(|e| {
        Error::Numerical(format!("todd update lost positive definiteness: {e} (beta = {beta})"))
    })
}

pub enum OracleResponse {
    Inside,
    /// Separating certificate g with |g^T x| <= 1 on the body and
    /// g^T x_query > 1.
    Outside(Vec<f64>),
}

pub trait SeparationOracle {
    fn dim(&self) -> usize;
    fn check(&self, x: &[f64]) -> OracleResponse;
}

/// Rounds a centrally symmetric convex body C to within a factor 2d:
/// returns E with E/(2d) inside C inside E.
///
/// `e0` must satisfy e0/L inside C inside e0. Each sweep eigendecomposes the
/// current E, probes the 2d axis extremes scaled to radius 1/(2 sqrt d), and
/// either terminates (all inside) or applies one Todd cut from the first
/// failing probe. The sweep budget ceil(3.15 d^2 ln L) + d comes from the
/// geometric volume argument; exceeding it means the oracle or L was wrong.
pub fn round_2d(
    oracle: &dyn SeparationOracle,
    e0: &Ellipsoid,
    l: f64,
) -> Result<Ellipsoid> {
    round_2d_impl(oracle, e0, l, |_| {})
}

fn round_2d_impl(
    oracle: &dyn SeparationOracle,
    e0: &Ellipsoid,
    l: f64,
    mut on_cut: impl FnMut(&Ellipsoid),
) -> Result<Ellipsoid> {
    let d = e0.dim();
    if oracle.dim() != d {
        return Err(Error::Dimension(format!(
            "oracle dimension {} vs ellipsoid dimension {d}",
            oracle.dim()
        )));
    }
    if !(l >= 1.0) || !l.is_finite() {
        return Err(Error::Argument(format!("L must be >= 1, got {l}")));
    }
    let sweep_cap = (3.15 * (d * d) as f64 * l.ln()).ceil() as usize + d;
    let probe_radius = 1.0 / (2.0 * (d as f64).sqrt());
    let mut ell = e0.clone();
    for _sweep in 0..sweep_cap {
        let (evals, evecs) = jacobi_eigen(&ell.e)?;
        let mut cut: Option<Vec<f64>> = None;
        'probes: for (i, &lam) in evals.iter().enumerate() {
            if lam <= 0.0 {
                return Err(Error::Numerical(format!(
                    "ellipsoid eigenvalue {lam} is not positive"
                )));
            }
            let r = probe_radius * lam.sqrt();
            for sign in [1.0, -1.0] {
                let x: Vec<f64> = (0..d).map(|k| sign * r * evecs.get(k, i)).collect();
                match oracle.check(&x) {
                    OracleResponse::Inside => {}
                    OracleResponse::Outside(g) => {
                        let gx: f64 = g.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                        if !g.iter().all(|v| v.is_finite()) || gx <= 1.0 {
                            return Err(Error::ContractViolation(format!(
                                "separation certificate invalid: g^T x = {gx}"
                            )));
                        }
                        cut = Some(g);
                        break 'probes;
                    }
                }
            }
        }
        match cut {
            None => return Ok(ell),
            Some(g) => {
                let eg = ell.e.matvec(&g)?;
                let geg: f64 = g.iter().zip(eg.iter()).map(|(a, b)| a * b).sum();
                let beta = 1.0 / geg.sqrt();
                ell = todd_update(&ell, &g, beta)?;
                on_cut(&ell);
            }
        }
    }
    Err(Error::ContractViolation(format!(
        "rounding exceeded {sweep_cap} sweeps; oracle certificates or L are inconsistent"
    )))
}

/// Separation oracle for {x : ||Ax||_p <= 1}.
///
/// The certificate at an outside point z is the norm subgradient
/// g = A^T (sign(Az) .* |Az/t|^(p-1)) with t = ||Az||_p, which satisfies
/// g^T z = t > 1 and g^T x <= ||Ax||_p on the ball.
pub struct NormBallOracle {
    a: DenseMatrix,
    p: f64,
}

impl NormBallOracle {
    pub fn new(a: DenseMatrix, p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Argument(format!("p must be >= 1, got {p}")));
        }
        Ok(NormBallOracle { a, p })
    }
}

impl SeparationOracle for NormBallOracle {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn check(&self, x: &[f64]) -> OracleResponse {
        let az = self.a.matvec(x).expect("query dimension checked by caller");
        let t = crate::matrix::norm_lp(&az, self.p);
        if t <= 1.0 {
            return OracleResponse::Inside;
        }
        let weights: Vec<f64> = az
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum() * (v.abs() / t).powf(self.p - 1.0)
                }
            })
            .collect();
        let mut g = vec![0.0; self.a.cols()];
        for i in 0..self.a.rows() {
            let w = weights[i];
            if w != 0.0 {
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj += w * self.a.get(i, j);
                }
            }
        }
        OracleResponse::Outside(g)
    }
}

/// Separation oracle for the block mixed norm
/// f(x) = (sum_i ||A_i x||_2^p)^(1/p), where A_i are consecutive row blocks
/// of height `block` (the last may be shorter). The subgradient is
/// f^(1-p) * sum_i f_i^(p-2) A_i^T A_i x with zero blocks contributing
/// nothing.
pub struct BlockNormOracle {
    a: DenseMatrix,
    block: usize,
    p: f64,
}

impl BlockNormOracle {
    pub fn new(a: DenseMatrix, block: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Argument(format!("p must be >= 1, got {p}")));
        }
        if block == 0 {
            return Err(Error::Argument("block height must be >= 1".into()));
        }
        Ok(BlockNormOracle { a, block, p })
    }

    fn value_and_block_norms(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let ax = self.a.matvec(x).expect("query dimension checked by caller");
        let blocks = self.a.rows().div_ceil(self.block);
        let mut norms = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let lo = b * self.block;
            let hi = (lo + self.block).min(self.a.rows());
            let nrm: f64 = ax[lo..hi].iter().map(|v| v * v).sum::<f64>().sqrt();
            norms.push(nrm);
        }
        let f = crate::matrix::norm_lp(&norms, self.p);
        (f, norms, ax)
    }
}

impl SeparationOracle for BlockNormOracle {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn check(&self, x: &[f64]) -> OracleResponse {
        let (f, norms, ax) = self.value_and_block_norms(x);
        if f <= 1.0 {
            return OracleResponse::Inside;
        }
        // Row i in block b contributes (f_b/f)^(p-2) * (Ax)_i / f to A^T(..).
        let mut row_weight = vec![0.0; self.a.rows()];
        for (b, &fb) in norms.iter().enumerate() {
            if fb == 0.0 {
                continue;
            }
            let w = (fb / f).powf(self.p - 2.0) / f;
            let lo = b * self.block;
            let hi = (lo + self.block).min(self.a.rows());
            for i in lo..hi {
                row_weight[i] = w * ax[i];
            }
        }
        let mut g = vec![0.0; self.a.cols()];
        for i in 0..self.a.rows() {
            let w = row_weight[i];
            if w != 0.0 {
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj += w * self.a.get(i, j);
                }
            }
        }
        OracleResponse::Outside(g)
    }
}
