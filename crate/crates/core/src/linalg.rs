//! Small dense factorizations: thin Householder QR, LU with partial
//! pivoting, Cholesky, triangular inversion, and a cyclic Jacobi
//! eigensolver for symmetric matrices.
//!
//! Everything here is deterministic: fixed pivoting rules, fixed sweep
//! orders, and a fixed sign convention for QR, so repeated runs produce
//! bitwise-identical factors.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative threshold deciding numerical rank deficiency of R's diagonal.
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization of an n x d matrix, n >= d, via Householder
/// reflections. Returns (Q, R) with Q n x d having orthonormal columns and
/// R d x d upper triangular with nonnegative diagonal.
///
/// Rank deficiency (smallest |R_jj| <= RANK_TOL * largest) is an error
/// carrying the offending column index.
pub fn qr_thin(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = a.rows();
    let d = a.cols();
    if n < d {
        return Err(Error::Dimension(format!(
            "qr_thin needs rows >= cols, got {n}x{d}"
        )));
    }
    // Work on a column-major copy; reflectors are stored below the diagonal.
    let mut w: Vec<Vec<f64>> = (0..d).map(|j| a.col(j)).collect();
    let mut tau = vec![0.0; d];

    for k in 0..d {
        // Build the reflector for column k from rows k..n.
        let alpha = w[k][k];
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += w[k][i] * w[k][i];
        }
        let xnorm = (alpha * alpha + norm2).sqrt();
        if xnorm == 0.0 {
            tau[k] = 0.0;
        } else {
            // v = x - beta e1 with beta = -sign(alpha) * xnorm avoids
            // cancellation; store v normalized so v[k] = 1.
            let beta = if alpha >= 0.0 { -xnorm } else { xnorm };
            let v0 = alpha - beta;
            tau[k] = -v0 / beta;
            let inv = 1.0 / v0;
            for i in k + 1..n {
                w[k][i] *= inv;
            }
            w[k][k] = beta;
            // Apply (I - tau v v^T) to the remaining columns.
            for j in k + 1..d {
                let mut s = w[j][k];
                for i in k + 1..n {
                    s += w[k][i] * w[j][i];
                }
                s *= tau[k];
                w[j][k] -= s;
                for i in k + 1..n {
                    let vk = w[k][i];
                    w[j][i] -= s * vk;
                }
            }
        }
    }

    // Extract R and fix its diagonal signs to be nonnegative.
    let mut r = DenseMatrix::zeros(d, d);
    let mut flip = vec![false; d];
    for j in 0..d {
        for i in 0..=j {
            r.set(i, j, w[j][i]);
        }
    }
    for k in 0..d {
        if r.get(k, k) < 0.0 {
            flip[k] = true;
            for j in k..d {
                let v = r.get(k, j);
                r.set(k, j, -v);
            }
        }
    }

    // Rank check on the sign-fixed diagonal.
    let mut maxd = 0.0f64;
    for k in 0..d {
        maxd = maxd.max(r.get(k, k));
    }
    for k in 0..d {
        if r.get(k, k) <= RANK_TOL * maxd || maxd == 0.0 {
            return Err(Error::Singular { col: k });
        }
    }

    // Accumulate Q = H_0 ... H_{d-1} * [I_d; 0], then apply the sign flips
    // to its columns.
    let mut q = vec![vec![0.0; n]; d];
    for (j, col) in q.iter_mut().enumerate() {
        col[j] = 1.0;
    }
    for col in q.iter_mut() {
        for k in (0..d).rev() {
            if tau[k] == 0.0 {
                continue;
            }
            let mut s = col[k];
            for i in k + 1..n {
                s += w[k][i] * col[i];
            }
            s *= tau[k];
            col[k] -= s;
            for i in k + 1..n {
                let vk = w[k][i];
                col[i] -= s * vk;
            }
        }
    }
    let mut qm = DenseMatrix::zeros(n, d);
    for j in 0..d {
        let sgn = if flip[j] { -1.0 } else { 1.0 };
        for i in 0..n {
            qm.set(i, j, sgn * q[j][i]);
        }
    }
    Ok((qm, r))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper(r: &DenseMatrix) -> Result<DenseMatrix> {
    let d = r.rows();
    if r.cols() != d {
        return Err(Error::Dimension("invert_upper needs a square matrix".into()));
    }
    let mut maxd = 0.0f64;
    for k in 0..d {
        maxd = maxd.max(r.get(k, k).abs());
    }
    for k in 0..d {
        if r.get(k, k).abs() <= RANK_TOL * maxd || maxd == 0.0 {
            return Err(Error::Singular { col: k });
        }
    }
    let mut inv = DenseMatrix::zeros(d, d);
    for j in 0..d {
        // Solve R x = e_j.
        let mut x = vec![0.0; d];
        x[j] = 1.0;
        for i in (0..=j).rev() {
            let mut s = x[i];
            for k in i + 1..=j {
                s -= r.get(i, k) * x[k];
            }
            x[i] = s / r.get(i, i);
        }
        for i in 0..=j {
            inv.set(i, j, x[i]);
        }
    }
    Ok(inv)
}

/// LU decomposition with partial pivoting, kept packed in one matrix.
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Lu> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension("lu needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..n {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular { col: k });
            }
            if p != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu.get(k, k);
            for i in k + 1..n {
                let m = lu.get(i, k) / piv;
                lu.set(i, k, m);
                if m != 0.0 {
                    for j in k + 1..n {
                        let v = lu.get(i, j) - m * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::Dimension("lu solve rhs length".into()));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        Ok(x)
    }

    /// Solves A^T x = b using the same factorization.
    pub fn solve_transposed(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::Dimension("lu solve_transposed rhs length".into()));
        }
        // A^T = (P^T L U)^T = U^T L^T P, so solve U^T y = b, L^T z = y,
        // then x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu.get(j, i) * y[j];
            }
            y[i] = s / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu.get(j, i) * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }

    pub fn det(&self) -> f64 {
        let n = self.lu.rows();
        let mut d = self.sign;
        for k in 0..n {
            d *= self.lu.get(k, k);
        }
        d
    }
}

/// Upper Cholesky factor R with R^T R = A, for symmetric positive definite
/// A. Fails with a numerical error when a pivot is not strictly positive.
pub fn cholesky_upper(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension("cholesky needs a square matrix".into()));
    }
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = a.get(j, j);
        for k in 0..j {
            s -= r.get(k, j) * r.get(k, j);
        }
        if !(s > 0.0) {
            return Err(Error::Numerical(format!(
                "cholesky pivot {s:.3e} at index {j}; matrix not positive definite"
            )));
        }
        let rjj = s.sqrt();
        r.set(j, j, rjj);
        for i in j + 1..n {
            let mut s = a.get(j, i);
            for k in 0..j {
                s -= r.get(k, j) * r.get(k, i);
            }
            r.set(j, i, s / rjj);
        }
    }
    Ok(r)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of an orthogonal matrix.
pub fn jacobi_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension("jacobi_eigen needs a square matrix".into()));
    }
    let sym_tol = 1e-10 * a.max_abs().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (a.get(i, j) - a.get(j, i)).abs() > sym_tol {
                return Err(Error::Numerical(format!(
                    "jacobi_eigen: matrix not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let mut m = a.clone();
    // Symmetrize exactly so rotations keep symmetry to rounding.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root keeps the rotation stable.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));
    let vals: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (newj, &oldj) in order.iter().enumerate() {
        // Fix each eigenvector's sign so the factorization is deterministic:
        // largest-magnitude component positive, first such index on ties.
        let col = v.col(oldj);
        let mut k_best = 0;
        for (k, &x) in col.iter().enumerate() {
            if x.abs() > col[k_best].abs() {
                k_best = k;
            }
        }
        let sgn = if col[k_best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs.set(i, newj, sgn * col[i]);
        }
    }
    Ok((vals, vecs))
}
