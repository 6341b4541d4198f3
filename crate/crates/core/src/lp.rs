//! Exact weighted least-absolute-deviations solves.
//!
//! The problem is min over x of sum_i w_i |a_i^T x - b_i|, optionally with
//! some coordinates fixed to given values and an optional box |x_j| <= B.
//! As an LP this is min sum w_i (u_i + v_i) subject to Ax - b = u - v with
//! u, v >= 0 plus the bound constraints, and the solver is a primal simplex
//! on exactly that LP. The u/v columns are plus/minus identity columns, so
//! the basis is kept implicit: a set Z of "interpolated" rows (both u_i and
//! v_i nonbasic, residual pinned to zero), one basic variable per remaining
//! row (the side matching the residual sign), and one basic x column per
//! interpolated row. Every simplex quantity is recovered from the small
//! |Z| x |Z| core A[Z, F] instead of an n x n basis.
//!
//! Pivoting: entering variable by most negative reduced cost with lowest
//! index on ties; the ratio test passes through residual sign flips while
//! the directional derivative stays negative (each flip is itself a legal
//! simplex exchange on that row's u/v pair, so a pass-through step is a
//! finite sequence of ordinary pivots). After a run of degenerate steps the
//! solver falls back to Bland's rule (lowest-index entering, first blocking
//! breakpoint), which guarantees termination; it returns to the fast rule on
//! the next improving step. Every solve ends with a duality-gap certificate.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative duality-gap tolerance for the optimality certificate.
pub const CERT_TOL: f64 = 1e-8;

const COST_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_TRIGGER: u32 = 40;

#[derive(Debug, Clone)]
pub struct L1Problem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub row_weights: Vec<f64>,
    pub fixed_coords: Vec<(usize, f64)>,
    /// Optional bound B with |x_j| <= B for every coordinate.
    pub box_bound: Option<f64>,
}

impl L1Problem {
    pub fn new(a: DenseMatrix, b: Vec<f64>, row_weights: Vec<f64>) -> Self {
        L1Problem { a, b, row_weights, fixed_coords: Vec::new(), box_bound: None }
    }

    pub fn with_fixed(mut self, fixed: Vec<(usize, f64)>) -> Self {
        self.fixed_coords = fixed;
        self
    }

    pub fn with_box(mut self, bound: f64) -> Self {
        self.box_bound = Some(bound);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.a.rows();
        let d = self.a.cols();
        if self.b.len() != n || self.row_weights.len() != n {
            return Err(Error::Dimension(format!(
                "problem with {n} rows has b length {} and weights length {}",
                self.b.len(),
                self.row_weights.len()
            )));
        }
        if self.row_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Argument("row weights must be finite and >= 0".into()));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("b must be finite".into()));
        }
        let mut seen = vec![false; d];
        for &(j, v) in &self.fixed_coords {
            if j >= d {
                return Err(Error::Argument(format!("fixed coordinate {j} out of range")));
            }
            if seen[j] {
                return Err(Error::Argument(format!("fixed coordinate {j} repeated")));
            }
            if !v.is_finite() {
                return Err(Error::Argument("fixed value must be finite".into()));
            }
            seen[j] = true;
        }
        if let Some(bound) = self.box_bound {
            if !(bound > 0.0) || !bound.is_finite() {
                return Err(Error::Argument(format!("box bound must be positive, got {bound}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct L1Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

/// Solves the weighted l1 regression problem to optimality.
///
/// Infeasible is only possible when a fixed coordinate violates the box
/// bound; the objective itself is bounded below by zero, so an unbounded
/// improving direction would indicate a solver defect and surfaces as a
/// numerical error instead of a solution.
pub fn solve_weighted_l1(prob: &L1Problem) -> Result<L1Solution> {
    prob.validate()?;
    let d = prob.a.cols();

    // Fixed coordinates are substituted out: b_eff = b - A[:, fixed] * vals.
    let mut is_fixed = vec![false; d];
    let mut fixed_val = vec![0.0; d];
    for &(j, v) in &prob.fixed_coords {
        is_fixed[j] = true;
        fixed_val[j] = v;
        if let Some(bound) = prob.box_bound {
            if v.abs() > bound {
                return Ok(L1Solution {
                    x: Vec::new(),
                    objective: f64::INFINITY,
                    status: SolveStatus::Infeasible,
                });
            }
        }
    }
    let free_cols: Vec<usize> = (0..d).filter(|&j| !is_fixed[j]).collect();

    // Zero-weight rows are dropped from the tableau; they cannot change the
    // optimum and shrinking n speeds the ratio tests.
    let n = prob.a.rows();
    let kept_rows: Vec<usize> = (0..n).filter(|&i| prob.row_weights[i] > 0.0).collect();

    let mut x_full = fixed_val.clone();
    if !free_cols.is_empty() && !kept_rows.is_empty() {
        let mut a_red = DenseMatrix::zeros(kept_rows.len(), free_cols.len());
        let mut b_red = Vec::with_capacity(kept_rows.len());
        let mut w_red = Vec::with_capacity(kept_rows.len());
        for (ri, &i) in kept_rows.iter().enumerate() {
            let row = prob.a.row(i);
            for (rj, &j) in free_cols.iter().enumerate() {
                a_red.set(ri, rj, row[j]);
            }
            let shift: f64 = (0..d)
                .filter(|&j| is_fixed[j])
                .map(|j| row[j] * fixed_val[j])
                .sum();
            b_red.push(prob.b[i] - shift);
            w_red.push(prob.row_weights[i]);
        }
        let (lo, hi) = match prob.box_bound {
            Some(bound) => (vec![-bound; free_cols.len()], vec![bound; free_cols.len()]),
            None => (
                vec![f64::NEG_INFINITY; free_cols.len()],
                vec![f64::INFINITY; free_cols.len()],
            ),
        };
        let x_red = Simplex::new(&a_red, &b_red, &w_red, lo, hi)?.run()?;
        for (rj, &j) in free_cols.iter().enumerate() {
            x_full[j] = x_red[rj];
        }
    }
    // With every row weightless the zero vector (clamped into the box) is
    // optimal for the free part; x_full already holds zeros there.

    let objective = recompute_objective(prob, &x_full);
    Ok(L1Solution { x: x_full, objective, status: SolveStatus::Optimal })
}

fn recompute_objective(prob: &L1Problem, x: &[f64]) -> f64 {
    let mut obj = 0.0;
    for i in 0..prob.a.rows() {
        let r: f64 = prob.a.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()
            - prob.b[i];
        obj += prob.row_weights[i] * r.abs();
    }
    obj
}

/// The conditioning subproblem min ||U z||_1 over ||z||_inf <= 1, z_j = 1.
pub fn kappa_beta_lp(u: &DenseMatrix, j: usize) -> Result<f64> {
    if j >= u.cols() {
        return Err(Error::Argument(format!("column {j} out of range")));
    }
    let n = u.rows();
    let prob = L1Problem::new(u.clone(), vec![0.0; n], vec![1.0; n])
        .with_fixed(vec![(j, 1.0)])
        .with_box(1.0);
    let sol = solve_weighted_l1(&prob)?;
    debug_assert_eq!(sol.status, SolveStatus::Optimal);
    Ok(sol.objective)
}

/// Global variable index used by Bland tie-breaking: x_j -> j,
/// u_i -> d + 2i, v_i -> d + 2i + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Entering {
    /// Nonbasic x column moving off its bound; `dir` is +-1.
    X { col: usize, dir: f64 },
    /// Residual pair on an interpolated row leaving Z; `dir` = +1 opens the
    /// u side (residual grows positive), -1 the v side.
    Residual { row: usize, dir: f64 },
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    /// Residual of a non-Z row crosses zero (pass-through candidate).
    Soft { row: usize },
    /// Basic x column hits a bound; payload is its position in F.
    HardX { fpos: usize, to_upper: bool },
    /// Entering x column travels to its opposite bound.
    BoundFlip,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    kind: EventKind,
    var_index: usize,
    slope_inc: f64,
}

struct Simplex<'p> {
    n: usize,
    d: usize,
    a: &'p DenseMatrix,
    b: &'p [f64],
    w: &'p [f64],
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// sigma[i]: +1 (u_i basic), -1 (v_i basic), 0 (row in Z).
    sigma: Vec<f64>,
    z_rows: Vec<usize>,
    /// Basic x columns, parallel to z_rows (|F| == |Z|).
    basic_x: Vec<usize>,
    is_basic_x: Vec<bool>,
    at_upper: Vec<bool>,
    x: Vec<f64>,
    r: Vec<f64>,
    cost_scale: f64,
}

impl<'p> Simplex<'p> {
    fn new(
        a: &'p DenseMatrix,
        b: &'p [f64],
        w: &'p [f64],
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Result<Self> {
        let n = a.rows();
        let d = a.cols();
        let cost_scale = w.iter().fold(1.0f64, |m, &x| m.max(x));
        let mut s = Simplex {
            n,
            d,
            a,
            b,
            w,
            lo,
            hi,
            sigma: vec![1.0; n],
            z_rows: Vec::new(),
            basic_x: Vec::new(),
            is_basic_x: vec![false; d],
            at_upper: vec![false; d],
            x: vec![0.0; d],
            r: vec![0.0; n],
            cost_scale,
        };
        s.startup()?;
        Ok(s)
    }

    /// Builds the initial basis: bounded columns start nonbasic at the bound
    /// closer to zero; unbounded columns have no bound to rest at and are
    /// driven into the basis by Gaussian elimination with row pivoting,
    /// which simultaneously picks |Z| independent rows.
    fn startup(&mut self) -> Result<()> {
        let free: Vec<usize> = (0..self.d).filter(|&j| self.lo[j].is_infinite()).collect();
        for j in 0..self.d {
            if !self.lo[j].is_infinite() {
                // Bound closer to zero; lower on ties. Quantities here are
                // symmetric boxes today, but keep the general rule.
                let pick_upper = self.hi[j].abs() < self.lo[j].abs();
                self.at_upper[j] = pick_upper;
                self.x[j] = if pick_upper { self.hi[j] } else { self.lo[j] };
            }
        }
        if !free.is_empty() {
            // Eliminate on a working copy of the free columns.
            let mut work: Vec<Vec<f64>> = free.iter().map(|&j| self.a.col(j)).collect();
            let col_scale: Vec<f64> = work
                .iter()
                .map(|c| c.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300))
                .collect();
            let mut used_row = vec![false; self.n];
            for (k, &j) in free.iter().enumerate() {
                let mut best_row = None;
                let mut best = 0.0f64;
                for i in 0..self.n {
                    if used_row[i] {
                        continue;
                    }
                    let v = work[k][i].abs();
                    if v > best {
                        best = v;
                        best_row = Some(i);
                    }
                }
                let Some(p) = best_row else {
                    return Err(Error::Singular { col: j });
                };
                if best <= 1e-10 * col_scale[k] {
                    return Err(Error::Singular { col: j });
                }
                used_row[p] = true;
                self.z_rows.push(p);
                self.basic_x.push(j);
                self.is_basic_x[j] = true;
                self.sigma[p] = 0.0;
                // Eliminate row p from the remaining columns.
                let piv = work[k][p];
                for later in k + 1..free.len() {
                    let f = work[later][p] / piv;
                    if f != 0.0 {
                        for i in 0..self.n {
                            if !used_row[i] {
                                let delta = f * work[k][i];
                                work[later][i] -= delta;
                            }
                        }
                        work[later][p] = 0.0;
                    }
                }
            }
        }
        self.refresh_point()?;
        for i in 0..self.n {
            if self.sigma[i] != 0.0 {
                self.sigma[i] = if self.r[i] >= 0.0 { 1.0 } else { -1.0 };
            }
        }
        Ok(())
    }

    /// Re-solves the interpolation conditions for the basic x values and
    /// recomputes residuals, so rounding errors cannot accumulate across
    /// pivots.
    fn refresh_point(&mut self) -> Result<()> {
        let k = self.z_rows.len();
        if k > 0 {
            let core = self.core()?;
            let mut rhs = Vec::with_capacity(k);
            for &i in &self.z_rows {
                let row = self.a.row(i);
                let mut s = self.b[i];
                for j in 0..self.d {
                    if !self.is_basic_x[j] {
                        s -= row[j] * self.x[j];
                    }
                }
                rhs.push(s);
            }
            let xf = core.solve(&rhs)?;
            for (pos, &j) in self.basic_x.iter().enumerate() {
                self.x[j] = xf[pos];
            }
        }
        for i in 0..self.n {
            let row = self.a.row(i);
            self.r[i] = row.iter().zip(self.x.iter()).map(|(a, b)| a * b).sum::<f64>()
                - self.b[i];
        }
        for &i in &self.z_rows {
            self.r[i] = 0.0;
        }
        Ok(())
    }

    fn core(&self) -> Result<crate::linalg::Lu> {
        let k = self.z_rows.len();
        let mut m = DenseMatrix::zeros(k.max(1), k.max(1));
        if k == 0 {
            m.set(0, 0, 1.0);
        }
        for (p, &i) in self.z_rows.iter().enumerate() {
            let row = self.a.row(i);
            for (q, &j) in self.basic_x.iter().enumerate() {
                m.set(p, q, row[j]);
            }
        }
        crate::linalg::Lu::new(&m).map_err(|_| {
            Error::Numerical("simplex basis core became singular".into())
        })
    }

    /// Dual multipliers: y_i = -sigma_i w_i off Z; on Z they solve
    /// A[Z,F]^T y_Z = -A[off,F]^T y_off so that basic x reduced costs vanish.
    fn duals(&self, core: &crate::linalg::Lu) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            if self.sigma[i] != 0.0 {
                y[i] = -self.sigma[i] * self.w[i];
            }
        }
        let k = self.z_rows.len();
        if k > 0 {
            let mut rhs = vec![0.0; k];
            for (q, &j) in self.basic_x.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..self.n {
                    if self.sigma[i] != 0.0 {
                        s += y[i] * self.a.get(i, j);
                    }
                }
                rhs[q] = -s;
            }
            let yz = core.solve_transposed(&rhs)?;
            for (p, &i) in self.z_rows.iter().enumerate() {
                y[i] = yz[p];
            }
        }
        Ok(y)
    }

    fn reduced_cost_x(&self, y: &[f64], j: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += y[i] * self.a.get(i, j);
        }
        -s
    }

    /// Picks the entering variable, or None at optimality.
    fn choose_entering(&self, y: &[f64], bland: bool) -> Option<Entering> {
        let tol = COST_TOL * self.cost_scale;
        let mut best: Option<(f64, usize, Entering)> = None;
        let mut consider = |cost: f64, var_index: usize, ent: Entering| {
            if cost >= -tol {
                return;
            }
            let better = match &best {
                None => true,
                Some((bc, bi, _)) => {
                    if bland {
                        var_index < *bi
                    } else {
                        cost < *bc - 1e-15 || (cost <= *bc + 1e-15 && var_index < *bi)
                    }
                }
            };
            if better {
                best = Some((cost, var_index, ent));
            }
        };
        for j in 0..self.d {
            if self.is_basic_x[j] || self.lo[j].is_infinite() {
                continue;
            }
            let c = self.reduced_cost_x(y, j);
            if self.at_upper[j] {
                consider(-c, j, Entering::X { col: j, dir: -1.0 });
            } else {
                consider(c, j, Entering::X { col: j, dir: 1.0 });
            }
        }
        for &i in &self.z_rows {
            let cu = self.w[i] + y[i];
            let cv = self.w[i] - y[i];
            consider(cu, self.d + 2 * i, Entering::Residual { row: i, dir: 1.0 });
            consider(cv, self.d + 2 * i + 1, Entering::Residual { row: i, dir: -1.0 });
        }
        best.map(|(_, _, e)| e)
    }

    /// Direction of motion for a unit increase of the entering variable:
    /// change of basic x values and of every residual.
    fn direction(
        &self,
        core: &crate::linalg::Lu,
        entering: Entering,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.z_rows.len();
        let mut dx = vec![0.0; self.d];
        match entering {
            Entering::X { col, dir } => {
                if k > 0 {
                    let rhs: Vec<f64> =
                        self.z_rows.iter().map(|&i| -dir * self.a.get(i, col)).collect();
                    let delta = core.solve(&rhs)?;
                    for (pos, &j) in self.basic_x.iter().enumerate() {
                        dx[j] = delta[pos];
                    }
                }
                dx[col] = dir;
            }
            Entering::Residual { row, dir } => {
                let pos = self.z_rows.iter().position(|&i| i == row).unwrap();
                let mut rhs = vec![0.0; k];
                rhs[pos] = dir;
                let delta = core.solve(&rhs)?;
                for (p, &j) in self.basic_x.iter().enumerate() {
                    dx[j] = delta[p];
                }
            }
        }
        let mut dr = vec![0.0; self.n];
        for i in 0..self.n {
            if self.sigma[i] == 0.0 {
                continue;
            }
            let row = self.a.row(i);
            let mut s = 0.0;
            for (j, &dxj) in dx.iter().enumerate() {
                if dxj != 0.0 {
                    s += row[j] * dxj;
                }
            }
            dr[i] = s;
        }
        if let Entering::Residual { row, dir } = entering {
            dr[row] = dir;
        }
        Ok((dx, dr))
    }

    fn run(mut self) -> Result<Vec<f64>> {
        let pivot_cap = 400 * (self.n + 2 * self.d) + 10_000;
        let mut degenerate_streak = 0u32;
        let mut pivots = 0usize;
        loop {
            if pivots > pivot_cap {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {pivot_cap} pivots"
                )));
            }
            pivots += 1;
            let core = self.core()?;
            let y = self.duals(&core)?;
            let bland = degenerate_streak >= BLAND_TRIGGER;
            let Some(entering) = self.choose_entering(&y, bland) else {
                self.certify(&y)?;
                return Ok(self.x);
            };
            let (dx, dr) = self.direction(&core, entering)?;
            let step = self.ratio_test(entering, &dx, &dr, bland)?;
            if step.t <= DEGENERATE_STEP {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.apply_step(entering, &dx, step)?;
        }
    }

    /// Scans breakpoints along the direction. In pass-through mode the step
    /// continues across residual sign flips while the objective's
    /// directional derivative stays negative; in Bland mode it stops at the
    /// first breakpoint.
    fn ratio_test(
        &self,
        entering: Entering,
        dx: &[f64],
        dr: &[f64],
        bland: bool,
    ) -> Result<Step> {
        let mut events: Vec<Event> = Vec::new();
        for i in 0..self.n {
            let sg = self.sigma[i];
            if sg == 0.0 || sg * dr[i] >= 0.0 {
                continue;
            }
            // Basic value sg*r_i shrinks at rate |dr_i|; crossing at t_i.
            let t = (sg * self.r[i]) / (-sg * dr[i]);
            events.push(Event {
                t: t.max(0.0),
                kind: EventKind::Soft { row: i },
                var_index: self.d + 2 * i + if sg > 0.0 { 0 } else { 1 },
                slope_inc: 2.0 * self.w[i] * dr[i].abs(),
            });
        }
        for (fpos, &j) in self.basic_x.iter().enumerate() {
            let dj = dx[j];
            if dj > 0.0 && self.hi[j].is_finite() {
                events.push(Event {
                    t: ((self.hi[j] - self.x[j]) / dj).max(0.0),
                    kind: EventKind::HardX { fpos, to_upper: true },
                    var_index: j,
                    slope_inc: 0.0,
                });
            } else if dj < 0.0 && self.lo[j].is_finite() {
                events.push(Event {
                    t: ((self.lo[j] - self.x[j]) / dj).max(0.0),
                    kind: EventKind::HardX { fpos, to_upper: false },
                    var_index: j,
                    slope_inc: 0.0,
                });
            }
        }
        if let Entering::X { col, .. } = entering {
            if self.hi[col].is_finite() {
                events.push(Event {
                    t: self.hi[col] - self.lo[col],
                    kind: EventKind::BoundFlip,
                    var_index: col,
                    slope_inc: 0.0,
                });
            }
        }
        if events.is_empty() {
            // Cannot happen for a bounded-below objective.
            return Err(Error::Numerical("unbounded simplex direction".into()));
        }
        // Hard events take priority inside a tie: motion must stop there.
        events.sort_by(|a, b| {
            a.t.partial_cmp(&b.t)
                .unwrap()
                .then_with(|| hard_rank(a).cmp(&hard_rank(b)))
                .then_with(|| a.var_index.cmp(&b.var_index))
        });

        // Directional derivative at t = 0+: entering cost plus the response
        // of the basic residual variables.
        let mut slope = match entering {
            Entering::Residual { row, .. } => self.w[row],
            Entering::X { .. } => 0.0,
        };
        for i in 0..self.n {
            if self.sigma[i] != 0.0 {
                slope += self.w[i] * self.sigma[i] * dr[i];
            }
        }

        let mut crossed: Vec<usize> = Vec::new();
        for ev in &events {
            match ev.kind {
                EventKind::Soft { row } => {
                    if bland {
                        return Ok(Step { t: ev.t, stop: Stop::Leave { row }, crossed });
                    }
                    slope += ev.slope_inc;
                    if slope >= -COST_TOL * self.cost_scale {
                        return Ok(Step { t: ev.t, stop: Stop::Leave { row }, crossed });
                    }
                    crossed.push(row);
                }
                EventKind::HardX { fpos, to_upper } => {
                    return Ok(Step { t: ev.t, stop: Stop::BasicOut { fpos, to_upper }, crossed });
                }
                EventKind::BoundFlip => {
                    return Ok(Step { t: ev.t, stop: Stop::Flip, crossed });
                }
            }
        }
        Err(Error::Numerical("unbounded simplex direction".into()))
    }

    fn apply_step(&mut self, entering: Entering, dx: &[f64], step: Step) -> Result<()> {
        let t = step.t;
        for j in 0..self.d {
            if dx[j] != 0.0 {
                self.x[j] += t * dx[j];
            }
        }
        for &i in &step.crossed {
            self.sigma[i] = -self.sigma[i];
        }
        match entering {
            Entering::X { col, dir } => match step.stop {
                Stop::Leave { row } => {
                    self.z_rows.push(row);
                    self.basic_x.push(col);
                    self.sigma[row] = 0.0;
                    self.is_basic_x[col] = true;
                }
                Stop::BasicOut { fpos, to_upper } => {
                    let out = self.basic_x[fpos];
                    self.is_basic_x[out] = false;
                    self.at_upper[out] = to_upper;
                    self.x[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                    self.basic_x[fpos] = col;
                    self.is_basic_x[col] = true;
                }
                Stop::Flip => {
                    self.at_upper[col] = dir > 0.0;
                    self.x[col] = if dir > 0.0 { self.hi[col] } else { self.lo[col] };
                }
            },
            Entering::Residual { row, dir } => {
                let pos = self.z_rows.iter().position(|&i| i == row).unwrap();
                match step.stop {
                    Stop::Leave { row: out_row } => {
                        // Row `row` exits Z (residual now has sign dir),
                        // row `out_row` replaces it.
                        self.z_rows[pos] = out_row;
                        self.sigma[out_row] = 0.0;
                        self.sigma[row] = dir;
                    }
                    Stop::BasicOut { fpos, to_upper } => {
                        let out = self.basic_x[fpos];
                        self.is_basic_x[out] = false;
                        self.at_upper[out] = to_upper;
                        self.x[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                        self.z_rows.remove(pos);
                        self.basic_x.remove(fpos);
                        self.sigma[row] = dir;
                    }
                    Stop::Flip => unreachable!("residual entering has no bound flip"),
                }
            }
        }
        self.refresh_point()
    }

    /// Optimality certificate: dual feasibility of the multipliers up to
    /// tolerance and a duality gap below CERT_TOL * (1 + |objective|).
    fn certify(&self, y: &[f64]) -> Result<()> {
        let obj: f64 = (0..self.n).map(|i| self.w[i] * self.r[i].abs()).sum();
        let tol = COST_TOL * self.cost_scale * 10.0;
        let mut dual = 0.0;
        for i in 0..self.n {
            if y[i].abs() > self.w[i] + tol {
                return Err(Error::Numerical(format!(
                    "certificate: |y_{i}| = {} exceeds weight {}",
                    y[i].abs(),
                    self.w[i]
                )));
            }
            dual += y[i] * self.b[i];
        }
        for j in 0..self.d {
            if self.is_basic_x[j] {
                continue;
            }
            let c = self.reduced_cost_x(y, j);
            // Nonbasic columns sit at finite bounds; their reduced cost
            // contributes bound * c to the dual objective.
            let at = self.x[j];
            dual += at * c;
            let ok = if self.at_upper[j] { c <= tol } else { c >= -tol };
            if !ok {
                return Err(Error::Numerical(format!(
                    "certificate: nonbasic column {j} has improving reduced cost {c}"
                )));
            }
        }
        let gap = obj - dual;
        // Gap tolerance is relative to the objective at the origin, the
        // natural magnitude of both primal and dual values; an absolute
        // 1e-8 would be unattainable in f64 for data at 1e6 scale.
        let data_scale: f64 = (0..self.n).map(|i| self.w[i] * self.b[i].abs()).sum();
        if gap.abs() > CERT_TOL * (1.0 + obj.abs() + data_scale) {
            return Err(Error::Numerical(format!(
                "certificate: duality gap {gap} with objective {obj}"
            )));
        }
        Ok(())
    }
}

fn hard_rank(e: &Event) -> u8 {
    match e.kind {
        EventKind::HardX { .. } => 0,
        EventKind::BoundFlip => 0,
        EventKind::Soft { .. } => 1,
    }
}

#[derive(Debug)]
struct Step {
    t: f64,
    stop: Stop,
    crossed: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
enum Stop {
    /// A residual variable reaches zero and its row joins Z.
    Leave { row: usize },
    /// A basic x column reaches a bound and leaves the basis.
    BasicOut { fpos: usize, to_upper: bool },
    /// The entering x column reaches its opposite bound.
    Flip,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn objective_at(a: &DenseMatrix, b: &[f64], w: &[f64], x: &[f64]) -> f64 {
        (0..a.rows())
            .map(|i| {
                let r: f64 =
                    a.row(i).iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - b[i];
                w[i] * r.abs()
            })
            .sum()
    }

    /// Independent oracle for d = 1: min over x of sum w_i |a_i x - b_i| is
    /// attained at a weighted median of the ratios b_i / a_i with weights
    /// w_i |a_i|.
    fn weighted_median_oracle(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
        let mut pts: Vec<(f64, f64)> = a
            .iter()
            .zip(b)
            .zip(w)
            .filter(|((ai, _), _)| ai.abs() > 0.0)
            .map(|((ai, bi), wi)| (bi / ai, wi * ai.abs()))
            .collect();
        pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        for &(t, wt) in &pts {
            acc += wt;
            if acc >= total / 2.0 {
                return t;
            }
        }
        pts.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Independent exact oracle by enumeration: some optimum interpolates k
    /// rows and pins d - k coordinates at the box bounds (k = d when there is
    /// no box). Tries every combination and keeps the best objective.
    fn enumeration_oracle(
        a: &DenseMatrix,
        b: &[f64],
        w: &[f64],
        bound: Option<f64>,
    ) -> Option<f64> {
        let n = a.rows();
        let d = a.cols();
        let mut best: Option<f64> = None;
        let coord_subsets: Vec<Vec<usize>> = subsets(d);
        for pinned in &coord_subsets {
            if bound.is_none() && !pinned.is_empty() {
                continue;
            }
            let k = d - pinned.len();
            let free: Vec<usize> = (0..d).filter(|j| !pinned.contains(j)).collect();
            for signs in 0..(1usize << pinned.len()) {
                let mut x = vec![0.0; d];
                for (bit, &j) in pinned.iter().enumerate() {
                    let s = if (signs >> bit) & 1 == 1 { -1.0 } else { 1.0 };
                    x[j] = s * bound.unwrap_or(0.0);
                }
                for rows in k_subsets(n, k) {
                    if k > 0 {
                        let mut m = DenseMatrix::zeros(k, k);
                        let mut rhs = Vec::with_capacity(k);
                        for (p, &i) in rows.iter().enumerate() {
                            for (q, &j) in free.iter().enumerate() {
                                m.set(p, q, a.get(i, j));
                            }
                            let shift: f64 =
                                pinned.iter().map(|&j| a.get(i, j) * x[j]).sum();
                            rhs.push(b[i] - shift);
                        }
                        let Ok(lu) = crate::linalg::Lu::new(&m) else { continue };
                        let Ok(sol) = lu.solve(&rhs) else { continue };
                        for (q, &j) in free.iter().enumerate() {
                            x[j] = sol[q];
                        }
                    }
                    if let Some(bd) = bound {
                        if x.iter().any(|v| v.abs() > bd + 1e-9) {
                            continue;
                        }
                    }
                    let obj = objective_at(a, b, w, &x);
                    if best.is_none_or(|cur| obj < cur) {
                        best = Some(obj);
                    }
                }
            }
        }
        best
    }

    fn subsets(d: usize) -> Vec<Vec<usize>> {
        (0..(1usize << d))
            .map(|mask| (0..d).filter(|j| (mask >> j) & 1 == 1).collect())
            .collect()
    }

    fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    /// Coarse independent lower-bounding oracle for kappa_beta_lp: evaluates
    /// ||U z||_1 on a grid of z with z_j = 1. The grid value upper-bounds the
    /// true minimum, and on small instances the two agree closely.
    fn kappa_grid(u: &DenseMatrix, j: usize, steps: usize) -> f64 {
        let d = u.cols();
        let free: Vec<usize> = (0..d).filter(|&c| c != j).collect();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut z = vec![0.0; d];
            z[j] = 1.0;
            for (p, &c) in free.iter().enumerate() {
                z[c] = -1.0 + 2.0 * idx[p] as f64 / steps as f64;
            }
            let val: f64 = (0..u.rows())
                .map(|i| {
                    u.row(i).iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>().abs()
                })
                .sum();
            best = best.min(val);
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return best;
                }
                idx[p] += 1;
                if idx[p] <= steps {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    fn solve(a: DenseMatrix, b: Vec<f64>, w: Vec<f64>) -> L1Solution {
        solve_weighted_l1(&L1Problem::new(a, b, w)).unwrap()
    }

    fn random_instance(rng: &mut RngStream, n: usize, d: usize) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
        let a = DenseMatrix::from_fn(n, d, |_, _| rng.gaussian());
        let b: Vec<f64> = (0..n).map(|_| 3.0 * rng.gaussian()).collect();
        let w: Vec<f64> = (0..n).map(|_| 0.25 + rng.uniform_open()).collect();
        (a, b, w)
    }

    #[test]
    fn median_of_three_unit_weights() {
        let a = DenseMatrix::from_vec(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let sol = solve(a, vec![1.0, 2.0, 9.0], vec![1.0; 3]);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.objective - 8.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_weight_drags_median() {
        let a = DenseMatrix::from_vec(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let sol = solve(a, vec![1.0, 2.0, 9.0], vec![1.0, 1.0, 3.0]);
        assert!((sol.x[0] - 9.0).abs() < 1e-12);
        assert!((sol.objective - 15.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_system_reaches_zero() {
        let mut rng = RngStream::new(11, 0);
        let a = DenseMatrix::from_fn(20, 3, |_, _| rng.gaussian());
        let xs = [1.5, -2.0, 0.25];
        let b: Vec<f64> = (0..20)
            .map(|i| a.row(i).iter().zip(xs.iter()).map(|(p, q)| p * q).sum())
            .collect();
        let sol = solve(a, b, vec![1.0; 20]);
        assert!(sol.objective < 1e-9);
        for (got, want) in sol.x.iter().zip(xs.iter()) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_weighted_median_on_many_random_lines() {
        let mut rng = RngStream::new(2024, 7);
        for trial in 0..1000 {
            let n = 3 + (trial % 38);
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            let mut w = Vec::with_capacity(n);
            for _ in 0..n {
                let mut ai = rng.gaussian();
                if ai.abs() < 1e-3 {
                    ai = 1e-3;
                }
                a.push(ai);
                b.push(2.0 * rng.gaussian());
                w.push(0.1 + rng.uniform_open());
            }
            let am = DenseMatrix::from_vec(n, 1, a.clone()).unwrap();
            let sol = solve(am, b.clone(), w.clone());
            let med = weighted_median_oracle(&a, &b, &w);
            let oracle_obj: f64 = a
                .iter()
                .zip(&b)
                .zip(&w)
                .map(|((ai, bi), wi)| wi * (ai * med - bi).abs())
                .sum();
            assert!(
                sol.objective <= oracle_obj + 1e-9 * (1.0 + oracle_obj),
                "trial {trial}: solver {} worse than median oracle {}",
                sol.objective,
                oracle_obj
            );
            assert!(
                sol.objective >= oracle_obj - 1e-9 * (1.0 + oracle_obj),
                "trial {trial}: solver {} better than exact oracle {}",
                sol.objective,
                oracle_obj
            );
        }
    }

    #[test]
    fn matches_enumeration_on_random_instances() {
        let mut rng = RngStream::new(5150, 0);
        for trial in 0..200 {
            let n = 4 + (trial % 6);
            let d = 2 + (trial % 2);
            let (a, b, w) = random_instance(&mut rng, n, d);
            let want = enumeration_oracle(&a, &b, &w, None).unwrap();
            let sol = solve(a, b, w);
            assert!(
                (sol.objective - want).abs() <= 1e-8 * (1.0 + want),
                "trial {trial}: solver {} vs enumeration {}",
                sol.objective,
                want
            );
        }
    }

    #[test]
    fn matches_enumeration_with_box_and_fixed() {
        let mut rng = RngStream::new(99, 3);
        for trial in 0..150 {
            let n = 4 + (trial % 5);
            let d = 2 + (trial % 2);
            let (a, b, w) = random_instance(&mut rng, n, d);
            let bound = 0.5 + rng.uniform_open();
            let want = enumeration_oracle(&a, &b, &w, Some(bound)).unwrap();
            let sol = solve_weighted_l1(
                &L1Problem::new(a, b, w).with_box(bound),
            )
            .unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!(
                (sol.objective - want).abs() <= 1e-8 * (1.0 + want),
                "trial {trial}: solver {} vs enumeration {}",
                sol.objective,
                want
            );
            for v in &sol.x {
                assert!(v.abs() <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn fixed_coordinate_is_respected() {
        let mut rng = RngStream::new(7, 7);
        let (a, b, w) = random_instance(&mut rng, 12, 3);
        let sol = solve_weighted_l1(
            &L1Problem::new(a.clone(), b.clone(), w.clone()).with_fixed(vec![(1, 2.5)]),
        )
        .unwrap();
        assert!((sol.x[1] - 2.5).abs() < 1e-12);
        // Exhaustive check against enumeration on the reduced problem.
        let mut a_red = DenseMatrix::zeros(12, 2);
        let mut b_red = Vec::new();
        for i in 0..12 {
            a_red.set(i, 0, a.get(i, 0));
            a_red.set(i, 1, a.get(i, 2));
            b_red.push(b[i] - a.get(i, 1) * 2.5);
        }
        let want = enumeration_oracle(&a_red, &b_red, &w, None).unwrap();
        assert!((sol.objective - want).abs() <= 1e-8 * (1.0 + want));
    }

    #[test]
    fn fixed_value_outside_box_is_infeasible() {
        let a = DenseMatrix::identity(3);
        let prob = L1Problem::new(a, vec![0.0; 3], vec![1.0; 3])
            .with_fixed(vec![(0, 2.0)])
            .with_box(1.0);
        let sol = solve_weighted_l1(&prob).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.objective.is_infinite());
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let a = DenseMatrix::from_vec(4, 1, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let sol = solve(a, vec![1.0, 2.0, 3.0, 1000.0], vec![1.0, 1.0, 1.0, 0.0]);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn row_permutation_invariance() {
        let mut rng = RngStream::new(31, 4);
        let (a, b, w) = random_instance(&mut rng, 15, 3);
        let base = solve(a.clone(), b.clone(), w.clone());
        let perm: Vec<usize> = vec![14, 3, 7, 0, 11, 1, 9, 5, 13, 2, 8, 6, 12, 4, 10];
        let ap = a.select_rows(&perm).unwrap();
        let bp: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        let wp: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
        let permuted = solve(ap, bp, wp);
        assert!((base.objective - permuted.objective).abs() <= 1e-9 * (1.0 + base.objective));
    }

    #[test]
    fn weight_scaling_scales_objective() {
        let mut rng = RngStream::new(77, 1);
        let (a, b, w) = random_instance(&mut rng, 10, 2);
        let base = solve(a.clone(), b.clone(), w.clone());
        let w5: Vec<f64> = w.iter().map(|x| 5.0 * x).collect();
        let scaled = solve(a, b, w5);
        assert!((scaled.objective - 5.0 * base.objective).abs() <= 1e-8 * (1.0 + base.objective));
    }

    #[test]
    fn rank_deficient_matrix_reports_singular_column() {
        let mut a = DenseMatrix::zeros(6, 2);
        for i in 0..6 {
            a.set(i, 0, (i + 1) as f64);
            a.set(i, 1, 2.0 * (i + 1) as f64);
        }
        let err = solve_weighted_l1(&L1Problem::new(a, vec![1.0; 6], vec![1.0; 6]))
            .unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn kappa_identity_columns() {
        let u = DenseMatrix::identity(3);
        for j in 0..3 {
            assert!((kappa_beta_lp(&u, j).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_diagonal_scales() {
        let u = DenseMatrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((kappa_beta_lp(&u, 0).unwrap() - 2.0).abs() < 1e-12);
        assert!((kappa_beta_lp(&u, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_matches_fine_grid() {
        let mut rng = RngStream::new(404, 2);
        for trial in 0..25 {
            let u = DenseMatrix::from_fn(8, 2, |_, _| rng.gaussian());
            for j in 0..2 {
                let lp = kappa_beta_lp(&u, j).unwrap();
                let grid = kappa_grid(&u, j, 2000);
                assert!(
                    lp <= grid + 1e-9 * (1.0 + grid),
                    "trial {trial} col {j}: lp {lp} above grid {grid}"
                );
                assert!(
                    grid - lp <= 1e-2 * (1.0 + grid),
                    "trial {trial} col {j}: lp {lp} far below grid {grid}"
                );
            }
        }
    }

    #[test]
    fn larger_random_instances_certify() {
        let mut rng = RngStream::new(860, 9);
        for trial in 0..10 {
            let n = 200 + 50 * trial;
            let d = 4 + (trial % 3);
            let (a, b, w) = random_instance(&mut rng, n, d);
            let sol = solve(a.clone(), b.clone(), w.clone());
            // Coordinate-descent sanity: no single-coordinate move improves.
            for j in 0..d {
                for delta in [-1e-4, 1e-4] {
                    let mut xt = sol.x.clone();
                    xt[j] += delta;
                    let perturbed = objective_at(&a, &b, &w, &xt);
                    assert!(perturbed >= sol.objective - 1e-9 * (1.0 + sol.objective));
                }
            }
        }
    }
}
