//! Two-phase bounded-variable revised simplex.
//!
//! Every row `a·x {<=,>=,=} b` gets a logical column `s` with
//! `a·x + s = b`; the logical's bounds encode the relation. Rows that the
//! all-at-bound starting point violates get an artificial column, and phase
//! one drives the artificials to zero. Entering candidates are scanned in
//! column order and ties in the ratio test go to the lowest column index, so
//! the pivot sequence depends only on the problem's variable and row order.

use alloc::vec;
use alloc::vec::Vec;

use super::lu::BasisFactor;
use super::{FEASIBILITY_TOL, LpError, LpProblem, LpSolution, LpStatus, OPTIMALITY_TOL, Relation};

const PIVOT_TOL: f64 = 1e-9;
const MIN_PIVOT: f64 = 1e-11;
const DUAL_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-11;
const HARRIS_TOL: f64 = 1e-9;
/// In Bland mode, ratio ties only count when the pivot is at least this
/// fraction of the largest candidate pivot.
const BLAND_PIVOT_RATIO: f64 = 0.1;

/// Entering-variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Bland's rule throughout: lowest-index improving column enters, lowest
    /// index leaves among ratio ties.
    Bland,
    /// Largest reduced cost (lowest index on ties) while pivots make
    /// progress; after `stall` consecutive degenerate pivots switch to Bland
    /// until the objective moves again.
    DantzigBland { stall: usize },
}

impl PivotRule {
    /// Stable identifier recorded in run manifests.
    pub fn id(&self) -> &'static str {
        match self {
            PivotRule::Bland => "bland-lowest-index",
            PivotRule::DantzigBland { .. } => "dantzig-with-bland-fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub rule: PivotRule,
    pub max_iterations: usize,
    pub refactor_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::DantzigBland { stall: 200 },
            max_iterations: 5_000_000,
            refactor_every: 64,
        }
    }
}

/// Solves `problem` with the default options.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
    let mut s = Simplex::new(problem, *options);
    s.run(problem)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum At {
    Lower,
    Upper,
    Zero,
}

struct Simplex {
    opts: SolverOptions,
    m: usize,
    n: usize,
    // Structural columns in CSC form.
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    // Artificial columns: row and sign, indexed from n + m.
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    at: Vec<At>,
    basic_pos: Vec<usize>,
    basis: Vec<usize>,
    factor: BasisFactor,
    steps: usize,
    degenerate_run: usize,
    // Scratch buffers.
    work_row: Vec<f64>,
    work_pos: Vec<f64>,
    alpha: Vec<f64>,
    duals: Vec<f64>,
}

impl Simplex {
    fn new(problem: &LpProblem, opts: SolverOptions) -> Self {
        let m = problem.num_constraints();
        let n = problem.num_vars();
        let mut counts = vec![0usize; n + 1];
        for c in problem.constraints() {
            for &(v, _) in &c.terms {
                counts[v.0 + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, c) in problem.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                let k = fill[v.0];
                col_row[k] = i;
                col_val[k] = a;
                fill[v.0] += 1;
            }
        }
        let mut lower = Vec::with_capacity(n + 2 * m);
        let mut upper = Vec::with_capacity(n + 2 * m);
        for v in problem.variables() {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for c in problem.constraints() {
            let (l, u) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        Simplex {
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row: Vec::new(),
            art_sign: Vec::new(),
            rhs: problem.constraints().iter().map(|c| c.rhs).collect(),
            lower,
            upper,
            cost: Vec::new(),
            x: Vec::new(),
            at: Vec::new(),
            basic_pos: Vec::new(),
            basis: Vec::new(),
            factor: BasisFactor::default(),
            steps: 0,
            degenerate_run: 0,
            work_row: vec![0.0; m],
            work_pos: vec![0.0; m],
            alpha: vec![0.0; m],
            duals: vec![0.0; m],
        }
    }

    fn num_cols(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let a = j - self.n - self.m;
            f(self.art_row[a], self.art_sign[a]);
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_column(j, |r, v| out.push((r, v)));
        out
    }

    fn dot_duals(&self, j: usize) -> f64 {
        let mut s = 0.0;
        self.for_column(j, |r, v| s += self.duals[r] * v);
        s
    }

    fn breakdown(&self, reason: &'static str) -> LpError {
        LpError::NumericBreakdown {
            step: self.steps,
            reason,
        }
    }

    fn run(&mut self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        self.initialize();
        if !self.art_row.is_empty() {
            self.cost = vec![0.0; self.num_cols()];
            for a in 0..self.art_row.len() {
                self.cost[self.n + self.m + a] = 1.0;
            }
            let status = self.iterate()?;
            debug_assert_eq!(status, LpStatus::Optimal);
            let infeasibility: f64 = (0..self.art_row.len())
                .map(|a| self.x[self.n + self.m + a])
                .sum();
            if infeasibility > PHASE_ONE_TOL * (1.0 + self.rhs_scale()) {
                return Ok(LpSolution::infeasible(self.steps));
            }
            self.remove_artificials()?;
        }
        self.cost = vec![0.0; self.num_cols()];
        for (j, v) in problem.variables().iter().enumerate() {
            self.cost[j] = v.cost;
        }
        if self.iterate()? == LpStatus::Unbounded {
            return Ok(LpSolution::unbounded(self.steps));
        }
        self.refactor()?;
        self.finish(problem)
    }

    fn rhs_scale(&self) -> f64 {
        self.rhs.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    fn initialize(&mut self) {
        let (n, m) = (self.n, self.m);
        self.x = vec![0.0; n + m];
        self.at = vec![At::Lower; n + m];
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            let (x, at) = if l.is_finite() {
                (l, At::Lower)
            } else if u.is_finite() {
                (u, At::Upper)
            } else {
                (0.0, At::Zero)
            };
            self.x[j] = x;
            self.at[j] = at;
        }
        let mut resid = self.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    resid[self.col_row[k]] -= self.col_val[k] * xj;
                }
            }
        }
        self.basis = Vec::with_capacity(m);
        for (i, &r) in resid.iter().enumerate() {
            let s = n + i;
            let (l, u) = (self.lower[s], self.upper[s]);
            if r >= l && r <= u {
                self.x[s] = r;
                self.basis.push(s);
            } else {
                let (bound, at) = if r < l { (l, At::Lower) } else { (u, At::Upper) };
                self.x[s] = bound;
                self.at[s] = at;
                let diff = r - bound;
                self.art_row.push(i);
                self.art_sign.push(if diff > 0.0 { 1.0 } else { -1.0 });
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.x.push(diff.abs());
                self.at.push(At::Lower);
                self.basis.push(self.n + self.m + self.art_row.len() - 1);
            }
        }
        self.basic_pos = vec![usize::MAX; self.num_cols()];
        for (p, &j) in self.basis.iter().enumerate() {
            self.basic_pos[j] = p;
        }
        let cols: Vec<_> = self.basis.iter().map(|&j| self.column(j)).collect();
        self.factor = BasisFactor::new(m, &cols).expect("initial basis is diagonal");
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let cols: Vec<_> = self.basis.iter().map(|&j| self.column(j)).collect();
        self.factor = BasisFactor::new(self.m, &cols)
            .map_err(|_| self.breakdown("basis became singular on refactorization"))?;
        // Recompute basic values from the nonbasic ones.
        let mut r = self.rhs.clone();
        for j in 0..self.num_cols() {
            if self.basic_pos[j] == usize::MAX && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_column(j, |row, v| r[row] -= v * xj);
            }
        }
        let mut xb = vec![0.0; self.m];
        self.factor.ftran(&mut r, &mut xb);
        for (p, &j) in self.basis.iter().enumerate() {
            if !xb[p].is_finite() {
                return Err(self.breakdown("non-finite basic value"));
            }
            self.x[j] = xb[p];
        }
        Ok(())
    }

    fn compute_duals(&mut self) {
        for (p, &j) in self.basis.iter().enumerate() {
            self.work_pos[p] = self.cost[j];
        }
        let mut c = core::mem::take(&mut self.work_pos);
        let mut y = core::mem::take(&mut self.duals);
        self.factor.btran(&mut c, &mut y);
        self.work_pos = c;
        self.duals = y;
    }

    fn use_bland(&self) -> bool {
        match self.opts.rule {
            PivotRule::Bland => true,
            PivotRule::DantzigBland { stall } => self.degenerate_run >= stall,
        }
    }

    /// Entering column and its direction (+1 increase, -1 decrease).
    fn price(&self) -> Option<(usize, f64)> {
        let bland = self.use_bland();
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.num_cols() {
            if self.basic_pos[j] != usize::MAX || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.cost[j] - self.dot_duals(j);
            let dir = match self.at[j] {
                At::Lower if d < -DUAL_TOL => 1.0,
                At::Upper if d > DUAL_TOL => -1.0,
                At::Zero if d.abs() > DUAL_TOL => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|b| d.abs() > b.2) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|b| (b.0, b.1))
    }

    fn iterate(&mut self) -> Result<LpStatus, LpError> {
        self.degenerate_run = 0;
        loop {
            if self.steps >= self.opts.max_iterations {
                return Err(LpError::PivotLimit(self.opts.max_iterations));
            }
            if self.factor.updates() >= self.opts.refactor_every {
                self.refactor()?;
            }
            self.compute_duals();
            let Some((q, dir)) = self.price() else {
                return Ok(LpStatus::Optimal);
            };
            self.work_row.iter_mut().for_each(|v| *v = 0.0);
            let mut b = core::mem::take(&mut self.work_row);
            self.for_column(q, |r, v| b[r] = v);
            let mut alpha = core::mem::take(&mut self.alpha);
            self.factor.ftran(&mut b, &mut alpha);
            self.work_row = b;
            self.alpha = alpha;

            let (theta, leave) = self.ratio_test(q, dir);
            if theta == f64::INFINITY {
                return Ok(LpStatus::Unbounded);
            }
            self.steps += 1;
            if theta <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            let step = dir * theta;
            if step != 0.0 {
                self.x[q] += step;
                for p in 0..self.m {
                    let a = self.alpha[p];
                    if a != 0.0 {
                        self.x[self.basis[p]] -= step * a;
                    }
                }
            }
            match leave {
                None => {
                    // Bound flip of the entering column.
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.at[q] = At::Upper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.at[q] = At::Lower;
                    }
                }
                Some((p, to_upper)) => {
                    if self.alpha[p].abs() < MIN_PIVOT {
                        return Err(self.breakdown("pivot element below tolerance"));
                    }
                    let l = self.basis[p];
                    if to_upper {
                        self.x[l] = self.upper[l];
                        self.at[l] = At::Upper;
                    } else {
                        self.x[l] = self.lower[l];
                        self.at[l] = At::Lower;
                    }
                    self.basic_pos[l] = usize::MAX;
                    self.basic_pos[q] = p;
                    self.basis[p] = q;
                    self.factor.update(p, &self.alpha);
                }
            }
        }
    }

    /// Harris two-pass ratio test. Returns the step length and, unless the
    /// entering column flips bounds, the leaving position and whether it
    /// leaves at its upper bound.
    fn ratio_test(&self, q: usize, dir: f64) -> (f64, Option<(usize, bool)>) {
        let mut relaxed = f64::INFINITY;
        for p in 0..self.m {
            if let Some((t, _)) = self.limit(p, dir, HARRIS_TOL) {
                relaxed = relaxed.min(t);
            }
        }
        let span = self.upper[q] - self.lower[q];
        if span <= relaxed {
            return (span, None);
        }
        if relaxed == f64::INFINITY {
            return (relaxed, None);
        }
        let mut biggest: f64 = 0.0;
        for p in 0..self.m {
            if matches!(self.limit(p, dir, 0.0), Some((t, _)) if t <= relaxed) {
                biggest = biggest.max(self.alpha[p].abs());
            }
        }
        let bland = self.use_bland();
        let mut pick: Option<(usize, f64, bool)> = None;
        for p in 0..self.m {
            let Some((t, up)) = self.limit(p, dir, 0.0) else {
                continue;
            };
            let a = self.alpha[p].abs();
            if t > relaxed || (bland && a < BLAND_PIVOT_RATIO * biggest) {
                continue;
            }
            let better = match pick {
                None => true,
                Some((bp, _, _)) => {
                    let b = self.alpha[bp].abs();
                    if bland {
                        self.basis[p] < self.basis[bp]
                    } else {
                        a > b || (a == b && self.basis[p] < self.basis[bp])
                    }
                }
            };
            if better {
                pick = Some((p, t, up));
            }
        }
        let (p, t, up) = pick.expect("the largest candidate pivot always qualifies");
        (t, Some((p, up)))
    }

    /// Step at which basic position `p` moves `slack` past a bound, if it
    /// limits the step at all.
    fn limit(&self, p: usize, dir: f64, slack: f64) -> Option<(f64, bool)> {
        let a = self.alpha[p];
        if a.abs() <= PIVOT_TOL {
            return None;
        }
        let j = self.basis[p];
        let rate = -dir * a;
        if rate < 0.0 && self.lower[j].is_finite() {
            Some((((self.x[j] - self.lower[j] + slack) / -rate).max(0.0), false))
        } else if rate > 0.0 && self.upper[j].is_finite() {
            Some((((self.upper[j] - self.x[j] + slack) / rate).max(0.0), true))
        } else {
            None
        }
    }

    /// Pivots zero-valued basic artificials out where possible and fixes
    /// all artificials at zero.
    fn remove_artificials(&mut self) -> Result<(), LpError> {
        let first_art = self.n + self.m;
        for p in 0..self.m {
            if self.basis[p] < first_art {
                continue;
            }
            // Row p of B^{-1}.
            self.work_pos.iter_mut().for_each(|v| *v = 0.0);
            self.work_pos[p] = 1.0;
            let mut c = core::mem::take(&mut self.work_pos);
            let mut y = core::mem::take(&mut self.duals);
            self.factor.btran(&mut c, &mut y);
            self.work_pos = c;
            self.duals = y;
            let entering = (0..first_art).find(|&j| {
                self.basic_pos[j] == usize::MAX && self.dot_duals(j).abs() > 1e-7
            });
            if let Some(q) = entering {
                self.work_row.iter_mut().for_each(|v| *v = 0.0);
                let mut b = core::mem::take(&mut self.work_row);
                self.for_column(q, |r, v| b[r] = v);
                let mut alpha = core::mem::take(&mut self.alpha);
                self.factor.ftran(&mut b, &mut alpha);
                self.work_row = b;
                self.alpha = alpha;
                if self.alpha[p].abs() < MIN_PIVOT {
                    return Err(self.breakdown("cannot pivot out artificial"));
                }
                let l = self.basis[p];
                self.x[l] = 0.0;
                self.at[l] = At::Lower;
                self.basic_pos[l] = usize::MAX;
                self.basic_pos[q] = p;
                self.basis[p] = q;
                self.factor.update(p, &self.alpha);
                self.steps += 1;
            }
        }
        for j in first_art..self.num_cols() {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if self.basic_pos[j] == usize::MAX {
                self.x[j] = 0.0;
            }
        }
        self.refactor()
    }

    fn finish(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        let mut values: Vec<f64> = self.x[..self.n].to_vec();
        for (j, v) in values.iter_mut().enumerate() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_finite() && (*v - l).abs() <= SNAP_TOL * (1.0 + l.abs()) {
                *v = l;
            } else if u.is_finite() && (*v - u).abs() <= SNAP_TOL * (1.0 + u.abs()) {
                *v = u;
            }
            *v = v.clamp(l, u);
            if *v == 0.0 {
                *v = 0.0; // normalizes -0.0
            }
        }
        let violation = problem.max_violation(&values);
        if !(violation <= FEASIBILITY_TOL) {
            return Err(self.breakdown("final point violates constraints"));
        }
        debug_assert!(values.iter().all(|v| v.is_finite()));
        let _ = OPTIMALITY_TOL;
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: problem.objective_value(&values),
            values,
            iterations: self.steps,
        })
    }
}
