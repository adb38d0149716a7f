//! Bounded-variable primal simplex.
//!
//! Each row `a_i x (sense) b_i` is written as `a_i x - s_i = 0` with a logical
//! variable `s_i` whose bounds encode the sense. All variables (structural and
//! logical) are boxed, possibly with infinite bounds.
//!
//! Each solve first tries the dual simplex, which applies whenever the
//! starting basis is dual feasible (possibly after flipping boxed variables to
//! their other bound), as after added rows or tightened bounds. Whatever is left
//! goes to the primal method.
//!
//! Phase 1 is a composite method: infeasible basic variables get costs of -1 /
//! +1 and the ratio test stops them at the bound they were approaching, so the
//! sum of infeasibilities never increases. Phase 2 uses Dantzig pricing with a
//! Harris two-pass ratio test; after `3 * rows` consecutive degenerate pivots
//! the engine switches to Bland's rule until progress resumes.
//!
//! The basis is factorized around its logical columns: only the square block
//! `A[rows whose logical is nonbasic, basic structurals]` goes through a dense
//! LU, the logical rows follow by a matrix-vector product. Later pivots are
//! applied in product form and the basis is refactorized every
//! [`REFACTOR_INTERVAL`] pivots.

use crate::error::{Error, Result};
use crate::model::{canonicalize, Model, Sense};
use crate::tolerances::Tolerances;
use std::io::Write;

pub const REFACTOR_INTERVAL: usize = 100;

/// Consecutive degenerate pivots before the basic bounds are perturbed.
const PERTURB_AFTER: usize = 20;
const PERTURB_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic at zero with both bounds infinite.
    Free,
}

/// Status of every structural column and every row's logical variable. Rows
/// appended after the basis was taken start with a basic logical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub cols: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    /// Structural values.
    pub x: Vec<f64>,
    /// Row activities `a_i x`.
    pub row_activity: Vec<f64>,
    /// Row duals; minimization convention (`<=` rows have `y <= 0`).
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Row multipliers proving infeasibility (see [`verify_farkas`]).
    pub farkas: Option<Vec<f64>>,
    /// Improving direction over the structurals when unbounded.
    pub ray: Option<Vec<f64>>,
}

/// One line of the optional iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    /// 1 and 2 for the primal phases, 3 for dual simplex pivots.
    pub phase: u8,
    pub objective: f64,
    pub infeasibility: f64,
}

/// A row to append: terms, sense, right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// New bounds for one structural variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChange {
    pub var: usize,
    pub lower: f64,
    pub upper: f64,
}

fn logical_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

fn nonbasic_status(lb: f64, ub: f64, near: f64) -> VarStatus {
    match (lb.is_finite(), ub.is_finite()) {
        (true, true) => {
            if (near - ub).abs() < (near - lb).abs() {
                VarStatus::AtUpper
            } else {
                VarStatus::AtLower
            }
        }
        (true, false) => VarStatus::AtLower,
        (false, true) => VarStatus::AtUpper,
        (false, false) => VarStatus::Free,
    }
}

struct Eta {
    p: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Default)]
struct Factor {
    k: usize,
    /// Kernel row t is model row `krows[t]`.
    krows: Vec<usize>,
    /// Kernel column s is basis position `kpos[s]` holding structural `kvars[s]`.
    kpos: Vec<usize>,
    kvars: Vec<usize>,
    /// Basis position of the logical of each row, if it was basic at factor time.
    logical_pos: Vec<Option<usize>>,
    is_krow: Vec<bool>,
    lu: KernelLu,
    etas: Vec<Eta>,
}

/// A persistent simplex engine over one LP. Rows can be appended and bounds
/// changed between solves; each solve starts from the current basis.
pub struct LpEngine {
    tol: Tolerances,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    factor: Factor,
    pivots_since_refactor: usize,
    /// Per-solve cap; `None` means `50 * (rows + cols)`.
    pub iter_limit: Option<usize>,
    log: Option<Vec<IterRecord>>,
    total_iterations: usize,
}

impl LpEngine {
    /// Builds an engine from a continuous model; fails with
    /// [`Error::NotRelaxed`] if any variable is marked integral.
    pub fn new(model: &Model, tol: Tolerances) -> Result<Self> {
        if model.has_integers() {
            return Err(Error::NotRelaxed);
        }
        let n = model.num_vars();
        let mut eng = LpEngine {
            tol,
            n,
            cols: vec![Vec::new(); n],
            cost: model.objective().to_vec(),
            lb: model.vars().iter().map(|v| v.lower).collect(),
            ub: model.vars().iter().map(|v| v.upper).collect(),
            x: Vec::with_capacity(n),
            status: Vec::with_capacity(n),
            head: Vec::new(),
            factor: Factor::default(),
            pivots_since_refactor: 0,
            iter_limit: None,
            log: None,
            total_iterations: 0,
        };
        for j in 0..n {
            let st = nonbasic_status(eng.lb[j], eng.ub[j], 0.0);
            eng.status.push(st);
            eng.x.push(eng.bound_value(j, st));
        }
        for c in model.constraints() {
            eng.push_row(&c.terms, c.sense, c.rhs);
        }
        Ok(eng)
    }

    pub fn num_rows(&self) -> usize {
        self.head.len()
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    /// Starts recording one [`IterRecord`] per iteration.
    pub fn enable_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn log(&self) -> &[IterRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Writes the iteration log as CSV (`iteration,phase,objective,infeasibility`).
    pub fn write_log_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "phase", "objective", "infeasibility"])?;
        for r in self.log() {
            w.write_record([
                r.iteration.to_string(),
                r.phase.to_string(),
                r.objective.to_string(),
                r.infeasibility.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn bound_value(&self, j: usize, st: VarStatus) -> f64 {
        match st {
            VarStatus::AtLower => self.lb[j],
            VarStatus::AtUpper => self.ub[j],
            VarStatus::Free => 0.0,
            VarStatus::Basic => self.x[j],
        }
    }

    fn push_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let i = self.head.len();
        let terms = canonicalize(terms);
        let mut act = 0.0;
        for &(j, a) in &terms {
            self.cols[j].push((i, a));
            act += a * self.x[j];
        }
        let (lo, hi) = logical_bounds(sense, rhs);
        self.lb.push(lo);
        self.ub.push(hi);
        self.x.push(act);
        self.status.push(VarStatus::Basic);
        self.head.push(self.n + i);
    }

    /// Appends a row whose logical enters the basis.
    pub fn add_row(&mut self, row: &RowSpec) -> Result<()> {
        if let Some(&(j, _)) = row.terms.iter().find(|&&(j, _)| j >= self.n) {
            return Err(Error::UnknownVar(j));
        }
        self.push_row(&row.terms, row.sense, row.rhs);
        self.factor.k = usize::MAX; // force refactorization
        Ok(())
    }

    /// Changes the bounds of a structural variable.
    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<()> {
        if var >= self.n {
            return Err(Error::UnknownVar(var));
        }
        if !(lower <= upper) {
            return Err(Error::InvertedBounds {
                name: format!("#{var}"),
                lower,
                upper,
            });
        }
        self.lb[var] = lower;
        self.ub[var] = upper;
        if self.status[var] != VarStatus::Basic {
            let st = nonbasic_status(lower, upper, self.x[var]);
            self.status[var] = st;
            self.x[var] = self.bound_value(var, st);
        }
        self.factor.k = usize::MAX;
        Ok(())
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lb[var], self.ub[var])
    }

    pub fn basis(&self) -> Basis {
        Basis {
            cols: self.status[..self.n].to_vec(),
            rows: self.status[self.n..].to_vec(),
        }
    }

    /// Installs a basis. Missing rows get basic logicals; an inconsistent basic
    /// count is repaired with logicals.
    pub fn set_basis(&mut self, basis: &Basis) -> Result<()> {
        if basis.cols.len() != self.n || basis.rows.len() > self.head.len() {
            return Err(Error::Internal(format!(
                "basis shape {}x{} does not fit engine {}x{}",
                basis.rows.len(),
                basis.cols.len(),
                self.head.len(),
                self.n
            )));
        }
        let m = self.head.len();
        for j in 0..self.n + m {
            let want = if j < self.n {
                basis.cols[j]
            } else {
                basis.rows.get(j - self.n).copied().unwrap_or(VarStatus::Basic)
            };
            let st = match want {
                VarStatus::Basic => VarStatus::Basic,
                VarStatus::AtLower if self.lb[j].is_finite() => VarStatus::AtLower,
                VarStatus::AtUpper if self.ub[j].is_finite() => VarStatus::AtUpper,
                _ => nonbasic_status(self.lb[j], self.ub[j], 0.0),
            };
            self.status[j] = st;
            if st != VarStatus::Basic {
                self.x[j] = self.bound_value(j, st);
            }
        }
        let mut basics: Vec<usize> =
            (0..self.n + m).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        if basics.len() > m {
            // demote surplus structurals, last first
            let mut surplus = basics.len() - m;
            for j in (0..self.n).rev() {
                if surplus == 0 {
                    break;
                }
                if self.status[j] == VarStatus::Basic {
                    let st = nonbasic_status(self.lb[j], self.ub[j], self.x[j]);
                    self.status[j] = st;
                    self.x[j] = self.bound_value(j, st);
                    surplus -= 1;
                }
            }
        } else if basics.len() < m {
            let mut missing = m - basics.len();
            for i in 0..m {
                if missing == 0 {
                    break;
                }
                let j = self.n + i;
                if self.status[j] != VarStatus::Basic {
                    self.status[j] = VarStatus::Basic;
                    missing -= 1;
                }
            }
        }
        basics = (0..self.n + m).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        self.head = basics;
        self.factor.k = usize::MAX;
        Ok(())
    }

    /// Dense column `j` of `[A, -I]` added into `out` (scaled by `scale`).
    fn scatter_col(&self, j: usize, scale: f64, out: &mut [f64]) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] += scale * a;
            }
        } else {
            out[j - self.n] -= scale;
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            -y[j - self.n]
        }
    }

    // ---- factorization -------------------------------------------------

    fn refactor(&mut self) {
        let m = self.head.len();
        for _attempt in 0..m + 2 {
            let mut logical_pos = vec![None; m];
            let mut kpos = Vec::new();
            let mut kvars = Vec::new();
            for (p, &j) in self.head.iter().enumerate() {
                if j >= self.n {
                    logical_pos[j - self.n] = Some(p);
                } else {
                    kpos.push(p);
                    kvars.push(j);
                }
            }
            let krows: Vec<usize> = (0..m).filter(|&i| logical_pos[i].is_none()).collect();
            let k = krows.len();
            debug_assert_eq!(k, kvars.len());
            let mut is_krow = vec![false; m];
            let mut krow_local = vec![usize::MAX; m];
            for (t, &i) in krows.iter().enumerate() {
                is_krow[i] = true;
                krow_local[i] = t;
            }
            let mut a = vec![0.0; k * k];
            let mut colmax = vec![0.0f64; k];
            for (s, &j) in kvars.iter().enumerate() {
                for &(i, v) in &self.cols[j] {
                    if is_krow[i] {
                        a[krow_local[i] * k + s] = v;
                        colmax[s] = colmax[s].max(v.abs());
                    }
                }
            }
            let (ord, deficient) = lu_factor(&mut a, k, &colmax, self.tol.pivot);
            if deficient.is_empty() {
                self.factor = Factor {
                    k,
                    krows,
                    kpos,
                    kvars,
                    logical_pos,
                    is_krow,
                    lu: KernelLu::from_dense(&a, k, ord),
                    etas: Vec::new(),
                };
                self.pivots_since_refactor = 0;
                return;
            }
            // swap dependent structurals for logicals of unpivoted rows
            let mut pivoted = vec![false; k];
            for &t in &ord {
                pivoted[t] = true;
            }
            let free_rows: Vec<usize> = (0..k).filter(|&t| !pivoted[t]).collect();
            for (s, t) in deficient.into_iter().zip(free_rows) {
                let p = kpos[s];
                let j = self.head[p];
                let st = nonbasic_status(self.lb[j], self.ub[j], self.x[j]);
                self.status[j] = st;
                self.x[j] = self.bound_value(j, st);
                let logical = self.n + krows[t];
                self.head[p] = logical;
                self.status[logical] = VarStatus::Basic;
            }
        }
        panic!("basis repair did not converge");
    }

    /// Solves `B u = a` where `a` is indexed by rows; result by basis position.
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let m = self.head.len();
        let mut u = vec![0.0; m];
        let mut b: Vec<f64> = f.krows.iter().map(|&i| a[i]).collect();
        f.lu.solve(&mut b);
        let mut acc = vec![0.0; m];
        for (s, &j) in f.kvars.iter().enumerate() {
            u[f.kpos[s]] = b[s];
            if b[s] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    acc[i] += v * b[s];
                }
            }
        }
        for i in 0..m {
            if let Some(p) = f.logical_pos[i] {
                u[p] = acc[i] - a[i];
            }
        }
        for eta in &f.etas {
            let up = u[eta.p] / eta.pivot;
            if up != 0.0 {
                for &(i, v) in &eta.entries {
                    u[i] -= v * up;
                }
            }
            u[eta.p] = up;
        }
        u
    }

    /// Solves `B^T y = c` where `c` is indexed by basis position; result by row.
    fn btran(&self, c: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let m = self.head.len();
        let mut c = c.to_vec();
        for eta in f.etas.iter().rev() {
            let mut s = c[eta.p];
            for &(i, v) in &eta.entries {
                s -= v * c[i];
            }
            c[eta.p] = s / eta.pivot;
        }
        let mut y = vec![0.0; m];
        for i in 0..m {
            if let Some(p) = f.logical_pos[i] {
                y[i] = -c[p];
            }
        }
        let mut rhs = vec![0.0; f.k];
        for (s, &j) in f.kvars.iter().enumerate() {
            let mut v = c[f.kpos[s]];
            for &(i, a) in &self.cols[j] {
                if !f.is_krow[i] {
                    v -= a * y[i];
                }
            }
            rhs[s] = v;
        }
        f.lu.solve_transposed(&mut rhs);
        for (t, &i) in f.krows.iter().enumerate() {
            y[i] = rhs[t];
        }
        y
    }

    /// Recomputes basic values from the nonbasic ones.
    fn recompute_basics(&mut self) {
        let m = self.head.len();
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                self.scatter_col(j, -self.x[j], &mut rhs);
            }
        }
        let xb = self.ftran(&rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn infeasibility_of(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lb[j] - self.tol.feasibility {
            self.lb[j] - x
        } else if x > self.ub[j] + self.tol.feasibility {
            x - self.ub[j]
        } else {
            0.0
        }
    }

    fn objective_value(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    // ---- main loop -----------------------------------------------------

    /// Optimizes from the current basis.
    pub fn solve(&mut self) -> LpResult {
        let m = self.head.len();
        let limit = self.iter_limit.unwrap_or(50 * (m + self.n).max(1));
        let cmax = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let dtol = self.tol.optimality * (1.0 + cmax);
        let ftol = self.tol.feasibility;
        self.refactor();
        self.recompute_basics();

        let mut iters = 0usize;
        if let DualOutcome::Infeasible(y) = self.dual_simplex(&mut iters, limit, dtol) {
            return self.finish(LpStatus::Infeasible, iters, Some(y), None);
        }
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut final_checks = 0usize;
        let stall_window = (3 * m).max(50);
        let mut window = (true, f64::INFINITY, 0usize);
        let mut sticky_bland = false;
        // original bounds while a perturbation is active
        let mut saved: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut perturbations = 0usize;
        loop {
            if self.pivots_since_refactor >= REFACTOR_INTERVAL {
                self.refactor();
                self.recompute_basics();
            }
            // phase costs by basis position
            let mut cb = vec![0.0; m];
            let mut infeas = 0.0;
            for (p, &j) in self.head.iter().enumerate() {
                let x = self.x[j];
                if x < self.lb[j] - ftol {
                    cb[p] = -1.0;
                    infeas += self.lb[j] - x;
                } else if x > self.ub[j] + ftol {
                    cb[p] = 1.0;
                    infeas += x - self.ub[j];
                }
            }
            let phase1 = infeas > 0.0;
            if !phase1 {
                for (p, &j) in self.head.iter().enumerate() {
                    cb[p] = if j < self.n { self.cost[j] } else { 0.0 };
                }
            }
            if let Some(log) = self.log.as_mut() {
                let obj = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
                log.push(IterRecord {
                    iteration: self.total_iterations,
                    phase: if phase1 { 1 } else { 2 },
                    objective: obj,
                    infeasibility: infeas,
                });
            }
            // stall guard: switch to Bland when a whole window of pivots
            // leaves the phase objective essentially unchanged
            let measure = if phase1 {
                infeas
            } else {
                (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
            };
            if phase1 != window.0 {
                window = (phase1, measure, iters);
            } else if iters - window.2 >= stall_window {
                if window.1 - measure <= 1e-9 * (1.0 + measure.abs()) {
                    bland = true;
                    sticky_bland = true;
                }
                window = (phase1, measure, iters);
            }
            let y = self.btran(&cb);

            // pricing
            let tol_d = if phase1 { self.tol.optimality } else { dtol };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n + m {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let cj = if phase1 || j >= self.n { 0.0 } else { self.cost[j] };
                let d = cj - self.col_dot(j, &y);
                let eligible = match st {
                    VarStatus::AtLower => d < -tol_d,
                    VarStatus::AtUpper => d > tol_d,
                    VarStatus::Free => d.abs() > tol_d,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    enter = Some((j, d));
                    break;
                }
                if enter.map_or(true, |(_, bd)| d.abs() > bd.abs()) {
                    enter = Some((j, d));
                }
            }

            let Some((q, dq)) = enter else {
                if let Some((lb, ub)) = saved.take() {
                    self.restore_bounds(lb, ub);
                    self.refactor();
                    self.recompute_basics();
                    continue;
                }
                // confirm with a fresh factorization before concluding
                if self.pivots_since_refactor > 0 && final_checks < 3 {
                    final_checks += 1;
                    self.refactor();
                    self.recompute_basics();
                    continue;
                }
                if phase1 {
                    return self.finish(LpStatus::Infeasible, iters, Some(y), None);
                }
                return self.finish(LpStatus::Optimal, iters, Some(y), None);
            };

            if iters >= limit {
                if let Some((lb, ub)) = saved.take() {
                    self.restore_bounds(lb, ub);
                    self.recompute_basics();
                }
                return self.finish(LpStatus::IterLimit, iters, None, None);
            }
            iters += 1;
            self.total_iterations += 1;

            let mut aq = vec![0.0; m];
            self.scatter_col(q, 1.0, &mut aq);
            let alpha = self.ftran(&aq);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            let step = self.ratio_test(&alpha, q, dir, phase1, bland);
            match step {
                Step::Unbounded => {
                    if phase1 {
                        // cannot happen for a bounded-below phase-1 objective;
                        // treat as numerical trouble and refactor
                        self.refactor();
                        self.recompute_basics();
                        continue;
                    }
                    if let Some((lb, ub)) = saved.take() {
                        self.restore_bounds(lb, ub);
                        self.refactor();
                        self.recompute_basics();
                        continue;
                    }
                    let mut ray = vec![0.0; self.n];
                    if q < self.n {
                        ray[q] = dir;
                    }
                    for (p, &j) in self.head.iter().enumerate() {
                        if j < self.n {
                            ray[j] = -dir * alpha[p];
                        }
                    }
                    return self.finish(LpStatus::Unbounded, iters, None, Some(ray));
                }
                Step::Flip(theta) => {
                    self.apply_move(&alpha, q, dir, theta);
                    self.status[q] = if self.status[q] == VarStatus::AtLower {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[q] = self.bound_value(q, self.status[q]);
                    degenerate_run = 0;
                    bland = sticky_bland;
                }
                Step::Pivot { p, theta, to_upper } => {
                    self.apply_move(&alpha, q, dir, theta);
                    let leaving = self.head[p];
                    let st = if to_upper {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.status[leaving] = st;
                    self.x[leaving] = self.bound_value(leaving, st);
                    self.status[q] = VarStatus::Basic;
                    self.head[p] = q;
                    let entries = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(i, v)| i != p && v.abs() > self.tol.zero_drop)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.factor.etas.push(Eta {
                        p,
                        pivot: alpha[p],
                        entries,
                    });
                    self.pivots_since_refactor += 1;
                    if theta.abs() <= 1e-12 {
                        degenerate_run += 1;
                        if degenerate_run >= PERTURB_AFTER && saved.is_none() && perturbations < 2 {
                            saved = Some(self.perturb_basic_bounds(perturbations));
                            perturbations += 1;
                            degenerate_run = 0;
                        } else if degenerate_run > 3 * m {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = sticky_bland;
                    }
                }
            }
        }
    }

    /// Dual simplex from the current basis. Runs only when the basis is dual
    /// feasible (after flipping boxed variables); stops at primal feasibility
    /// and leaves any remaining work to the primal loop.
    fn dual_simplex(&mut self, iters: &mut usize, limit: usize, dtol: f64) -> DualOutcome {
        let m = self.head.len();
        let ftol = self.tol.feasibility;
        let ptol = self.tol.pivot;
        let mut cb = vec![0.0; m];
        let mut flips = Vec::new();
        for (p, &j) in self.head.iter().enumerate() {
            cb[p] = if j < self.n { self.cost[j] } else { 0.0 };
        }
        let y = self.btran(&cb);
        for j in 0..self.n + m {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.reduced_cost(j, &y);
            let want = match st {
                VarStatus::AtLower if d < -dtol => VarStatus::AtUpper,
                VarStatus::AtUpper if d > dtol => VarStatus::AtLower,
                VarStatus::Free if d.abs() > dtol => return DualOutcome::Abandoned,
                _ => continue,
            };
            let target = if want == VarStatus::AtUpper { self.ub[j] } else { self.lb[j] };
            if !target.is_finite() {
                return DualOutcome::Abandoned;
            }
            flips.push((j, want, target));
        }
        // flips are applied only once all of them are known to be possible
        let flipped = !flips.is_empty();
        for (j, want, target) in flips {
            self.status[j] = want;
            self.x[j] = target;
        }
        if flipped {
            self.recompute_basics();
        }
        let mut rechecked = false;
        let start = *iters;
        // duals are updated along each pivot and recomputed after refactoring
        let mut duals: Option<Vec<f64>> = None;
        loop {
            if self.pivots_since_refactor >= REFACTOR_INTERVAL {
                self.refactor();
                self.recompute_basics();
                duals = None;
            }
            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64, bool)> = None;
            for (p, &j) in self.head.iter().enumerate() {
                let x = self.x[j];
                let (viol, to_upper) = if x < self.lb[j] - ftol {
                    (self.lb[j] - x, false)
                } else if x > self.ub[j] + ftol {
                    (x - self.ub[j], true)
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, v, _)| viol > v) {
                    leave = Some((p, viol, to_upper));
                }
            }
            let Some((p, _, to_upper)) = leave else {
                return DualOutcome::Feasible;
            };
            if *iters >= limit || *iters - start >= 10 * (m + self.n) {
                return DualOutcome::Abandoned;
            }
            let mut e = vec![0.0; m];
            e[p] = 1.0;
            let rho = self.btran(&e);
            let y = duals.get_or_insert_with(|| {
                for (pp, &j) in self.head.iter().enumerate() {
                    cb[pp] = if j < self.n { self.cost[j] } else { 0.0 };
                }
                self.btran(&cb)
            });
            // (var, alpha_pj, |d_j|)
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.n + m {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a.abs() <= ptol {
                    continue;
                }
                // x_p moves by -a per unit increase of x_j
                let up_ok = if to_upper { a > 0.0 } else { a < 0.0 };
                let eligible = match st {
                    VarStatus::AtLower => up_ok,
                    VarStatus::AtUpper => !up_ok,
                    VarStatus::Free => true,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let d = self.reduced_cost(j, y);
                let dd = match st {
                    VarStatus::AtLower => d.max(0.0),
                    VarStatus::AtUpper => (-d).max(0.0),
                    _ => d.abs(),
                };
                cands.push((j, a, dd));
            }
            if cands.is_empty() {
                if !rechecked && self.pivots_since_refactor > 0 {
                    rechecked = true;
                    self.refactor();
                    self.recompute_basics();
                    duals = None;
                    continue;
                }
                let sign = if to_upper { 1.0 } else { -1.0 };
                return DualOutcome::Infeasible(rho.iter().map(|v| sign * v).collect());
            }
            rechecked = false;
            let theta_max = cands
                .iter()
                .map(|c| (c.2 + dtol) / c.1.abs())
                .fold(f64::INFINITY, f64::min);
            let &(q, aq_row, _) = cands
                .iter()
                .filter(|c| c.2 / c.1.abs() <= theta_max)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .expect("the minimizer qualifies");
            let mut aq = vec![0.0; m];
            self.scatter_col(q, 1.0, &mut aq);
            let alpha = self.ftran(&aq);
            if (alpha[p] - aq_row).abs() > 1e-7 * (1.0 + aq_row.abs()) {
                if self.pivots_since_refactor > 0 {
                    self.refactor();
                    self.recompute_basics();
                    duals = None;
                    continue;
                }
                return DualOutcome::Abandoned;
            }
            *iters += 1;
            self.total_iterations += 1;
            let leaving = self.head[p];
            let target = if to_upper { self.ub[leaving] } else { self.lb[leaving] };
            let delta = (self.x[leaving] - target) / alpha[p];
            let theta_d = self.reduced_cost(q, y) / aq_row;
            for (yi, ri) in y.iter_mut().zip(&rho) {
                *yi += theta_d * ri;
            }
            self.apply_move(&alpha, q, 1.0, delta);
            let st = if to_upper {
                VarStatus::AtUpper
            } else {
                VarStatus::AtLower
            };
            self.status[leaving] = st;
            self.x[leaving] = target;
            self.status[q] = VarStatus::Basic;
            self.head[p] = q;
            let entries = alpha
                .iter()
                .enumerate()
                .filter(|&(i, v)| i != p && v.abs() > self.tol.zero_drop)
                .map(|(i, &v)| (i, v))
                .collect();
            self.factor.etas.push(Eta {
                p,
                pivot: alpha[p],
                entries,
            });
            self.pivots_since_refactor += 1;
            if let Some(log) = self.log.as_mut() {
                let obj = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
                log.push(IterRecord {
                    iteration: self.total_iterations,
                    phase: 3,
                    objective: obj,
                    infeasibility: 0.0,
                });
            }
        }
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let cj = if j < self.n { self.cost[j] } else { 0.0 };
        cj - self.col_dot(j, y)
    }

    /// Widens the bounds of every basic variable by a small deterministic
    /// amount so that degenerate basics move off their bounds. Returns the
    /// original bounds.
    fn perturb_basic_bounds(&mut self, round: usize) -> (Vec<f64>, Vec<f64>) {
        let saved = (self.lb.clone(), self.ub.clone());
        let scale = PERTURB_SCALE * (1 + round) as f64;
        for &j in &self.head {
            if self.lb[j] == self.ub[j] {
                continue;
            }
            let h = (j as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40;
            let r = 1.0 + (h % 1000) as f64 / 1000.0;
            if self.lb[j].is_finite() {
                self.lb[j] -= scale * r * (1.0 + self.lb[j].abs());
            }
            if self.ub[j].is_finite() {
                self.ub[j] += scale * r * (1.0 + self.ub[j].abs());
            }
        }
        saved
    }

    /// Reinstates original bounds and moves nonbasic variables onto them.
    fn restore_bounds(&mut self, lb: Vec<f64>, ub: Vec<f64>) {
        self.lb = lb;
        self.ub = ub;
        for j in 0..self.x.len() {
            let st = self.status[j];
            if st != VarStatus::Basic {
                self.x[j] = self.bound_value(j, st);
            }
        }
    }

    fn apply_move(&mut self, alpha: &[f64], q: usize, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (p, &j) in self.head.iter().enumerate() {
            if alpha[p] != 0.0 {
                self.x[j] -= dir * theta * alpha[p];
            }
        }
    }

    fn ratio_test(&self, alpha: &[f64], q: usize, dir: f64, phase1: bool, bland: bool) -> Step {
        let ftol = self.tol.feasibility;
        let ptol = self.tol.pivot;
        let flip = self.ub[q] - self.lb[q];
        // (position, exact ratio, relaxed ratio, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (p, &j) in self.head.iter().enumerate() {
            let a = alpha[p];
            if a.abs() <= ptol {
                continue;
            }
            let delta = -dir * a;
            let x = self.x[j];
            let (lb, ub) = (self.lb[j], self.ub[j]);
            if phase1 && x < lb - ftol {
                if delta > 0.0 {
                    let r = (lb - x) / delta;
                    cands.push((p, r, r, false));
                }
            } else if phase1 && x > ub + ftol {
                if delta < 0.0 {
                    let r = (x - ub) / -delta;
                    cands.push((p, r, r, true));
                }
            } else if delta < 0.0 && lb.is_finite() {
                cands.push((p, ((x - lb) / -delta).max(0.0), (x - lb + ftol) / -delta, false));
            } else if delta > 0.0 && ub.is_finite() {
                cands.push((p, ((ub - x) / delta).max(0.0), (ub - x + ftol) / delta, true));
            }
        }
        if cands.is_empty() {
            return if flip.is_finite() {
                Step::Flip(flip)
            } else {
                Step::Unbounded
            };
        }
        if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            if flip <= min {
                return Step::Flip(flip);
            }
            let ties: Vec<_> = cands.iter().filter(|c| c.1 <= min + 1e-12).collect();
            // smallest index among ties, skipping pivots too small to keep
            // the basis well conditioned
            let amax = ties.iter().map(|c| alpha[c.0].abs()).fold(0.0, f64::max);
            let best = ties
                .iter()
                .filter(|c| alpha[c.0].abs() >= 1e-2 * amax)
                .min_by_key(|c| self.head[c.0])
                .expect("non-empty");
            return Step::Pivot {
                p: best.0,
                theta: best.1,
                to_upper: best.3,
            };
        }
        let theta_max = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let best = cands
            .iter()
            .filter(|c| c.1 <= theta_max)
            .max_by(|a, b| {
                alpha[a.0]
                    .abs()
                    .total_cmp(&alpha[b.0].abs())
                    .then(b.0.cmp(&a.0))
            })
            .expect("the minimizer of the relaxed ratios qualifies");
        if flip <= best.1 {
            return Step::Flip(flip);
        }
        Step::Pivot {
            p: best.0,
            theta: best.1,
            to_upper: best.3,
        }
    }

    fn finish(
        &mut self,
        status: LpStatus,
        iterations: usize,
        y: Option<Vec<f64>>,
        ray: Option<Vec<f64>>,
    ) -> LpResult {
        let m = self.head.len();
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let row_activity: Vec<f64> = self.x[self.n..].to_vec();
        let (duals, farkas) = match (status, y) {
            (LpStatus::Optimal, Some(y)) => (y, None),
            (LpStatus::Infeasible, Some(y)) => (vec![0.0; m], Some(y)),
            _ => (vec![0.0; m], None),
        };
        let reduced_costs = (0..self.n)
            .map(|j| self.cost[j] - self.col_dot(j, &duals))
            .collect();
        LpResult {
            status,
            objective: self.objective_value(),
            x,
            row_activity,
            duals,
            reduced_costs,
            iterations,
            farkas,
            ray,
        }
    }

    /// Sum of bound violations of all variables at the current point.
    pub fn primal_infeasibility(&self) -> f64 {
        (0..self.x.len()).map(|j| self.infeasibility_of(j)).sum()
    }
}

enum DualOutcome {
    Feasible,
    Abandoned,
    /// Farkas multipliers.
    Infeasible(Vec<f64>),
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot { p: usize, theta: f64, to_upper: bool },
}

/// Column-ordered LU with partial row pivoting on a dense `k x k` row-major
/// matrix. Returns the pivot row of each column in order and the list of
/// columns with no acceptable pivot.
fn lu_factor(a: &mut [f64], k: usize, colmax: &[f64], tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut used = vec![false; k];
    let mut ord = Vec::with_capacity(k);
    let mut deficient = Vec::new();
    let mut pending: Vec<usize> = (0..k).collect();
    for t in 0..k {
        let mut best = usize::MAX;
        let mut bv = 0.0;
        for &r in &pending {
            let v = a[r * k + t].abs();
            if v > bv {
                bv = v;
                best = r;
            }
        }
        if best == usize::MAX || bv <= tol * colmax[t].max(1.0) {
            deficient.push(t);
            continue;
        }
        used[best] = true;
        ord.push(best);
        pending.retain(|&r| r != best);
        let piv = a[best * k + t];
        let prow: Vec<(usize, f64)> = (t + 1..k)
            .map(|c| (c, a[best * k + c]))
            .filter(|e| e.1 != 0.0)
            .collect();
        for &r in &pending {
            let f = a[r * k + t] / piv;
            a[r * k + t] = f;
            if f != 0.0 {
                for &(c, v) in &prow {
                    a[r * k + c] -= f * v;
                }
            }
        }
    }
    (ord, deficient)
}

/// Triangular factors of the kernel in compressed row form: row `t` of the
/// factor is model kernel row `ord[t]`, `L` has a unit diagonal.
#[derive(Default)]
struct KernelLu {
    k: usize,
    ord: Vec<usize>,
    diag: Vec<f64>,
    l_start: Vec<usize>,
    l: Vec<(usize, f64)>,
    u_start: Vec<usize>,
    u: Vec<(usize, f64)>,
}

impl KernelLu {
    /// Compresses the dense output of [`lu_factor`].
    fn from_dense(a: &[f64], k: usize, ord: Vec<usize>) -> Self {
        let mut lu = KernelLu {
            k,
            diag: Vec::with_capacity(k),
            l_start: Vec::with_capacity(k + 1),
            u_start: Vec::with_capacity(k + 1),
            ..KernelLu::default()
        };
        for &r in &ord {
            let row = &a[r * k..r * k + k];
            lu.l_start.push(lu.l.len());
            lu.u_start.push(lu.u.len());
            let t = lu.diag.len();
            lu.l.extend(row[..t].iter().enumerate().filter(|e| *e.1 != 0.0).map(|(s, &v)| (s, v)));
            lu.diag.push(row[t]);
            lu.u.extend(
                row[t + 1..]
                    .iter()
                    .enumerate()
                    .filter(|e| *e.1 != 0.0)
                    .map(|(c, &v)| (t + 1 + c, v)),
            );
        }
        lu.l_start.push(lu.l.len());
        lu.u_start.push(lu.u.len());
        lu.ord = ord;
        lu
    }

    fn l_row(&self, t: usize) -> &[(usize, f64)] {
        &self.l[self.l_start[t]..self.l_start[t + 1]]
    }

    fn u_row(&self, t: usize) -> &[(usize, f64)] {
        &self.u[self.u_start[t]..self.u_start[t + 1]]
    }

    /// Solves `K u = b` in place; `b` is indexed by kernel row on entry and by
    /// kernel column on exit.
    fn solve(&self, b: &mut [f64]) {
        let k = self.k;
        if k == 0 {
            return;
        }
        let mut g = vec![0.0; k];
        for t in 0..k {
            let mut v = b[self.ord[t]];
            for &(s, l) in self.l_row(t) {
                v -= l * g[s];
            }
            g[t] = v;
        }
        for t in (0..k).rev() {
            let mut v = g[t];
            for &(c, u) in self.u_row(t) {
                v -= u * g[c];
            }
            g[t] = v / self.diag[t];
        }
        b[..k].copy_from_slice(&g);
    }

    /// Solves `K^T y = c` in place; `c` is indexed by kernel column on entry and
    /// by kernel row on exit.
    fn solve_transposed(&self, c: &mut [f64]) {
        let k = self.k;
        if k == 0 {
            return;
        }
        let mut v = c[..k].to_vec();
        for t in 0..k {
            let vt = v[t] / self.diag[t];
            v[t] = vt;
            if vt != 0.0 {
                for &(col, u) in self.u_row(t) {
                    v[col] -= u * vt;
                }
            }
        }
        for t in (0..k).rev() {
            let wt = v[t];
            if wt != 0.0 {
                for &(s, l) in self.l_row(t) {
                    v[s] -= l * wt;
                }
            }
        }
        for t in 0..k {
            c[self.ord[t]] = v[t];
        }
    }
}

/// Solves the continuous model from scratch or from `start`.
pub fn solve_lp(model: &Model, start: Option<&Basis>) -> Result<(LpResult, Basis)> {
    solve_lp_with(model, start, Tolerances::from_env())
}

pub fn solve_lp_with(
    model: &Model,
    start: Option<&Basis>,
    tol: Tolerances,
) -> Result<(LpResult, Basis)> {
    let mut eng = LpEngine::new(model, tol)?;
    if let Some(b) = start {
        eng.set_basis(b)?;
    }
    let res = eng.solve();
    Ok((res, eng.basis()))
}

/// Re-optimizes `model` after appending `new_rows` and applying
/// `bound_changes`, starting from `basis` (optimal for `model`).
pub fn resolve_after(
    model: &Model,
    new_rows: &[RowSpec],
    bound_changes: &[BoundChange],
    basis: &Basis,
) -> Result<(LpResult, Basis)> {
    let mut eng = LpEngine::new(model, Tolerances::from_env())?;
    eng.set_basis(basis)?;
    for row in new_rows {
        eng.add_row(row)?;
    }
    for b in bound_changes {
        eng.set_bounds(b.var, b.lower, b.upper)?;
    }
    let res = eng.solve();
    Ok((res, eng.basis()))
}

/// Checks that `y` proves `model` infeasible: with `g_j = y^T a_j` for the
/// structurals and `g = -y_i` for the logicals, the maximum of `g^T (x, s)` over
/// the variable box must be below `-tol`, although every feasible point gives 0.
pub fn verify_farkas(model: &Model, y: &[f64], tol: f64) -> bool {
    let n = model.num_vars();
    let mut g = vec![0.0; n];
    for (i, c) in model.constraints().iter().enumerate() {
        for &(j, a) in &c.terms {
            g[j] += a * y[i];
        }
    }
    let mut max = 0.0;
    let mut add = |gj: f64, lo: f64, hi: f64| -> bool {
        if gj.abs() <= 1e-12 {
            return true;
        }
        let b = if gj > 0.0 { hi } else { lo };
        if !b.is_finite() {
            return false;
        }
        max += gj * b;
        true
    };
    for (j, v) in model.vars().iter().enumerate() {
        if !add(g[j], v.lower, v.upper) {
            return false;
        }
    }
    for (i, c) in model.constraints().iter().enumerate() {
        let (lo, hi) = logical_bounds(c.sense, c.rhs);
        if !add(-y[i], lo, hi) {
            return false;
        }
    }
    max < -tol
}

/// Primal infeasibility, dual infeasibility and complementary-slackness gap of
/// an optimal result, for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

pub fn kkt_report(model: &Model, res: &LpResult) -> KktReport {
    let (primal, _) = model.max_violation(&res.x);
    let mut dual = 0.0f64;
    let mut gap = 0.0f64;
    let mut check = |d: f64, x: f64, lo: f64, hi: f64| {
        // d > 0 requires x at lower, d < 0 requires x at upper
        if d > 0.0 {
            if lo.is_finite() {
                gap += d * (x - lo).abs();
            } else {
                dual = dual.max(d);
            }
        } else if d < 0.0 {
            if hi.is_finite() {
                gap += -d * (hi - x).abs();
            } else {
                dual = dual.max(-d);
            }
        }
    };
    for (j, v) in model.vars().iter().enumerate() {
        check(res.reduced_costs[j], res.x[j], v.lower, v.upper);
    }
    for (i, c) in model.constraints().iter().enumerate() {
        let (lo, hi) = logical_bounds(c.sense, c.rhs);
        check(res.duals[i], res.row_activity[i], lo, hi);
    }
    KktReport { primal, dual, gap }
}
