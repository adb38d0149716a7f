//! LP-based branch-and-bound over the binaries, with the supermodular cut
//! loop at every node of the `CF_S` / `FZ_S` masters.

use crate::error::{Error, Result};
use crate::formulations::BuiltModel;
use crate::lp::{Basis, LpEngine, LpResult, LpStatus};
use crate::separation::{self, CutLogRow};
use crate::tolerances::Tolerances;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::io::Write;
use std::rc::Rc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchRule {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeOrder {
    #[default]
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    /// Relative gap at which a node is pruned and the search declared optimal.
    pub gap: f64,
    pub node_limit: Option<usize>,
    /// Cut passes at the root; `None` runs until no violated cut remains.
    pub root_passes: Option<usize>,
    /// Cut passes at other nodes. Integer points are always separated fully.
    pub node_passes: usize,
    pub branching: BranchRule,
    pub order: NodeOrder,
    pub tol: Tolerances,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            time_limit: None,
            gap: 1e-6,
            node_limit: None,
            root_passes: None,
            node_passes: 3,
            branching: BranchRule::default(),
            order: NodeOrder::default(),
            tol: Tolerances::from_env(),
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::OutOfRange("time limit must be positive".into()));
        }
        if self.node_limit == Some(0) || self.root_passes == Some(0) {
            return Err(Error::OutOfRange("limits must be positive".into()));
        }
        if !(self.gap >= 0.0) {
            return Err(Error::OutOfRange("gap must be non-negative".into()));
        }
        Ok(())
    }

    /// Bound at or above which a node cannot improve on `ub`.
    fn cutoff(&self, ub: f64) -> f64 {
        if ub.is_finite() {
            ub - self.gap * ub.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    /// A time or node limit stopped the search with an incumbent.
    Feasible,
    /// A limit stopped the search before any incumbent was found.
    NoSolution,
    Infeasible,
}

impl fmt::Display for MipStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MipStatus::Optimal => "Optimal",
            MipStatus::Feasible => "Feasible",
            MipStatus::NoSolution => "NoSolution",
            MipStatus::Infeasible => "Infeasible",
        })
    }
}

/// One row of the progress log.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRow {
    pub node: usize,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub cuts: usize,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub root_bound: f64,
    pub incumbent: Option<Vec<f64>>,
    /// Open hubs of the incumbent, 1-based.
    pub hubs: Vec<usize>,
    pub nodes: usize,
    pub cuts: usize,
    pub root_passes: usize,
    /// Nodes dropped because their LP did not solve.
    pub lp_failures: usize,
    pub lp_iterations: usize,
    pub wall_seconds: f64,
    pub progress: Vec<ProgressRow>,
    pub cut_log: Vec<CutLogRow>,
}

impl MipResult {
    pub fn gap(&self) -> f64 {
        relative_gap(self.lower_bound, self.upper_bound)
    }

    /// Writes `node,lb,ub,gap,cuts`.
    pub fn write_progress_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "lb", "ub", "gap", "cuts"])?;
        for p in &self.progress {
            w.write_record([
                p.node.to_string(),
                p.lb.to_string(),
                p.ub.to_string(),
                p.gap.to_string(),
                p.cuts.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable result block.
    pub fn summary(&self) -> String {
        format!(
            "status: {}\nUB: {}\nLB: {}\nLB_root: {}\ngap: {:.3e}\nnodes: {}\ncuts: {}\nlp_failures: {}\ntime_s: {:.3}\nhubs: {:?}\n",
            self.status,
            self.upper_bound,
            self.lower_bound,
            self.root_bound,
            self.gap(),
            self.nodes,
            self.cuts,
            self.lp_failures,
            self.wall_seconds,
            self.hubs
        )
    }
}

fn relative_gap(lb: f64, ub: f64) -> f64 {
    if !ub.is_finite() || !lb.is_finite() {
        return f64::INFINITY;
    }
    ((ub - lb) / ub.abs().max(1.0)).max(0.0)
}

/// Converged root relaxation.
#[derive(Debug, Clone)]
pub struct RootBound {
    pub status: LpStatus,
    pub bound: f64,
    pub cuts: usize,
    pub passes: usize,
    pub x: Vec<f64>,
    pub cut_log: Vec<CutLogRow>,
}

enum NodeLp {
    Infeasible,
    Failed,
    Solved { res: LpResult, passes: usize },
}

struct CutLoop<'a> {
    built: &'a BuiltModel,
    tol: Tolerances,
    eng: LpEngine,
    keys: HashSet<(usize, usize)>,
    log: Vec<CutLogRow>,
    passes_total: usize,
    deadline: Option<Instant>,
}

impl<'a> CutLoop<'a> {
    fn new(built: &'a BuiltModel, tol: Tolerances, deadline: Option<Instant>) -> Result<Self> {
        let relaxed = built.model.relax();
        let mut keys = HashSet::new();
        if let Some(s) = &built.schedule {
            // rows seeded by the builder are tagged "super r=.. t=1"
            for c in built.model.constraints() {
                if c.tag.starts_with("super ") {
                    if let Some(r) = c.tag.split_whitespace().nth(1).and_then(|p| p.strip_prefix("r=")) {
                        if let Ok(r) = r.parse::<usize>() {
                            if r >= 1 && r <= s.num_commodities() {
                                keys.insert((r - 1, 0));
                            }
                        }
                    }
                }
            }
        }
        Ok(CutLoop {
            built,
            tol,
            eng: LpEngine::new(&relaxed, tol)?,
            keys,
            log: Vec::new(),
            passes_total: 0,
            deadline,
        })
    }

    fn cuts(&self) -> usize {
        self.log.len()
    }

    fn is_integral(&self, x: &[f64], order: &[usize]) -> bool {
        order
            .iter()
            .all(|&v| (x[v] - x[v].round()).abs() <= self.tol.integrality)
    }

    /// Solves the node LP, separating until no violated row remains or the
    /// pass cap is hit at a fractional point.
    fn run(&mut self, max_passes: Option<usize>, cutoff: f64, order: &[usize]) -> Result<NodeLp> {
        let mut passes = 0;
        loop {
            let res = self.eng.solve();
            match res.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Ok(NodeLp::Infeasible),
                LpStatus::Unbounded | LpStatus::IterLimit => return Ok(NodeLp::Failed),
            }
            let Some(schedule) = &self.built.schedule else {
                return Ok(NodeLp::Solved { res, passes });
            };
            if res.objective >= cutoff {
                return Ok(NodeLp::Solved { res, passes });
            }
            let integral = self.is_integral(&res.x, order);
            let capped = max_passes.is_some_and(|m| passes >= m);
            let timed_out = self.deadline.is_some_and(|d| Instant::now() >= d);
            if !integral && (capped || timed_out) {
                return Ok(NodeLp::Solved { res, passes });
            }
            let z = self.built.z_values(&res.x);
            let y = self.built.y_values(&res.x);
            let eta: Vec<f64> = self.built.eta.iter().map(|&v| res.x[v]).collect();
            let (cuts, _) = separation::separate_all(schedule, &z, &y, &eta, self.tol.cut_violation);
            passes += 1;
            self.passes_total += 1;
            let mut added = 0;
            for cut in cuts {
                if !self.keys.insert((cut.r, cut.t)) {
                    continue;
                }
                self.eng.add_row(&cut.to_row(self.built))?;
                self.log.push(CutLogRow {
                    pass: self.passes_total,
                    r: cut.r,
                    t: cut.t,
                    value: cut.value,
                    violation: cut.violation,
                });
                added += 1;
            }
            if added == 0 {
                return Ok(NodeLp::Solved { res, passes });
            }
        }
    }
}

/// Runs the cut loop on the root relaxation.
pub fn root_bound(built: &BuiltModel, params: &SolveParams) -> Result<RootBound> {
    params.validate()?;
    let deadline = params
        .time_limit
        .map(|t| Instant::now() + std::time::Duration::from_secs_f64(t));
    let mut cl = CutLoop::new(built, params.tol, deadline)?;
    // integrality never stops the loop here
    let outcome = cl.run(params.root_passes, f64::INFINITY, &[])?;
    let (status, bound, x, passes) = match outcome {
        NodeLp::Solved { res, passes } => (LpStatus::Optimal, res.objective, res.x, passes),
        NodeLp::Infeasible => (LpStatus::Infeasible, f64::INFINITY, Vec::new(), 0),
        NodeLp::Failed => (LpStatus::IterLimit, f64::NAN, Vec::new(), 0),
    };
    Ok(RootBound {
        status,
        bound,
        cuts: cl.cuts(),
        passes,
        x,
        cut_log: cl.log,
    })
}

/// Closed-form master value at a point: `sum f z + sum_r S_{r, tbar_r}`.
pub fn verify_closed_form(built: &BuiltModel, x: &[f64]) -> Result<f64> {
    let schedule = built
        .schedule
        .as_ref()
        .ok_or_else(|| Error::Internal("closed form needs a supermodular master".into()))?;
    if x.len() != built.model.num_vars() {
        return Err(Error::Internal(format!(
            "point has {} entries, model has {} variables",
            x.len(),
            built.model.num_vars()
        )));
    }
    let z = built.z_values(x);
    let y = built.y_values(x);
    let setup: f64 = built
        .instance()
        .setup()
        .iter()
        .zip(&z)
        .map(|(f, z)| f * z)
        .sum();
    let mut total = setup;
    for r in 0..schedule.num_commodities() {
        let t = separation::critical_index(schedule, r, &z, &y);
        total += separation::rhs_value(schedule, r, t, &z, &y)?;
    }
    Ok(total)
}

struct Node {
    id: usize,
    bound: f64,
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Rc<Basis>>,
    /// `(var, up, fraction, parent objective)` of the branching that created it.
    origin: Option<(usize, bool, f64, f64)>,
}

struct Keyed(Node);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    // max-heap: smaller bound first, then smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(other.0.id.cmp(&self.0.id))
    }
}

enum Queue {
    Best(BinaryHeap<Keyed>),
    Depth(Vec<Node>),
}

impl Queue {
    fn push(&mut self, n: Node) {
        match self {
            Queue::Best(h) => h.push(Keyed(n)),
            Queue::Depth(s) => s.push(n),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Queue::Best(h) => h.pop().map(|k| k.0),
            Queue::Depth(s) => s.pop(),
        }
    }

    fn min_bound(&self) -> Option<f64> {
        match self {
            Queue::Best(h) => h.peek().map(|k| k.0.bound),
            Queue::Depth(s) => s.iter().map(|n| n.bound).min_by(f64::total_cmp),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Pseudo {
    down: f64,
    down_n: usize,
    up: f64,
    up_n: usize,
}

fn choose_branch(
    x: &[f64],
    order: &[usize],
    tol: f64,
    rule: BranchRule,
    pseudo: &[Pseudo],
) -> Option<usize> {
    let frac = |v: usize| x[v] - x[v].floor();
    let fractional: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&v| (x[v] - x[v].round()).abs() > tol)
        .collect();
    let first = *fractional.first()?;
    match rule {
        BranchRule::MostFractional => {
            let mut best = first;
            let mut best_score = -1.0;
            for &v in &fractional {
                let f = frac(v);
                let score = f.min(1.0 - f);
                if score > best_score + 1e-12 {
                    best = v;
                    best_score = score;
                }
            }
            Some(best)
        }
        BranchRule::PseudoCost => {
            let (mut sd, mut nd, mut su, mut nu) = (0.0, 0, 0.0, 0);
            for p in pseudo {
                sd += p.down;
                nd += p.down_n;
                su += p.up;
                nu += p.up_n;
            }
            let avg_d = if nd > 0 { sd / nd as f64 } else { 1.0 };
            let avg_u = if nu > 0 { su / nu as f64 } else { 1.0 };
            let mut best = first;
            let mut best_score = f64::NEG_INFINITY;
            for &v in &fractional {
                let p = pseudo[v];
                let d = if p.down_n > 0 { p.down / p.down_n as f64 } else { avg_d };
                let u = if p.up_n > 0 { p.up / p.up_n as f64 } else { avg_u };
                let f = frac(v);
                let score = (d * f).max(1e-6) * (u * (1.0 - f)).max(1e-6);
                if score > best_score * (1.0 + 1e-12) {
                    best = v;
                    best_score = score;
                }
            }
            Some(best)
        }
    }
}

/// Solves `built` to proven optimality or until a limit is hit.
pub fn solve(built: &BuiltModel, params: &SolveParams) -> Result<MipResult> {
    params.validate()?;
    let start = Instant::now();
    let deadline = params
        .time_limit
        .map(|t| start + std::time::Duration::from_secs_f64(t));
    let mut cl = CutLoop::new(built, params.tol, deadline)?;
    let nvars = built.model.num_vars();
    let root_bounds: Vec<(f64, f64)> = (0..nvars).map(|v| cl.eng.bounds(v)).collect();
    let order = built.branching_order();
    // hubs first: branch on y only once every z is integral
    let z_set: HashSet<usize> = built.z.iter().copied().collect();
    let mut pseudo = vec![Pseudo::default(); nvars];

    let mut queue = match params.order {
        NodeOrder::BestBound => Queue::Best(BinaryHeap::new()),
        NodeOrder::DepthFirst => Queue::Depth(Vec::new()),
    };
    queue.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        changes: Vec::new(),
        basis: None,
        origin: None,
    });
    let mut next_id = 1;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut root_bound = f64::NEG_INFINITY;
    let mut root_passes = 0;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut nodes = 0;
    let mut lp_failures = 0;
    let mut touched: Vec<usize> = Vec::new();
    let mut progress = Vec::new();
    let mut limited = false;

    while let Some(node) = queue.pop() {
        if node.bound >= params.cutoff(ub) {
            continue;
        }
        let out_of_time = deadline.is_some_and(|d| Instant::now() >= d);
        let out_of_nodes = params.node_limit.is_some_and(|l| nodes >= l);
        if out_of_time || out_of_nodes {
            queue.push(node);
            limited = true;
            break;
        }
        for &v in &touched {
            cl.eng.set_bounds(v, root_bounds[v].0, root_bounds[v].1)?;
        }
        touched.clear();
        for &(v, lo, hi) in &node.changes {
            cl.eng.set_bounds(v, lo, hi)?;
            touched.push(v);
        }
        if let Some(b) = &node.basis {
            cl.eng.set_basis(b)?;
        }
        nodes += 1;
        let passes = if node.id == 0 {
            params.root_passes
        } else {
            Some(params.node_passes)
        };
        let cutoff = params.cutoff(ub);
        let outcome = cl.run(passes, cutoff, &order)?;
        match outcome {
            NodeLp::Infeasible => {
                if node.id == 0 {
                    root_bound = f64::INFINITY;
                }
            }
            NodeLp::Failed => lp_failures += 1,
            NodeLp::Solved { res, passes } => {
                if node.id == 0 {
                    root_bound = res.objective;
                    root_passes = passes;
                }
                if let Some((v, up, f, parent)) = node.origin {
                    let gain = (res.objective - parent).max(0.0);
                    let p = &mut pseudo[v];
                    if up {
                        p.up += gain / (1.0 - f).max(1e-9);
                        p.up_n += 1;
                    } else {
                        p.down += gain / f.max(1e-9);
                        p.down_n += 1;
                    }
                }
                if res.objective < params.cutoff(ub) {
                    let zfrac: Vec<usize> = order
                        .iter()
                        .copied()
                        .filter(|v| z_set.contains(v))
                        .collect();
                    let pick = choose_branch(&res.x, &zfrac, params.tol.integrality, params.branching, &pseudo)
                        .or_else(|| {
                            choose_branch(&res.x, &order, params.tol.integrality, params.branching, &pseudo)
                        });
                    match pick {
                        None => {
                            let mut x = res.x.clone();
                            let value = if built.schedule.is_some() {
                                finalize_master_point(built, &mut x)?
                            } else {
                                res.objective
                            };
                            if value < ub {
                                ub = value;
                                incumbent = Some(x);
                            }
                        }
                        Some(v) => {
                            let val = res.x[v];
                            let f = val - val.floor();
                            let basis = Rc::new(cl.eng.basis());
                            let (lo, hi) = cl.eng.bounds(v);
                            let mut down = node.changes.clone();
                            down.retain(|c| c.0 != v);
                            let mut up = down.clone();
                            down.push((v, lo, val.floor()));
                            up.push((v, val.ceil(), hi));
                            for (changes, is_up) in [(down, false), (up, true)] {
                                queue.push(Node {
                                    id: next_id,
                                    bound: res.objective,
                                    changes,
                                    basis: Some(Rc::clone(&basis)),
                                    origin: Some((v, is_up, f, res.objective)),
                                });
                                next_id += 1;
                            }
                        }
                    }
                }
            }
        }
        let open = queue.min_bound().unwrap_or(f64::INFINITY);
        lb = lb.max(open.min(ub));
        progress.push(ProgressRow {
            node: nodes,
            lb,
            ub,
            gap: relative_gap(lb, ub),
            cuts: cl.cuts(),
        });
    }

    let open = queue.min_bound();
    let status = if limited && ub.is_finite() {
        MipStatus::Feasible
    } else if limited {
        MipStatus::NoSolution
    } else if ub.is_finite() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    if !limited {
        lb = lb.max(ub.min(open.unwrap_or(ub)));
        if ub.is_finite() {
            lb = lb.min(ub);
        }
    }
    let hubs = incumbent.as_ref().map(|x| built.hubs(x)).unwrap_or_default();
    Ok(MipResult {
        status,
        upper_bound: ub,
        lower_bound: lb,
        root_bound,
        incumbent,
        hubs,
        nodes,
        cuts: cl.cuts(),
        root_passes,
        lp_failures,
        lp_iterations: cl.eng.total_iterations(),
        wall_seconds: start.elapsed().as_secs_f64(),
        progress,
        cut_log: cl.log,
    })
}

/// Rounds the binaries of an integral master point, sets every `eta_r` to its
/// routing value and returns the point's true objective.
fn finalize_master_point(built: &BuiltModel, x: &mut [f64]) -> Result<f64> {
    let schedule = built.schedule.as_ref().expect("master");
    for v in built.branching_order() {
        x[v] = x[v].round();
    }
    let z = built.z_values(x);
    let y = built.y_values(x);
    for r in 0..schedule.num_commodities() {
        let t = separation::critical_index(schedule, r, &z, &y);
        x[built.eta[r]] = separation::rhs_value(schedule, r, t, &z, &y)?;
    }
    Ok(built.model.evaluate(x))
}
