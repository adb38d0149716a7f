//! Brute-force ground truth: hub-subset enumeration and the LP bound
//! cross-check across all six formulations.
//!
//! Enumeration reads the raw instance only (path costs are recomputed from the
//! cost matrix), so it shares no code path with the preprocessing tables.

use crate::bnc::{self, SolveParams};
use crate::costs::CostTables;
use crate::error::{Error, Result};
use crate::formulations::{self, FormulationKind};
use crate::instance::Instance;
use crate::lp::{self, LpStatus};
use std::fmt;
use std::io::Write;

/// Largest `n` accepted by [`enumerate_optimum`].
pub const ENUMERATION_MAX_N: usize = 20;
/// Largest `n` accepted by [`lp_cross_check`].
pub const CROSS_CHECK_MAX_N: usize = 15;
/// Largest `n` accepted by [`forbidden_single_hub_check`].
pub const FORBIDDEN_CHECK_MAX_N: usize = 10;

/// Best routing of one commodity inside the optimal hub set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChoice {
    /// First hub (0-based).
    pub i: usize,
    /// Second hub (0-based); equal to `i` for a single-hub route.
    pub j: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    /// Optimal hub set, 0-based and sorted.
    pub hubs: Vec<usize>,
    pub pairs: Vec<PairChoice>,
    /// Number of subsets with at least `min_hubs` members.
    pub subsets: usize,
    pub min_hubs: usize,
}

impl OracleResult {
    /// Hub set as 1-based node numbers.
    pub fn hub_numbers(&self) -> Vec<usize> {
        self.hubs.iter().map(|h| h + 1).collect()
    }

    /// Human-readable report.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "objective: {}\nhubs: {:?}\nmin_hubs: {}\nsubsets: {}\n",
            self.objective,
            self.hub_numbers(),
            self.min_hubs,
            self.subsets
        );
        for (r, p) in self.pairs.iter().enumerate() {
            s.push_str(&format!("r{} -> ({}, {}) cost {}\n", r + 1, p.i + 1, p.j + 1, p.cost));
        }
        s
    }

    /// Writes `hubs,objective,r,i,j,cost`, one row per commodity. Node and
    /// commodity numbers are 1-based; hubs are space-separated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let hubs = self
            .hub_numbers()
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hubs", "objective", "r", "i", "j", "cost"])?;
        for (r, p) in self.pairs.iter().enumerate() {
            w.write_record([
                hubs.clone(),
                self.objective.to_string(),
                (r + 1).to_string(),
                (p.i + 1).to_string(),
                (p.j + 1).to_string(),
                p.cost.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn raw_path_cost(inst: &Instance, r: usize, i: usize, j: usize) -> f64 {
    let k = inst.commodities()[r];
    k.demand
        * (inst.gamma * inst.c(k.origin, i) + inst.alpha * inst.c(i, j) + inst.theta * inst.c(j, k.dest))
}

/// Exact minimum over hub sets `H` with `|H| >= min_hubs` of
/// `sum_{i in H} f_i + sum_r min_{i, j in H} C_rij`. Ties go to the
/// lexicographically smallest `H`.
pub fn enumerate_optimum(inst: &Instance, min_hubs: usize) -> Result<OracleResult> {
    enumerate_restricted(inst, min_hubs, &|_, _| false)
}

/// Enumeration where single-hub routes `(r, i)` with `forbid(r, i)` are not
/// available.
fn enumerate_restricted(
    inst: &Instance,
    min_hubs: usize,
    forbid: &dyn Fn(usize, usize) -> bool,
) -> Result<OracleResult> {
    let n = inst.n();
    if n > ENUMERATION_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_MAX_N,
        });
    }
    let min_hubs = min_hubs.max(1);
    if min_hubs > n {
        return Err(Error::OutOfRange(format!(
            "min_hubs = {min_hubs} exceeds the node count {n}"
        )));
    }
    let m = inst.num_commodities();
    let cost = |r: usize, i: usize, j: usize| {
        if i == j && forbid(r, i) {
            f64::INFINITY
        } else {
            raw_path_cost(inst, r, i, j)
        }
    };
    let mut search = Search {
        inst,
        min_hubs,
        cost: &cost,
        stack: vec![vec![f64::INFINITY; m]],
        hubs: Vec::new(),
        best: None,
        subsets: 0,
    };
    search.extend(0, 0.0);
    let (objective, hubs) = search
        .best
        .ok_or_else(|| Error::InfeasibleHubs("no hub set gives a finite routing cost".into()))?;
    let subsets = search.subsets;
    let pairs = (0..m)
        .map(|r| {
            let mut best = PairChoice {
                i: hubs[0],
                j: hubs[0],
                cost: f64::INFINITY,
            };
            for &i in &hubs {
                for &j in &hubs {
                    let c = cost(r, i, j);
                    if c < best.cost {
                        best = PairChoice { i, j, cost: c };
                    }
                }
            }
            best
        })
        .collect();
    Ok(OracleResult {
        objective,
        hubs,
        pairs,
        subsets,
        min_hubs,
    })
}

/// Depth-first walk over subsets in lexicographic order, carrying the
/// per-commodity routing minima of the current set.
struct Search<'a> {
    inst: &'a Instance,
    min_hubs: usize,
    cost: &'a dyn Fn(usize, usize, usize) -> f64,
    stack: Vec<Vec<f64>>,
    hubs: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    subsets: usize,
}

impl Search<'_> {
    fn extend(&mut self, from: usize, setup: f64) {
        for k in from..self.inst.n() {
            let prev = self.stack.last().expect("stack holds the empty set");
            let mut cur = prev.clone();
            for (r, best) in cur.iter_mut().enumerate() {
                let mut v = (self.cost)(r, k, k);
                for &i in &self.hubs {
                    v = v.min((self.cost)(r, i, k)).min((self.cost)(r, k, i));
                }
                *best = best.min(v);
            }
            let setup_k = setup + self.inst.setup()[k];
            self.hubs.push(k);
            if self.hubs.len() >= self.min_hubs {
                self.subsets += 1;
                let obj = setup_k + cur.iter().sum::<f64>();
                let better = match &self.best {
                    None => obj.is_finite(),
                    Some((b, _)) => obj < b - 1e-9 * (1.0 + b.abs()),
                };
                if better {
                    self.best = Some((obj, self.hubs.clone()));
                }
            }
            self.stack.push(cur);
            self.extend(k + 1, setup_k);
            self.stack.pop();
            self.hubs.pop();
        }
    }
}

/// True when allowing single-hub solutions does not lower the optimum, i.e.
/// the two-hub formulations are exact on `inst`.
pub fn two_hub_optimum_exists(inst: &Instance) -> Result<bool> {
    let one = enumerate_optimum(inst, 1)?;
    let two = enumerate_optimum(inst, 2)?;
    Ok(two.objective - one.objective <= 1e-9 * (1.0 + one.objective.abs()))
}

/// A bound relation that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationViolation {
    pub relation: &'static str,
    pub left: f64,
    pub right: f64,
}

impl fmt::Display for RelationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated: {} vs {}", self.relation, self.left, self.right)
    }
}

/// LP bounds of the four compact formulations and the converged root bounds of
/// the two masters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundVector {
    pub sk: f64,
    pub hlpma: f64,
    pub cfp: f64,
    pub fzp: f64,
    pub cfs: f64,
    pub fzs: f64,
    pub violations: Vec<RelationViolation>,
}

/// Names of the relations checked by [`BoundVector::check`].
pub const RELATIONS: [&str; 5] = [
    "FZ_P = HLP_MA",
    "FZ_S = FZ_P",
    "CF_S = CF_P",
    "CF_P <= HLP_MA",
    "SK <= HLP_MA",
];

/// Sides of each relation in [`RELATIONS`].
pub const RELATION_SIDES: [(FormulationKind, FormulationKind); 5] = [
    (FormulationKind::FzP, FormulationKind::HlpMa),
    (FormulationKind::FzS, FormulationKind::FzP),
    (FormulationKind::CfS, FormulationKind::CfP),
    (FormulationKind::CfP, FormulationKind::HlpMa),
    (FormulationKind::Sk, FormulationKind::HlpMa),
];

/// Whether relation `k` of [`RELATIONS`] holds: equalities within
/// `tol * (1 + |value|)`, inequalities with slack `tol * (1 + |right|)`.
pub fn relation_holds(k: usize, left: f64, right: f64, tol: f64) -> bool {
    if k < 3 {
        (left - right).abs() <= tol * (1.0 + left.abs().max(right.abs()))
    } else {
        left <= right + tol * (1.0 + right.abs())
    }
}

impl BoundVector {
    pub fn get(&self, kind: FormulationKind) -> f64 {
        match kind {
            FormulationKind::Sk => self.sk,
            FormulationKind::HlpMa => self.hlpma,
            FormulationKind::CfP => self.cfp,
            FormulationKind::FzP => self.fzp,
            FormulationKind::CfS => self.cfs,
            FormulationKind::FzS => self.fzs,
        }
    }

    /// Failed relations; see [`relation_holds`] for the tolerance.
    pub fn check(&self, tol: f64) -> Vec<RelationViolation> {
        let sides = [
            (self.fzp, self.hlpma),
            (self.fzs, self.fzp),
            (self.cfs, self.cfp),
            (self.cfp, self.hlpma),
            (self.sk, self.hlpma),
        ];
        sides
            .iter()
            .enumerate()
            .filter(|&(k, &(left, right))| !relation_holds(k, left, right, tol))
            .map(|(k, &(left, right))| RelationViolation {
                relation: RELATIONS[k],
                left,
                right,
            })
            .collect()
    }

    /// `100 (FZ_S - CF_S) / CF_S`, or 0 when `CF_S` is 0.
    pub fn improvement_pct(&self) -> f64 {
        improvement_pct(self.cfs, self.fzs)
    }
}

/// Relative improvement of `new` over `base` in percent.
pub fn improvement_pct(base: f64, new: f64) -> f64 {
    if base.abs() <= f64::EPSILON {
        0.0
    } else {
        100.0 * (new - base) / base
    }
}

/// LP value of `kind`: plain relaxation for the compact formulations, the
/// converged root for the masters.
pub fn lp_bound(inst: &Instance, tables: &CostTables, kind: FormulationKind) -> Result<f64> {
    let built = formulations::build(inst, tables, kind)?;
    if kind.is_supermodular() {
        let rb = bnc::root_bound(&built, &SolveParams::default())?;
        return match rb.status {
            LpStatus::Optimal => Ok(rb.bound),
            s => Err(Error::Internal(format!("{kind} root relaxation ended {s:?}"))),
        };
    }
    let (res, _) = lp::solve_lp(&built.model.relax(), None)?;
    match res.status {
        LpStatus::Optimal => Ok(res.objective),
        s => Err(Error::Internal(format!("{kind} relaxation ended {s:?}"))),
    }
}

/// Solves all six relaxations and checks the bound relations with tolerance
/// `tol`. Failed relations are listed in the result, not returned as errors.
pub fn lp_cross_check(inst: &Instance, tables: &CostTables, tol: f64) -> Result<BoundVector> {
    let n = inst.n();
    if n > CROSS_CHECK_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: CROSS_CHECK_MAX_N,
        });
    }
    let mut v = [0.0; 6];
    for (slot, kind) in v.iter_mut().zip(FormulationKind::ALL) {
        *slot = lp_bound(inst, tables, kind)?;
    }
    let mut bv = BoundVector {
        sk: v[0],
        hlpma: v[1],
        cfp: v[2],
        fzp: v[3],
        cfs: v[4],
        fzs: v[5],
        violations: Vec::new(),
    };
    bv.violations = bv.check(tol);
    Ok(bv)
}

/// Re-enumerates with single-hub routes through `U^r` removed and reports
/// whether the optimum (over all hub sets) is unchanged.
pub fn forbidden_single_hub_check(inst: &Instance, tables: &CostTables) -> Result<bool> {
    let n = inst.n();
    if n > FORBIDDEN_CHECK_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: FORBIDDEN_CHECK_MAX_N,
        });
    }
    let free = enumerate_optimum(inst, 1)?;
    let restricted = enumerate_restricted(inst, 1, &|r, i| tables.ur(r) == Some(i))?;
    Ok((restricted.objective - free.objective).abs() <= 1e-9 * (1.0 + free.objective.abs()))
}
