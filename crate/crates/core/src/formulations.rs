//! Model builders for the six formulations.
//!
//! * `SK` and `HLP_MA` route each commodity with path variables `X_r_i_j` over
//!   all ordered hub pairs (including `i = j`).
//! * `CF_P` and `FZ_P` route over undirected edges with `x_r_i_j`, paying `Fbar`.
//! * `CF_S` and `FZ_S` are masters with `z`, `y`, `y_tilde` and one `eta_r` per
//!   commodity; their supermodular rows are added lazily by
//!   [`crate::separation`].
//!
//! Variable names are 1-based: `z_3`, `y_2_5`, `y_tilde`, `eta_17`, `x_17_2_5`,
//! `X_17_2_5`.

use crate::costs::{CostTables, ScheduleVariant, SingleHubPolicy, SortedSchedule};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::model::{LinExpr, Model, Sense};
use crate::separation;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulationKind {
    Sk,
    HlpMa,
    CfP,
    FzP,
    CfS,
    FzS,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 6] = [
        FormulationKind::Sk,
        FormulationKind::HlpMa,
        FormulationKind::CfP,
        FormulationKind::FzP,
        FormulationKind::CfS,
        FormulationKind::FzS,
    ];

    /// Masters whose routing rows are generated lazily.
    pub fn is_supermodular(self) -> bool {
        matches!(self, FormulationKind::CfS | FormulationKind::FzS)
    }

    /// Formulations that are only exact when some optimum opens two hubs.
    pub fn needs_two_hubs(self) -> bool {
        matches!(
            self,
            FormulationKind::CfP | FormulationKind::FzP | FormulationKind::CfS
        )
    }

    /// Lowercase CLI spelling.
    pub fn cli_name(self) -> &'static str {
        match self {
            FormulationKind::Sk => "sk",
            FormulationKind::HlpMa => "hlpma",
            FormulationKind::CfP => "cfp",
            FormulationKind::FzP => "fzp",
            FormulationKind::CfS => "cfs",
            FormulationKind::FzS => "fzs",
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormulationKind::Sk => "SK",
            FormulationKind::HlpMa => "HLP_MA",
            FormulationKind::CfP => "CF_P",
            FormulationKind::FzP => "FZ_P",
            FormulationKind::CfS => "CF_S",
            FormulationKind::FzS => "FZ_S",
        };
        f.write_str(s)
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        FormulationKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == key)
            .ok_or_else(|| Error::OutOfRange(format!("unknown formulation `{s}`")))
    }
}

/// Builder switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    /// Single-hub candidates in FZS schedules.
    pub policy: SingleHubPolicy,
    /// Add the `t = 1` supermodular row of every commodity up front.
    pub seed_cuts: bool,
}

/// A formulation instantiated as a [`Model`] plus the maps from problem
/// indices to variable ids.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub kind: FormulationKind,
    pub model: Model,
    pub tables: CostTables,
    /// `z[i]`.
    pub z: Vec<usize>,
    /// `y[e]` by edge id (empty for SK / HLP_MA).
    pub y: Vec<usize>,
    pub y_tilde: Option<usize>,
    /// `eta[r]` (masters only).
    pub eta: Vec<usize>,
    /// `x[r][e]` (CF_P / FZ_P only).
    pub x: Vec<Vec<usize>>,
    /// `big_x[r][i * n + j]` (SK / HLP_MA only).
    pub big_x: Vec<Vec<usize>>,
    pub schedule: Option<SortedSchedule>,
    pub warnings: Vec<String>,
}

impl BuiltModel {
    fn empty(kind: FormulationKind, tables: &CostTables) -> Self {
        BuiltModel {
            kind,
            model: Model::new(),
            tables: tables.clone(),
            z: Vec::new(),
            y: Vec::new(),
            y_tilde: None,
            eta: Vec::new(),
            x: Vec::new(),
            big_x: Vec::new(),
            schedule: None,
            warnings: Vec::new(),
        }
    }

    pub fn instance(&self) -> &Instance {
        self.tables.instance()
    }

    /// Variables to branch on, in priority order: hubs, then edges, then any
    /// other integral variable.
    pub fn branching_order(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.z.clone();
        out.extend(&self.y);
        out.extend(self.y_tilde);
        let seen: std::collections::HashSet<usize> = out.iter().copied().collect();
        for v in self.model.vars() {
            if v.integral && !seen.contains(&v.id) {
                out.push(v.id);
            }
        }
        out
    }

    /// `z` values of a solution vector.
    pub fn z_values(&self, x: &[f64]) -> Vec<f64> {
        self.z.iter().map(|&v| x[v]).collect()
    }

    /// `y` values by edge id; all zero when the formulation has no `y`.
    pub fn y_values(&self, x: &[f64]) -> Vec<f64> {
        if self.y.is_empty() {
            return vec![0.0; self.tables.edges().len()];
        }
        self.y.iter().map(|&v| x[v]).collect()
    }

    /// Hubs open in `x` (1-based sorted node numbers).
    pub fn hubs(&self, x: &[f64]) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|&(_, &v)| x[v] > 0.5)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Builds `kind` with default options.
pub fn build(inst: &Instance, tables: &CostTables, kind: FormulationKind) -> Result<BuiltModel> {
    build_with(inst, tables, kind, BuildOptions::default())
}

pub fn build_with(
    inst: &Instance,
    tables: &CostTables,
    kind: FormulationKind,
    opts: BuildOptions,
) -> Result<BuiltModel> {
    let rep = inst.validate();
    if let Some(e) = rep.errors.into_iter().next() {
        return Err(Error::InvalidInstance(e));
    }
    match kind {
        FormulationKind::Sk => build_sk(inst, tables),
        FormulationKind::HlpMa => build_hlpma(inst, tables),
        FormulationKind::CfP => build_cfp(inst, tables),
        FormulationKind::FzP => build_fzp(inst, tables),
        FormulationKind::CfS => build_super_master(inst, tables, ScheduleVariant::Cfs, opts),
        FormulationKind::FzS => build_super_master(inst, tables, ScheduleVariant::Fzs, opts),
    }
}

fn add_hub_vars(b: &mut BuiltModel, inst: &Instance) -> Result<()> {
    for i in 0..inst.n() {
        let v = b
            .model
            .add_var(&format!("z_{}", i + 1), 0.0, 1.0, true, inst.setup()[i])?;
        b.z.push(v);
    }
    Ok(())
}

fn add_edge_vars(b: &mut BuiltModel, tables: &CostTables) -> Result<()> {
    for (_, (i, j)) in tables.edges().iter() {
        let v = b
            .model
            .add_var(&format!("y_{}_{}", i + 1, j + 1), 0.0, 1.0, true, 0.0)?;
        b.y.push(v);
    }
    Ok(())
}

fn add_path_vars(b: &mut BuiltModel, inst: &Instance, tables: &CostTables) -> Result<()> {
    let n = inst.n();
    for r in 0..inst.num_commodities() {
        let mut row = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let name = format!("X_{}_{}_{}", r + 1, i + 1, j + 1);
                row.push(b.model.add_var(&name, 0.0, 1.0, false, tables.c(r, i, j))?);
            }
        }
        b.big_x.push(row);
    }
    for r in 0..inst.num_commodities() {
        let all: LinExpr = b.big_x[r].iter().map(|&v| (v, 1.0)).collect();
        b.model
            .add_constraint(&all, Sense::Eq, 1.0, format!("route-all r={}", r + 1))?;
    }
    Ok(())
}

/// SK: separate first-hub and second-hub rows per commodity and node.
pub fn build_sk(inst: &Instance, tables: &CostTables) -> Result<BuiltModel> {
    let mut b = BuiltModel::empty(FormulationKind::Sk, tables);
    let n = inst.n();
    add_hub_vars(&mut b, inst)?;
    add_path_vars(&mut b, inst, tables)?;
    for r in 0..inst.num_commodities() {
        for i in 0..n {
            let mut e: LinExpr = (0..n).map(|j| (b.big_x[r][i * n + j], 1.0)).collect();
            e.push(b.z[i], -1.0);
            b.model
                .add_constraint(&e, Sense::Le, 0.0, format!("first-hub r={} i={}", r + 1, i + 1))?;
        }
        for j in 0..n {
            let mut e: LinExpr = (0..n).map(|i| (b.big_x[r][i * n + j], 1.0)).collect();
            e.push(b.z[j], -1.0);
            b.model.add_constraint(
                &e,
                Sense::Le,
                0.0,
                format!("second-hub r={} j={}", r + 1, j + 1),
            )?;
        }
    }
    Ok(b)
}

/// HLP_MA: one merged row `X_rii + sum_{j != i} (X_rij + X_rji) <= z_i`.
pub fn build_hlpma(inst: &Instance, tables: &CostTables) -> Result<BuiltModel> {
    let mut b = BuiltModel::empty(FormulationKind::HlpMa, tables);
    let n = inst.n();
    add_hub_vars(&mut b, inst)?;
    add_path_vars(&mut b, inst, tables)?;
    for r in 0..inst.num_commodities() {
        for i in 0..n {
            let mut e = LinExpr::new();
            e.push(b.big_x[r][i * n + i], 1.0);
            for j in 0..n {
                if j != i {
                    e.push(b.big_x[r][i * n + j], 1.0);
                    e.push(b.big_x[r][j * n + i], 1.0);
                }
            }
            e.push(b.z[i], -1.0);
            b.model
                .add_constraint(&e, Sense::Le, 0.0, format!("merged r={} i={}", r + 1, i + 1))?;
        }
    }
    Ok(b)
}

fn add_edge_routing(b: &mut BuiltModel, inst: &Instance, tables: &CostTables) -> Result<()> {
    let edges = tables.edges();
    for r in 0..inst.num_commodities() {
        let mut row = Vec::with_capacity(edges.len());
        for (e, (i, j)) in edges.iter() {
            let name = format!("x_{}_{}_{}", r + 1, i + 1, j + 1);
            row.push(b.model.add_var(&name, 0.0, 1.0, false, tables.fbar(r, e))?);
        }
        b.x.push(row);
    }
    for r in 0..inst.num_commodities() {
        let all: LinExpr = b.x[r].iter().map(|&v| (v, 1.0)).collect();
        b.model
            .add_constraint(&all, Sense::Eq, 1.0, format!("route-all r={}", r + 1))?;
        for (e, (i, j)) in edges.iter() {
            let row = LinExpr::new().term(b.x[r][e], 1.0).term(b.y[e], -1.0);
            b.model.add_constraint(
                &row,
                Sense::Le,
                0.0,
                format!("route-edge r={} e={}-{}", r + 1, i + 1, j + 1),
            )?;
        }
    }
    Ok(())
}

fn add_linking(b: &mut BuiltModel, tables: &CostTables) -> Result<()> {
    for (e, (i, j)) in tables.edges().iter() {
        for end in [i, j] {
            let row = LinExpr::new().term(b.y[e], 1.0).term(b.z[end], -1.0);
            b.model.add_constraint(
                &row,
                Sense::Le,
                0.0,
                format!("link e={}-{} i={}", i + 1, j + 1, end + 1),
            )?;
        }
    }
    Ok(())
}

const TWO_HUB_WARNING: &str =
    "exact only if some optimum opens at least two hubs; cross-check against the oracle or HLP_MA";

/// CF_P: edge routing with `y_e <= z_i`, `y_e <= z_j`.
pub fn build_cfp(inst: &Instance, tables: &CostTables) -> Result<BuiltModel> {
    let mut b = BuiltModel::empty(FormulationKind::CfP, tables);
    add_hub_vars(&mut b, inst)?;
    add_edge_vars(&mut b, tables)?;
    add_edge_routing(&mut b, inst, tables)?;
    add_linking(&mut b, tables)?;
    b.warnings.push(TWO_HUB_WARNING.to_string());
    Ok(b)
}

/// FZ_P: edge routing with the star rows `sum_{e in delta(i)} x_re <= z_i`.
pub fn build_fzp(inst: &Instance, tables: &CostTables) -> Result<BuiltModel> {
    let mut b = BuiltModel::empty(FormulationKind::FzP, tables);
    add_hub_vars(&mut b, inst)?;
    add_edge_vars(&mut b, tables)?;
    add_edge_routing(&mut b, inst, tables)?;
    for r in 0..inst.num_commodities() {
        for i in 0..inst.n() {
            let mut e: LinExpr = tables
                .edges()
                .incident(i)
                .into_iter()
                .map(|e| (b.x[r][e], 1.0))
                .collect();
            e.push(b.z[i], -1.0);
            b.model
                .add_constraint(&e, Sense::Le, 0.0, format!("star r={} i={}", r + 1, i + 1))?;
        }
    }
    b.warnings.push(TWO_HUB_WARNING.to_string());
    Ok(b)
}

/// CF_S / FZ_S master: `z`, `y` (real edges and `y_tilde`), `eta >= 0`,
/// objective `sum f z + sum eta`, linking rows for real edges only.
pub fn build_super_master(
    inst: &Instance,
    tables: &CostTables,
    variant: ScheduleVariant,
    opts: BuildOptions,
) -> Result<BuiltModel> {
    let kind = match variant {
        ScheduleVariant::Cfs => FormulationKind::CfS,
        ScheduleVariant::Fzs => FormulationKind::FzS,
    };
    let mut b = BuiltModel::empty(kind, tables);
    add_hub_vars(&mut b, inst)?;
    add_edge_vars(&mut b, tables)?;
    b.y_tilde = Some(b.model.add_var("y_tilde", 0.0, 1.0, true, 0.0)?);
    for r in 0..inst.num_commodities() {
        let v = b
            .model
            .add_var(&format!("eta_{}", r + 1), 0.0, f64::INFINITY, false, 1.0)?;
        b.eta.push(v);
    }
    add_linking(&mut b, tables)?;
    let schedule = SortedSchedule::build(tables, variant, opts.policy);
    if opts.seed_cuts {
        for r in 0..inst.num_commodities() {
            let cut = separation::cut_at(&schedule, r, 0);
            let row = cut.to_row(&b);
            b.model.add_constraint(
                &row.terms.into_iter().collect(),
                row.sense,
                row.rhs,
                format!("super r={} t=1", r + 1),
            )?;
        }
    }
    if kind == FormulationKind::CfS {
        b.warnings.push(TWO_HUB_WARNING.to_string());
    }
    b.schedule = Some(schedule);
    Ok(b)
}
