//! Generic mixed-integer linear model: named bounded variables, a minimization
//! objective and canonicalized linear rows. Append-only; branching works through
//! bound changes in the LP engine rather than by editing the model.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Coefficients smaller than this in magnitude are dropped on insertion.
pub const ZERO_DROP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VarRef {
    pub id: usize,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn mps_code(self) -> &'static str {
        match self {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        }
    }
}

/// A list of `(variable id, coefficient)` terms. Duplicates are allowed until
/// the expression is stored in a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr::default()
    }

    pub fn term(mut self, var: usize, coeff: f64) -> Self {
        self.terms.push((var, coeff));
        self
    }

    pub fn push(&mut self, var: usize, coeff: f64) {
        self.terms.push((var, coeff));
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl FromIterator<(usize, f64)> for LinExpr {
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        LinExpr {
            terms: iter.into_iter().collect(),
        }
    }
}

/// Sorts by variable id, merges duplicates and drops near-zero coefficients.
pub fn canonicalize(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t = terms.to_vec();
    t.sort_by_key(|&(v, _)| v);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (v, c) in t {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|&(_, c)| c.abs() >= ZERO_DROP);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// Provenance, e.g. `"route-all r=7"`.
    pub tag: String,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    vars: Vec<VarRef>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    names: HashMap<String, usize>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    /// Registers a variable and its objective coefficient; returns its id.
    pub fn add_var(
        &mut self,
        name: &str,
        lower: f64,
        upper: f64,
        integral: bool,
        obj: f64,
    ) -> Result<usize> {
        if self.names.contains_key(name) {
            return Err(Error::DuplicateVar(name.to_string()));
        }
        if !(lower <= upper) {
            return Err(Error::InvertedBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        let id = self.vars.len();
        self.vars.push(VarRef {
            id,
            name: name.to_string(),
            lower,
            upper,
            integral,
        });
        self.objective.push(obj);
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    /// Appends a canonicalized row; returns its id.
    pub fn add_constraint(
        &mut self,
        expr: &LinExpr,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<usize> {
        if let Some(&(v, _)) = expr.terms.iter().find(|&&(v, _)| v >= self.vars.len()) {
            return Err(Error::UnknownVar(v));
        }
        self.constraints.push(Constraint {
            terms: canonicalize(&expr.terms),
            sense,
            rhs,
            tag: tag.into(),
        });
        Ok(self.constraints.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    pub fn vars(&self) -> &[VarRef] {
        &self.vars
    }

    pub fn var(&self, id: usize) -> &VarRef {
        &self.vars[id]
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: usize) -> &Constraint {
        &self.constraints[id]
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integral)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x` and the tag of the worst row (or
    /// variable name for bounds).
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for v in &self.vars {
            let viol = (v.lower - x[v.id]).max(x[v.id] - v.upper).max(0.0);
            if viol > worst.0 {
                worst = (viol, Some(v.name.clone()));
            }
        }
        for c in &self.constraints {
            let viol = c.violation(x);
            if viol > worst.0 {
                worst = (viol, Some(c.tag.clone()));
            }
        }
        worst
    }

    /// Copy with every integrality mark cleared; bounds are kept.
    pub fn relax(&self) -> Model {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.integral = false;
        }
        m
    }

    /// One-line size summary.
    pub fn stats_line(&self) -> String {
        let ints = self.vars.iter().filter(|v| v.integral).count();
        format!(
            "vars={} int={} constraints={} nonzeros={}",
            self.num_vars(),
            ints,
            self.num_constraints(),
            self.num_nonzeros()
        )
    }

    /// Free-format MPS. Rows are named `R<id>` (1-based), the objective `OBJ`.
    /// Integral variables are wrapped in `INTORG`/`INTEND` markers and always
    /// carry explicit bounds.
    pub fn export_mps(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME {name}");
        let _ = writeln!(s, "ROWS");
        let _ = writeln!(s, " N OBJ");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, " {} R{}", c.sense.mps_code(), k + 1);
        }

        let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (k, c) in self.constraints.iter().enumerate() {
            for &(v, a) in &c.terms {
                col_entries[v].push((k, a));
            }
        }
        let _ = writeln!(s, "COLUMNS");
        let mut in_int = false;
        let mut marker = 0;
        for v in &self.vars {
            if v.integral != in_int {
                let tag = if v.integral { "INTORG" } else { "INTEND" };
                let _ = writeln!(s, "    MARKER{marker} 'MARKER' '{tag}'");
                marker += 1;
                in_int = v.integral;
            }
            let obj = self.objective[v.id];
            if obj != 0.0 || col_entries[v.id].is_empty() {
                let _ = writeln!(s, "    {} OBJ {}", v.name, obj);
            }
            for &(k, a) in &col_entries[v.id] {
                let _ = writeln!(s, "    {} R{} {}", v.name, k + 1, a);
            }
        }
        if in_int {
            let _ = writeln!(s, "    MARKER{marker} 'MARKER' 'INTEND'");
        }

        let _ = writeln!(s, "RHS");
        for (k, c) in self.constraints.iter().enumerate() {
            if c.rhs != 0.0 {
                let _ = writeln!(s, "    RHS R{} {}", k + 1, c.rhs);
            }
        }

        let _ = writeln!(s, "BOUNDS");
        for v in &self.vars {
            let (lo, up) = (v.lower, v.upper);
            if lo == up {
                let _ = writeln!(s, " FX BND {} {}", v.name, lo);
                continue;
            }
            if lo == f64::NEG_INFINITY && up == f64::INFINITY {
                let _ = writeln!(s, " FR BND {}", v.name);
                continue;
            }
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(s, " MI BND {}", v.name);
            } else if lo != 0.0 || v.integral {
                let _ = writeln!(s, " LO BND {} {}", v.name, lo);
            }
            if up != f64::INFINITY {
                let _ = writeln!(s, " UP BND {} {}", v.name, up);
            } else if v.integral {
                let _ = writeln!(s, " PL BND {}", v.name);
            }
        }
        let _ = writeln!(s, "ENDATA");
        s
    }
}
