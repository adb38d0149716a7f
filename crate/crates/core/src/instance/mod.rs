//! Problem data: nodes, unit routing costs, hub setup costs, commodities and the
//! access / interhub / distribution cost factors.
//!
//! Node and commodity indices are 0-based in memory. Every text format and every
//! report uses 1-based node numbers.

mod generate;
mod parse;

pub use generate::{
    cab_city_names, cab_style_surrogate, generate_random, surrogate_setup, GeneratorConfig,
};
pub use parse::{load_ap, load_cab, parse_canonical, to_canonical};

use crate::error::{Error, Result};

/// Tolerance used for the triangle-inequality check.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// An origin-destination pair with a demand to route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commodity {
    pub origin: usize,
    pub dest: usize,
    pub demand: f64,
}

/// A complete MA-HLP instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    cost: Vec<f64>,
    setup: Vec<f64>,
    commodities: Vec<Commodity>,
    pub alpha: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl Instance {
    /// Builds an instance from a row-major `n x n` cost matrix. Self-costs are
    /// forced to zero. Only shape errors are reported here; see [`Instance::validate`]
    /// for the full rule set.
    pub fn new(
        cost: Vec<Vec<f64>>,
        setup: Vec<f64>,
        commodities: Vec<Commodity>,
        alpha: f64,
        gamma: f64,
        theta: f64,
    ) -> Result<Self> {
        let n = cost.len();
        if cost.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance(format!(
                "cost matrix must be {n} x {n}"
            )));
        }
        if setup.len() != n {
            return Err(Error::InvalidInstance(format!(
                "expected {n} setup costs, got {}",
                setup.len()
            )));
        }
        for (r, k) in commodities.iter().enumerate() {
            if k.origin >= n || k.dest >= n {
                return Err(Error::InvalidInstance(format!(
                    "commodity {} references a node outside 1..={n}",
                    r + 1
                )));
            }
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in cost.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                flat.push(if i == j { 0.0 } else { v });
            }
        }
        Ok(Instance {
            n,
            cost: flat,
            setup,
            commodities,
            alpha,
            gamma,
            theta,
        })
    }

    /// The four-node line instance used throughout the tests and examples.
    ///
    /// Nodes sit at positions 0, 1, 2, 3 on a line, setup costs are
    /// `(10, 1, 1, 10)`, commodities are `(1,4,1)` and `(2,3,1)` and the factors are
    /// `alpha = 0.5`, `gamma = theta = 1`. Its optimum is 5 with hubs {2, 3}.
    pub fn toy4() -> Self {
        let pos = [0.0f64, 1.0, 2.0, 3.0];
        let cost = (0..4)
            .map(|i| (0..4).map(|j| (pos[i] - pos[j]).abs()).collect())
            .collect();
        let commodities = vec![
            Commodity {
                origin: 0,
                dest: 3,
                demand: 1.0,
            },
            Commodity {
                origin: 1,
                dest: 2,
                demand: 1.0,
            },
        ];
        Instance::new(cost, vec![10.0, 1.0, 1.0, 10.0], commodities, 0.5, 1.0, 1.0)
            .expect("toy4 is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    pub fn setup(&self) -> &[f64] {
        &self.setup
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn cost_row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.n..(i + 1) * self.n]
    }

    /// Copy with every setup cost multiplied by `factor`.
    pub fn scale_setup(&self, factor: f64) -> Instance {
        let mut out = self.clone();
        for f in &mut out.setup {
            *f *= factor;
        }
        out
    }

    /// Copy with the given setup vector.
    pub fn with_setup(&self, setup: Vec<f64>) -> Result<Instance> {
        if setup.len() != self.n {
            return Err(Error::InvalidInstance(format!(
                "expected {} setup costs, got {}",
                self.n,
                setup.len()
            )));
        }
        let mut out = self.clone();
        out.setup = setup;
        Ok(out)
    }

    /// Copy with different cost factors.
    pub fn with_factors(&self, alpha: f64, gamma: f64, theta: f64) -> Instance {
        let mut out = self.clone();
        out.alpha = alpha;
        out.gamma = gamma;
        out.theta = theta;
        out
    }

    /// Checks every structural rule. Fatal defects go to `errors`; triangle
    /// violations, zero costs between distinct nodes, zero demands and a
    /// disconnected commodity graph are only warnings.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let n = self.n;
        if n < 2 {
            rep.errors.push(format!("need at least 2 nodes, got {n}"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.c(i, j);
                if !v.is_finite() || v < 0.0 {
                    rep.errors
                        .push(format!("cost c[{},{}] = {v} must be finite and >= 0", i + 1, j + 1));
                } else if i != j && v == 0.0 {
                    rep.warnings
                        .push(format!("zero cost between distinct nodes {} and {}", i + 1, j + 1));
                }
            }
            if self.c(i, i) != 0.0 {
                rep.errors.push(format!("self cost c[{0},{0}] must be 0", i + 1));
            }
        }
        for (i, f) in self.setup.iter().enumerate() {
            if !f.is_finite() || *f < 0.0 {
                rep.errors
                    .push(format!("setup cost f[{}] = {f} must be finite and >= 0", i + 1));
            }
        }
        if self.commodities.is_empty() {
            rep.errors.push("no commodities".to_string());
        }
        for (r, k) in self.commodities.iter().enumerate() {
            if k.origin == k.dest {
                rep.errors
                    .push(format!("commodity {} has origin equal to destination", r + 1));
            }
            if !k.demand.is_finite() || k.demand < 0.0 {
                rep.errors
                    .push(format!("commodity {} has invalid demand {}", r + 1, k.demand));
            } else if k.demand == 0.0 {
                rep.warnings.push(format!("commodity {} has zero demand", r + 1));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            rep.errors.push("alpha must lie in [0, 1]".to_string());
        }
        if !(self.gamma > self.alpha) {
            rep.errors.push("gamma must exceed alpha".to_string());
        }
        if !(self.theta > self.alpha) {
            rep.errors.push("theta must exceed alpha".to_string());
        }

        let mut violations = 0usize;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i == k || i == j || j == k {
                        continue;
                    }
                    if self.c(i, k) > self.c(i, j) + self.c(j, k) + TRIANGLE_TOL {
                        if violations < 20 {
                            rep.warnings.push(format!(
                                "triangle inequality violated: c[{a},{c}] > c[{a},{b}] + c[{b},{c}]",
                                a = i + 1,
                                b = j + 1,
                                c = k + 1
                            ));
                        }
                        violations += 1;
                    }
                }
            }
        }
        if violations > 20 {
            rep.warnings
                .push(format!("{} further triangle violations omitted", violations - 20));
        }

        if n >= 2 && !self.commodity_graph_connected() {
            rep.warnings
                .push("graph induced by positive-demand commodities is disconnected".to_string());
        }
        rep
    }

    /// Connectivity of the graph whose nodes are the endpoints of positive-demand
    /// commodities and whose edges are those commodities.
    fn commodity_graph_connected(&self) -> bool {
        let n = self.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut touched = vec![false; n];
        for k in &self.commodities {
            if k.demand > 0.0 && k.origin < n && k.dest < n {
                touched[k.origin] = true;
                touched[k.dest] = true;
                let a = find(&mut parent, k.origin);
                let b = find(&mut parent, k.dest);
                parent[a] = b;
            }
        }
        let mut root = None;
        for i in 0..n {
            if touched[i] {
                let r = find(&mut parent, i);
                match root {
                    None => root = Some(r),
                    Some(r0) if r0 != r => return false,
                    _ => {}
                }
            }
        }
        true
    }
}

/// Outcome of [`Instance::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    /// Turns the first fatal defect into an error.
    pub fn into_result(self) -> Result<Vec<String>> {
        match self.errors.into_iter().next() {
            Some(e) => Err(Error::InvalidInstance(e)),
            None => Ok(self.warnings),
        }
    }
}
