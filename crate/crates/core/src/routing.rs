//! Explicit routings recovered from `(z, y)` points of the supermodular
//! masters, and a certificate check against the `FZ_P` rows.

use crate::costs::{CostTables, EntryKind, SortedSchedule};
use crate::error::{Error, Result};
use crate::formulations::{BuiltModel, FormulationKind};
use crate::separation::{critical_index, entry_mass};
use std::collections::BTreeMap;
use std::io::Write;

/// Activity threshold for integer points.
const ON: f64 = 0.5;
/// Row tolerance of [`certify`].
pub const CERTIFY_TOL: f64 = 1e-7;

/// Routing of one commodity.
#[derive(Debug, Clone, PartialEq)]
pub struct CommodityRoute {
    /// `x_re > 0` by edge id, ascending.
    pub fractions: Vec<(usize, f64)>,
    /// Path `(i, j)` of an integer recovery (0-based, `i == j` for a single hub).
    pub path: Option<(usize, usize)>,
    /// Sum of schedule values times routed mass.
    pub cost: f64,
    /// Part of the unit demand was left on the fictitious edge.
    pub sentinel_routed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Routing {
    pub routes: Vec<CommodityRoute>,
    pub total_cost: f64,
}

impl Routing {
    fn from_routes(routes: Vec<CommodityRoute>) -> Self {
        let total_cost = routes.iter().map(|r| r.cost).sum();
        Routing { routes, total_cost }
    }

    /// Writes `r,e,fraction,cost` with `cost = Fbar_re * fraction`; edges are
    /// labelled `i-j` with 1-based nodes.
    pub fn write_csv<W: Write>(&self, tables: &CostTables, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "e", "fraction", "cost"])?;
        for (r, route) in self.routes.iter().enumerate() {
            for &(e, x) in &route.fractions {
                w.write_record([
                    (r + 1).to_string(),
                    tables.edges().label(e),
                    x.to_string(),
                    (tables.fbar(r, e) * x).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Cheapest path through the endpoints of `e`: both directions and the two
/// single-hub options.
fn best_path_on_edge(tables: &CostTables, r: usize, e: usize) -> (usize, usize) {
    let (a, b) = tables.edges().endpoints(e);
    let options = [(a, b), (b, a), (a, a), (b, b)];
    let mut best = options[0];
    for &(i, j) in &options[1..] {
        if tables.c(r, i, j) < tables.c(r, best.0, best.1) {
            best = (i, j);
        }
    }
    best
}

/// Edge carrying the single-hub mass of node `i`: the anchor when its far end
/// is an open hub on an active edge, otherwise the lowest-index active edge
/// from `i` to an open hub, otherwise the anchor.
fn single_hub_edge(tables: &CostTables, r: usize, i: usize, z: &[f64], y: &[f64]) -> usize {
    let anchor = tables.anchor(r, i);
    let partner = tables.anchor_partner(r, i);
    if z[partner] > ON && y[anchor] > ON {
        return anchor;
    }
    tables
        .edges()
        .incident(i)
        .into_iter()
        .find(|&e| {
            let (a, b) = tables.edges().endpoints(e);
            let other = if a == i { b } else { a };
            z[other] > ON && y[e] > ON
        })
        .unwrap_or(anchor)
}

/// Integer recovery: each commodity follows the first active schedule entry
/// (an edge entry wins a tie in value against a single-hub entry).
pub fn recover_integer(
    schedule: &SortedSchedule,
    tables: &CostTables,
    z: &[f64],
    y: &[f64],
) -> Result<Routing> {
    let mut routes = Vec::with_capacity(schedule.num_commodities());
    for r in 0..schedule.num_commodities() {
        let entries = schedule.entries(r);
        let first = entries
            .iter()
            .position(|e| entry_mass(schedule, e, z, y) > ON)
            .ok_or_else(|| {
                Error::InfeasibleHubs(format!("commodity {} reaches no active entry", r + 1))
            })?;
        let v = entries[first].value;
        let chosen = entries[first..]
            .iter()
            .take_while(|e| e.value == v)
            .find(|e| e.kind == EntryKind::Y && entry_mass(schedule, e, z, y) > ON)
            .unwrap_or(&entries[first]);
        let (edge, path) = match chosen.kind {
            EntryKind::Y => (chosen.reference, best_path_on_edge(tables, r, chosen.reference)),
            EntryKind::Z => {
                let i = chosen.reference;
                (single_hub_edge(tables, r, i, z, y), (i, i))
            }
        };
        routes.push(CommodityRoute {
            fractions: vec![(edge, 1.0)],
            path: Some(path),
            cost: chosen.value,
            sentinel_routed: false,
        });
    }
    Ok(Routing::from_routes(routes))
}

/// Fractional recovery at a converged root: entries before the critical index
/// route their full mass (single-hub mass on the anchor), the critical entry
/// takes the remainder.
pub fn recover_fractional(
    schedule: &SortedSchedule,
    tables: &CostTables,
    z: &[f64],
    y: &[f64],
) -> Routing {
    let mut routes = Vec::with_capacity(schedule.num_commodities());
    for r in 0..schedule.num_commodities() {
        let entries = schedule.entries(r);
        let tbar = critical_index(schedule, r, z, y);
        let mut x: BTreeMap<usize, f64> = BTreeMap::new();
        let mut prefix = 0.0;
        let mut cost = 0.0;
        let mut sentinel_routed = false;
        for (t, e) in entries[..=tbar].iter().enumerate() {
            let mass = if t < tbar {
                entry_mass(schedule, e, z, y)
            } else {
                1.0 - prefix
            };
            prefix += mass;
            if mass == 0.0 {
                continue;
            }
            cost += e.value * mass;
            if schedule.is_sentinel(e) {
                sentinel_routed = mass > 0.0;
                continue;
            }
            let edge = match e.kind {
                EntryKind::Y => e.reference,
                EntryKind::Z => tables.anchor(r, e.reference),
            };
            *x.entry(edge).or_insert(0.0) += mass;
        }
        routes.push(CommodityRoute {
            fractions: x.into_iter().filter(|&(_, v)| v != 0.0).collect(),
            path: None,
            cost,
            sentinel_routed,
        });
    }
    Routing::from_routes(routes)
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub ok: bool,
    /// Tags of violated rows plus any objective mismatch.
    pub violations: Vec<String>,
}

/// Checks `(z, y, x)` against every row of the `FZ_P` model `fzp`, that `x`
/// stays in `[0, 1]`, and that the routing cost equals `sum Fbar x`.
pub fn certify(routing: &Routing, fzp: &BuiltModel, z: &[f64], y: &[f64]) -> Result<Certificate> {
    if fzp.kind != FormulationKind::FzP {
        return Err(Error::Internal(format!("certify needs FZ_P, got {}", fzp.kind)));
    }
    let tables = &fzp.tables;
    if routing.routes.len() != tables.num_commodities() {
        return Err(Error::Internal(format!(
            "routing has {} commodities, model has {}",
            routing.routes.len(),
            tables.num_commodities()
        )));
    }
    let mut point = vec![0.0; fzp.model.num_vars()];
    for (i, &v) in fzp.z.iter().enumerate() {
        point[v] = z[i];
    }
    for (e, &v) in fzp.y.iter().enumerate() {
        point[v] = y[e];
    }
    let mut violations = Vec::new();
    let mut fbar_cost = 0.0;
    for (r, route) in routing.routes.iter().enumerate() {
        for &(e, x) in &route.fractions {
            if !(-CERTIFY_TOL..=1.0 + CERTIFY_TOL).contains(&x) {
                violations.push(format!("x r={} e={} = {x} outside [0, 1]", r + 1, tables.edges().label(e)));
            }
            point[fzp.x[r][e]] += x;
            fbar_cost += tables.fbar(r, e) * x;
        }
    }
    for c in fzp.model.constraints() {
        let v = c.violation(&point);
        if v > CERTIFY_TOL {
            violations.push(format!("{} violated by {v:.3e}", c.tag));
        }
    }
    let gap = (fbar_cost - routing.total_cost).abs();
    if gap > CERTIFY_TOL * (1.0 + fbar_cost.abs()) {
        violations.push(format!(
            "routing cost {} differs from sum Fbar x = {fbar_cost}",
            routing.total_cost
        ));
    }
    Ok(Certificate {
        ok: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnc::{self, SolveParams};
    use crate::costs::{ScheduleVariant, SingleHubPolicy};
    use crate::formulations;
    use crate::instance::{generate_random, GeneratorConfig, Instance};
    use crate::oracle;

    fn toy() -> (CostTables, SortedSchedule, BuiltModel) {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let s = SortedSchedule::build(&t, ScheduleVariant::Fzs, SingleHubPolicy::AllNodes);
        let fzp = formulations::build(&inst, &t, FormulationKind::FzP).unwrap();
        (t, s, fzp)
    }

    fn induced(t: &CostTables, z: &[f64]) -> Vec<f64> {
        t.edges()
            .iter()
            .map(|(_, (i, j))| if z[i] > ON && z[j] > ON { 1.0 } else { 0.0 })
            .collect()
    }

    #[test]
    fn toy_hubs_two_three() {
        let (t, s, fzp) = toy();
        let z = [0.0, 1.0, 1.0, 0.0];
        let y = induced(&t, &z);
        let rt = recover_integer(&s, &t, &z, &y).unwrap();
        let e23 = t.edges().id(1, 2);
        assert_eq!(rt.routes[0].fractions, vec![(e23, 1.0)]);
        assert_eq!(rt.routes[0].path, Some((1, 2)));
        assert!((rt.routes[0].cost - 2.5).abs() < 1e-12);
        assert!((rt.routes[1].cost - 0.5).abs() < 1e-12);
        assert!((rt.total_cost - 3.0).abs() < 1e-12);
        let cert = certify(&rt, &fzp, &z, &y).unwrap();
        assert!(cert.ok, "{:?}", cert.violations);
        // integer points degenerate to the same routing
        let fr = recover_fractional(&s, &t, &z, &y);
        assert_eq!(fr.routes[0].fractions, rt.routes[0].fractions);
        assert!((fr.total_cost - rt.total_cost).abs() < 1e-12);
    }

    #[test]
    fn no_active_entry_is_an_error() {
        let (t, s, _) = toy();
        let z = [0.0; 4];
        let y = vec![0.0; t.edges().len()];
        assert!(matches!(
            recover_integer(&s, &t, &z, &y),
            Err(Error::InfeasibleHubs(_))
        ));
    }

    #[test]
    fn perturbed_x_fails_certify() {
        let (t, s, fzp) = toy();
        let z = [0.0, 1.0, 1.0, 0.0];
        let y = induced(&t, &z);
        let mut rt = recover_integer(&s, &t, &z, &y).unwrap();
        rt.routes[0].fractions[0].1 += 0.1;
        let cert = certify(&rt, &fzp, &z, &y).unwrap();
        assert!(!cert.ok);
        assert!(cert.violations.iter().any(|v| v.starts_with("route-all r=1")));
    }

    #[test]
    fn single_hub_choice_uses_an_open_edge() {
        // all hubs open at zero setup: every commodity gets its cheapest value
        let inst = generate_random(&GeneratorConfig {
            n: 5,
            seed: 11,
            setup_max: 0.0,
            ..Default::default()
        });
        let t = CostTables::build(&inst);
        let s = SortedSchedule::build(&t, ScheduleVariant::Fzs, SingleHubPolicy::AllNodes);
        let fzp = formulations::build(&inst, &t, FormulationKind::FzP).unwrap();
        let z = vec![1.0; 5];
        let y = induced(&t, &z);
        let rt = recover_integer(&s, &t, &z, &y).unwrap();
        for (r, route) in rt.routes.iter().enumerate() {
            assert!((route.cost - s.entries(r)[0].value).abs() < 1e-12);
        }
        assert!(certify(&rt, &fzp, &z, &y).unwrap().ok);
    }

    #[test]
    fn toy_half_point_fills_anchors() {
        let (t, s, _) = toy();
        let z = [0.0, 0.5, 0.5, 0.0];
        let y = vec![0.0; t.edges().len()];
        let fr = recover_fractional(&s, &t, &z, &y);
        let mut expect: Vec<(usize, f64)> =
            vec![(t.anchor(0, 1), 0.5), (t.anchor(0, 2), 0.5)];
        expect.sort_by_key(|p| p.0);
        assert_eq!(fr.routes[0].fractions, expect);
        assert!(!fr.routes[0].sentinel_routed);
        assert!((fr.routes[0].cost - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sentinel_routing_is_flagged() {
        let (t, s, _) = toy();
        let z = [0.0, 0.2, 0.0, 0.0];
        let y = vec![0.0; t.edges().len()];
        let fr = recover_fractional(&s, &t, &z, &y);
        assert!(fr.routes.iter().all(|r| r.sentinel_routed));
    }

    #[test]
    fn converged_root_matches_objective() {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let built = formulations::build(&inst, &t, FormulationKind::FzS).unwrap();
        let rb = bnc::root_bound(&built, &SolveParams::default()).unwrap();
        let z = built.z_values(&rb.x);
        let y = built.y_values(&rb.x);
        let fr = recover_fractional(built.schedule.as_ref().unwrap(), &t, &z, &y);
        let setup: f64 = inst.setup().iter().zip(&z).map(|(f, v)| f * v).sum();
        assert!((fr.total_cost + setup - rb.bound).abs() < 1e-9);
    }

    #[test]
    fn master_optimum_certifies() {
        for seed in 0..8 {
            let inst = generate_random(&GeneratorConfig {
                n: 5,
                seed,
                ..Default::default()
            });
            if !oracle::two_hub_optimum_exists(&inst).unwrap() {
                continue;
            }
            let t = CostTables::build(&inst);
            let built = formulations::build(&inst, &t, FormulationKind::FzS).unwrap();
            let res = bnc::solve(&built, &SolveParams::default()).unwrap();
            let x = res.incumbent.unwrap();
            let (z, y) = (built.z_values(&x), built.y_values(&x));
            let rt = recover_integer(built.schedule.as_ref().unwrap(), &t, &z, &y).unwrap();
            let eta: f64 = built.eta.iter().map(|&v| x[v]).sum();
            assert!((rt.total_cost - eta).abs() < 1e-6, "seed {seed}");
            let fzp = formulations::build(&inst, &t, FormulationKind::FzP).unwrap();
            let cert = certify(&rt, &fzp, &z, &y).unwrap();
            assert!(cert.ok, "seed {seed}: {:?}", cert.violations);
        }
    }
}
