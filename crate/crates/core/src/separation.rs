//! Exact separation of the supermodular rows of `CF_S` / `FZ_S`.
//!
//! For commodity `r` with schedule `v_1 <= ... <= v_T` (sentinel last) and a
//! point `(z, y)`, the row at index `t` reads
//! `eta_r >= v_t + sum_{h < t} (v_h - v_t) * w_h` where `w_h` is the `y` or `z`
//! variable of entry `h`. Its right-hand side at the point is
//! `S_t = v_t (1 - P_{t-1}) + sum_{h < t} v_h m_h` with prefix mass `P`.
//! `S_t` is maximized at the first index whose prefix mass reaches 1.

use crate::costs::{Entry, EntryKind, SortedSchedule};
use crate::error::{Error, Result};
use crate::formulations::BuiltModel;
use crate::lp::RowSpec;
use crate::model::Sense;
use std::io::Write;
use std::time::{Duration, Instant};

/// Slack on the prefix-mass test `P_t >= 1`.
pub const MASS_TOL: f64 = 1e-12;

/// One supermodular row.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub r: usize,
    /// 0-based schedule index.
    pub t: usize,
    /// `v_t`, the row's constant.
    pub value: f64,
    /// `(kind, reference, v_h - v_t)` for the entries before `t` with a
    /// strictly smaller value.
    pub terms: Vec<(EntryKind, usize, f64)>,
    /// `S_t - eta_r` at the separated point (0 when built without a point).
    pub violation: f64,
}

impl Cut {
    /// `eta_r + sum (v_t - v_h) w_h >= v_t`.
    pub fn to_row(&self, built: &BuiltModel) -> RowSpec {
        let mut terms = vec![(built.eta[self.r], 1.0)];
        for &(kind, reference, coef) in &self.terms {
            let var = match kind {
                EntryKind::Z => built.z[reference],
                EntryKind::Y => built.y[reference],
            };
            terms.push((var, -coef));
        }
        RowSpec {
            terms,
            sense: Sense::Ge,
            rhs: self.value,
        }
    }

    /// Right-hand side of `eta_r >= ...` at `(z, y)`.
    pub fn rhs_at(&self, z: &[f64], y: &[f64]) -> f64 {
        self.value
            + self
                .terms
                .iter()
                .map(|&(kind, reference, coef)| {
                    coef * match kind {
                        EntryKind::Z => z[reference],
                        EntryKind::Y => y[reference],
                    }
                })
                .sum::<f64>()
    }
}

/// Mass of one entry at `(z, y)`; the sentinel carries none.
pub fn entry_mass(schedule: &SortedSchedule, e: &Entry, z: &[f64], y: &[f64]) -> f64 {
    if schedule.is_sentinel(e) {
        return 0.0;
    }
    match e.kind {
        EntryKind::Z => z[e.reference],
        EntryKind::Y => y[e.reference],
    }
}

/// Row of commodity `r` at index `t`, independent of any point.
pub fn cut_at(schedule: &SortedSchedule, r: usize, t: usize) -> Cut {
    let entries = schedule.entries(r);
    let vt = entries[t].value;
    let terms = entries[..t]
        .iter()
        .filter(|e| e.value < vt)
        .map(|e| (e.kind, e.reference, e.value - vt))
        .collect();
    Cut {
        r,
        t,
        value: vt,
        terms,
        violation: 0.0,
    }
}

/// `S_t` for commodity `r` at `(z, y)`.
pub fn rhs_value(schedule: &SortedSchedule, r: usize, t: usize, z: &[f64], y: &[f64]) -> Result<f64> {
    let entries = schedule.entries(r);
    if t >= entries.len() {
        return Err(Error::OutOfRange(format!(
            "index {t} beyond schedule of length {}",
            entries.len()
        )));
    }
    let mut prefix = 0.0;
    let mut acc = 0.0;
    for e in &entries[..t] {
        let m = entry_mass(schedule, e, z, y);
        prefix += m;
        acc += e.value * m;
    }
    Ok(entries[t].value * (1.0 - prefix) + acc)
}

/// First index whose inclusive prefix mass reaches 1, or the sentinel.
pub fn critical_index(schedule: &SortedSchedule, r: usize, z: &[f64], y: &[f64]) -> usize {
    let entries = schedule.entries(r);
    let mut prefix = 0.0;
    for (t, e) in entries.iter().enumerate() {
        prefix += entry_mass(schedule, e, z, y);
        if prefix >= 1.0 - MASS_TOL {
            return t;
        }
    }
    entries.len() - 1
}

/// Maximizer of `S_t` by full enumeration (smallest index on ties).
pub fn max_rhs_enumerated(schedule: &SortedSchedule, r: usize, z: &[f64], y: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for t in 0..schedule.entries(r).len() {
        let s = rhs_value(schedule, r, t, z, y).expect("index in range");
        if s > best.1 {
            best = (t, s);
        }
    }
    best
}

/// The deepest row of commodity `r` if it cuts off `eta` by more than `tol`.
pub fn most_violated(
    schedule: &SortedSchedule,
    r: usize,
    z: &[f64],
    y: &[f64],
    eta: f64,
    tol: f64,
) -> Option<Cut> {
    let t = critical_index(schedule, r, z, y);
    let mut cut = cut_at(schedule, r, t);
    let s = cut.rhs_at(z, y);
    if s - eta > tol {
        cut.violation = s - eta;
        Some(cut)
    } else {
        None
    }
}

/// Work done by one separation pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeparationStats {
    pub scanned: usize,
    pub emitted: usize,
    pub max_violation: f64,
    pub elapsed: Duration,
}

/// One pass over all commodities. Cuts are ordered by decreasing violation,
/// then commodity.
pub fn separate_all(
    schedule: &SortedSchedule,
    z: &[f64],
    y: &[f64],
    eta: &[f64],
    tol: f64,
) -> (Vec<Cut>, SeparationStats) {
    let start = Instant::now();
    let mut cuts: Vec<Cut> = (0..schedule.num_commodities())
        .filter_map(|r| most_violated(schedule, r, z, y, eta[r], tol))
        .collect();
    cuts.sort_by(|a, b| b.violation.total_cmp(&a.violation).then(a.r.cmp(&b.r)));
    let stats = SeparationStats {
        scanned: schedule.num_commodities(),
        emitted: cuts.len(),
        max_violation: cuts.first().map_or(0.0, |c| c.violation),
        elapsed: start.elapsed(),
    };
    (cuts, stats)
}

/// A row of the cut log.
#[derive(Debug, Clone, PartialEq)]
pub struct CutLogRow {
    pub pass: usize,
    pub r: usize,
    pub t: usize,
    pub value: f64,
    pub violation: f64,
}

/// Writes `pass,r,t,value,violation` with 1-based `r` and `t`.
pub fn write_cut_log<W: Write>(rows: &[CutLogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pass", "r", "t", "value", "violation"])?;
    for row in rows {
        w.write_record([
            row.pass.to_string(),
            (row.r + 1).to_string(),
            (row.t + 1).to_string(),
            row.value.to_string(),
            row.violation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{CostTables, ScheduleVariant, SingleHubPolicy};
    use crate::instance::{generate_random, GeneratorConfig, Instance};
    use proptest::prelude::*;

    fn toy_schedule(policy: SingleHubPolicy) -> (CostTables, SortedSchedule) {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let s = SortedSchedule::build(&t, ScheduleVariant::Fzs, policy);
        (t, s)
    }

    #[test]
    fn toy_half_hubs() {
        for policy in [SingleHubPolicy::Literal, SingleHubPolicy::AllNodes] {
            let (_, s) = toy_schedule(policy);
            let z = [0.0, 0.5, 0.5, 0.0];
            let y = [0.0; 6];
            let cut = most_violated(&s, 0, &z, &y, 0.0, 1e-6).unwrap();
            assert!((cut.violation - 3.0).abs() < 1e-12);
            let (_, best) = max_rhs_enumerated(&s, 0, &z, &y);
            assert!((best - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_mass_hits_sentinel() {
        let (t, s) = toy_schedule(SingleHubPolicy::AllNodes);
        let z = [0.0; 4];
        let y = [0.0; 6];
        assert_eq!(critical_index(&s, 0, &z, &y), s.entries(0).len() - 1);
        let cut = most_violated(&s, 0, &z, &y, 0.0, 1e-6).unwrap();
        assert_eq!(cut.value, t.big_m(0));
    }

    #[test]
    fn satisfied_point_yields_nothing() {
        let (_, s) = toy_schedule(SingleHubPolicy::AllNodes);
        let z = [0.0, 1.0, 1.0, 0.0];
        let mut y = [0.0; 6];
        y[crate::costs::EdgeIndex::new(4).id(1, 2)] = 1.0;
        let (_, best) = max_rhs_enumerated(&s, 0, &z, &y);
        assert!(most_violated(&s, 0, &z, &y, best, 1e-6).is_none());
        assert!(most_violated(&s, 0, &z, &y, best - 1e-3, 1e-6).is_some());
        let t = critical_index(&s, 0, &z, &y);
        assert_eq!(rhs_value(&s, 0, t, &z, &y).unwrap(), best);
    }

    #[test]
    fn row_matches_rhs() {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let b = crate::formulations::build(&inst, &t, crate::formulations::FormulationKind::FzS)
            .unwrap();
        let s = b.schedule.as_ref().unwrap();
        let z = [0.3, 0.2, 0.6, 0.1];
        let y = [0.1, 0.0, 0.2, 0.05, 0.0, 0.3];
        for r in 0..2 {
            for tt in 0..s.entries(r).len() {
                let cut = cut_at(s, r, tt);
                let direct = rhs_value(s, r, tt, &z, &y).unwrap();
                assert!((cut.rhs_at(&z, &y) - direct).abs() < 1e-12);
                let row = cut.to_row(&b);
                let mut x = vec![0.0; b.model.num_vars()];
                for i in 0..4 {
                    x[b.z[i]] = z[i];
                }
                for e in 0..6 {
                    x[b.y[e]] = y[e];
                }
                x[b.eta[r]] = direct;
                let act: f64 = row.terms.iter().map(|&(v, a)| a * x[v]).sum();
                assert!((act - row.rhs).abs() < 1e-12);
            }
        }
        assert!(rhs_value(s, 0, 99, &z, &y).is_err());
    }

    #[test]
    fn cut_log_csv() {
        let rows = vec![CutLogRow {
            pass: 1,
            r: 0,
            t: 2,
            value: 2.5,
            violation: 0.25,
        }];
        let mut buf = Vec::new();
        write_cut_log(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pass,r,t,value,violation\n1,1,3,2.5,0.25\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn critical_index_is_exact(
            seed in 0u64..10_000,
            n in 3usize..7,
            cfs in any::<bool>(),
            pts in proptest::collection::vec(0.0f64..1.0, 40),
            scale in 0.0f64..2.0,
        ) {
            let cfg = GeneratorConfig { n, seed, density: 0.6, ..Default::default() };
            let inst = generate_random(&cfg);
            let t = CostTables::build(&inst);
            let variant = if cfs { ScheduleVariant::Cfs } else { ScheduleVariant::Fzs };
            let s = SortedSchedule::build(&t, variant, SingleHubPolicy::AllNodes);
            let ne = t.edges().len();
            let z: Vec<f64> = (0..n).map(|i| pts[i % 40] * scale / n as f64 * 2.0).collect();
            let y: Vec<f64> = (0..ne).map(|e| pts[(n + e) % 40] * scale / ne as f64).collect();
            for r in 0..inst.num_commodities() {
                let tt = critical_index(&s, r, &z, &y);
                let got = rhs_value(&s, r, tt, &z, &y).unwrap();
                let (_, best) = max_rhs_enumerated(&s, r, &z, &y);
                prop_assert!((got - best).abs() <= 1e-9 * best.abs().max(1.0));
            }
        }
    }
}
