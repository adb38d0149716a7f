//! Exact separation of the supermodular rows at a fractional point: the
//! critical index against brute-force enumeration, and the resulting cut.

use hubforge::costs::{CostTables, ScheduleVariant, SingleHubPolicy, SortedSchedule};
use hubforge::instance::{generate_random, GeneratorConfig};
use hubforge::separation::{critical_index, cut_at, max_rhs_enumerated, rhs_value, separate_all};

fn main() -> hubforge::Result<()> {
    let inst = generate_random(&GeneratorConfig {
        n: 5,
        seed: 3,
        ..GeneratorConfig::default()
    });
    let tables = CostTables::build(&inst);
    let schedule = SortedSchedule::build(&tables, ScheduleVariant::Fzs, SingleHubPolicy::AllNodes);

    let z: Vec<f64> = vec![0.2, 0.5, 0.1, 0.4, 0.3];
    let y: Vec<f64> = tables.edges().iter().map(|(_, (i, j))| 0.5 * z[i].min(z[j])).collect();
    for r in 0..3 {
        let t = critical_index(&schedule, r, &z, &y);
        let (te, se) = max_rhs_enumerated(&schedule, r, &z, &y);
        println!(
            "r={}: critical index {} (S = {:.4}), enumeration {} (S = {:.4})",
            r + 1,
            t + 1,
            rhs_value(&schedule, r, t, &z, &y)?,
            te + 1,
            se
        );
    }
    println!("{:?}", cut_at(&schedule, 0, critical_index(&schedule, 0, &z, &y)));

    let eta = vec![0.0; inst.num_commodities()];
    let (cuts, stats) = separate_all(&schedule, &z, &y, &eta, 1e-6);
    println!("{} of {} commodities violated, deepest {:.4}", stats.emitted, stats.scanned, stats.max_violation);
    println!("first cut: r={} t={}", cuts[0].r + 1, cuts[0].t + 1);
    Ok(())
}
