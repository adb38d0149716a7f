//! Preprocessing for one commodity: edge values, the strictly useful edges,
//! the excluded single hub, anchors, and both sorted schedules.

use hubforge::costs::{CostTables, ScheduleVariant, SingleHubPolicy, SortedSchedule};
use hubforge::instance::Instance;

fn main() -> hubforge::Result<()> {
    let inst = Instance::toy4();
    let tables = CostTables::build(&inst);
    let edges = tables.edges();
    for r in 0..tables.num_commodities() {
        let c = inst.commodities()[r];
        println!("commodity {} ({} -> {}), demand {}", r + 1, c.origin + 1, c.dest + 1, c.demand);
        tables.write_edge_csv(r, std::io::stdout())?;
        println!("U^r: {:?}", tables.ur(r).map(|i| i + 1));
        for i in tables.vr(r) {
            println!("anchor of node {}: {}", i + 1, edges.label(tables.anchor(r, i)));
        }
        println!("big M: {}", tables.big_m(r));
    }
    tables.check_anchors()?;

    for (variant, policy) in [
        (ScheduleVariant::Cfs, SingleHubPolicy::AllNodes),
        (ScheduleVariant::Fzs, SingleHubPolicy::AllNodes),
        (ScheduleVariant::Fzs, SingleHubPolicy::Literal),
    ] {
        let schedule = SortedSchedule::build(&tables, variant, policy);
        println!("{variant:?} / {policy:?}, commodity 1:");
        schedule.write_csv(0, edges, std::io::stdout())?;
    }
    Ok(())
}
