//! Solve the four-node toy instance with the strengthened supermodular
//! formulation and print the result block and routing.

use hubforge::bnc::{self, SolveParams};
use hubforge::cli::routing_for_hubs;
use hubforge::costs::CostTables;
use hubforge::formulations::{self, FormulationKind};
use hubforge::instance::Instance;

fn main() -> hubforge::Result<()> {
    let inst = Instance::toy4();
    let tables = CostTables::build(&inst);
    let built = formulations::build(&inst, &tables, FormulationKind::FzS)?;
    println!("{}", built.model.stats_line());

    let res = bnc::solve(&built, &SolveParams::default())?;
    print!("{}", res.summary());

    let routing = routing_for_hubs(&tables, &res.hubs)?;
    routing.write_csv(&tables, std::io::stdout())?;
    Ok(())
}
