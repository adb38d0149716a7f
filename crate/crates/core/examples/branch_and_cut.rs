//! Branch-and-cut on a random instance under each node order and branching
//! rule, then the progress log of one run.

use hubforge::bnc::{self, BranchRule, NodeOrder, SolveParams};
use hubforge::costs::CostTables;
use hubforge::formulations::{self, BuildOptions, FormulationKind};
use hubforge::instance::{generate_random, GeneratorConfig};

fn main() -> hubforge::Result<()> {
    let inst = generate_random(&GeneratorConfig {
        n: 8,
        seed: 21,
        setup_max: 1500.0,
        ..GeneratorConfig::default()
    });
    let tables = CostTables::build(&inst);
    let opts = BuildOptions {
        seed_cuts: true,
        ..BuildOptions::default()
    };
    let built = formulations::build_with(&inst, &tables, FormulationKind::FzS, opts)?;

    let root = bnc::root_bound(&built, &SolveParams::default())?;
    println!("root bound {:.4} after {} passes, {} cuts", root.bound, root.passes, root.cuts);

    for order in [NodeOrder::BestBound, NodeOrder::DepthFirst] {
        for branching in [BranchRule::MostFractional, BranchRule::PseudoCost] {
            let params = SolveParams {
                order,
                branching,
                ..SolveParams::default()
            };
            let res = bnc::solve(&built, &params)?;
            println!(
                "{order:?}/{branching:?}: {} {:.4}, {} nodes, {} cuts, hubs {:?}",
                res.status, res.upper_bound, res.nodes, res.cuts, res.hubs
            );
        }
    }

    let limited = SolveParams {
        node_limit: Some(3),
        ..SolveParams::default()
    };
    let res = bnc::solve(&built, &limited)?;
    println!("with a 3-node limit: {}, gap {:.3e}", res.status, res.gap());
    res.write_progress_csv(std::io::stdout())?;
    Ok(())
}
