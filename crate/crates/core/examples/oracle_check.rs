//! Ground truth by enumeration and the bound relations across all six
//! formulations.

use hubforge::costs::CostTables;
use hubforge::instance::{generate_random, GeneratorConfig};
use hubforge::oracle::{self, enumerate_optimum};

fn main() -> hubforge::Result<()> {
    for seed in 0..4 {
        let inst = generate_random(&GeneratorConfig {
            n: 5,
            seed,
            ..GeneratorConfig::default()
        });
        let tables = CostTables::build(&inst);
        let one = enumerate_optimum(&inst, 1)?;
        let two = enumerate_optimum(&inst, 2)?;
        println!(
            "seed {seed}: best {:.3} at {:?}, best with two hubs {:.3} at {:?}",
            one.objective,
            one.hub_numbers(),
            two.objective,
            two.hub_numbers()
        );
        let bounds = oracle::lp_cross_check(&inst, &tables, 1e-6)?;
        println!(
            "  SK {:.3}  HLP_MA {:.3}  CF_P {:.3}  FZ_P {:.3}  CF_S {:.3}  FZ_S {:.3}",
            bounds.sk, bounds.hlpma, bounds.cfp, bounds.fzp, bounds.cfs, bounds.fzs
        );
        for v in &bounds.violations {
            println!("  relation does not hold: {v}");
        }
        println!(
            "  single hubs at U^r never needed: {}",
            oracle::forbidden_single_hub_check(&inst, &tables)?
        );
    }
    Ok(())
}
