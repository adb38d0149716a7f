//! Routing recovered from the master's (z, y): an integer routing at the
//! optimum and a fractional one at the converged root, both checked against
//! the path formulation.

use hubforge::bnc::{self, SolveParams};
use hubforge::costs::CostTables;
use hubforge::formulations::{self, FormulationKind};
use hubforge::instance::{generate_random, GeneratorConfig};
use hubforge::routing::{certify, recover_fractional, recover_integer};

fn main() -> hubforge::Result<()> {
    let inst = generate_random(&GeneratorConfig {
        n: 6,
        seed: 5,
        setup_max: 800.0,
        ..GeneratorConfig::default()
    });
    let tables = CostTables::build(&inst);
    let master = formulations::build(&inst, &tables, FormulationKind::FzS)?;
    let fzp = formulations::build(&inst, &tables, FormulationKind::FzP)?;
    let schedule = master.schedule.as_ref().expect("master has a schedule");
    let setup = |z: &[f64]| -> f64 { inst.setup().iter().zip(z).map(|(f, v)| f * v).sum() };

    let res = bnc::solve(&master, &SolveParams::default())?;
    let x = res.incumbent.as_ref().expect("optimal incumbent");
    let z: Vec<f64> = master.z_values(x).iter().map(|v| v.round()).collect();
    let y: Vec<f64> = tables.edges().iter().map(|(_, (i, j))| z[i] * z[j]).collect();
    let routing = recover_integer(schedule, &tables, &z, &y)?;
    let cert = certify(&routing, &fzp, &z, &y)?;
    println!(
        "optimum {:.4}, recovered {:.4}, certified {}",
        res.upper_bound,
        setup(&z) + routing.total_cost,
        cert.ok
    );
    routing.write_csv(&tables, std::io::stdout())?;

    let root = bnc::root_bound(&master, &SolveParams::default())?;
    let (rz, ry) = (master.z_values(&root.x), master.y_values(&root.x));
    let frac = recover_fractional(schedule, &tables, &rz, &ry);
    let cert = certify(&frac, &fzp, &rz, &ry)?;
    println!(
        "root {:.4}, fractional recovery {:.4}, certified {} {:?}",
        root.bound,
        setup(&rz) + frac.total_cost,
        cert.ok,
        cert.violations.iter().take(3).collect::<Vec<_>>()
    );
    Ok(())
}
