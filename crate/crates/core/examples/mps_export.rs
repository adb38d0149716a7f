//! Writes FZ_P and the full FZ_S master of a CAB-surrogate prefix as MPS files
//! for an external MILP solver.

use hubforge::cli::export_model;
use hubforge::costs::CostTables;
use hubforge::formulations::{self, FormulationKind};
use hubforge::instance::{load_cab, surrogate_setup};

fn main() -> hubforge::Result<()> {
    let raw = include_str!("../data/cab25_surrogate.txt");
    let n = 10;
    let inst = load_cab(raw, n, 0.5, 1.0, 1.0, &vec![0.0; n])?;
    let inst = inst.with_setup(surrogate_setup(&inst, 150.0))?;
    let tables = CostTables::build(&inst);
    let dir = std::env::temp_dir();
    for kind in [FormulationKind::FzP, FormulationKind::FzS] {
        let built = formulations::build(&inst, &tables, kind)?;
        let mps = export_model(&built)?;
        let path = dir.join(format!("cab{n}_{}.mps", kind.cli_name()));
        std::fs::write(&path, &mps)?;
        println!("{}: {} ({} bytes)", kind, path.display(), mps.len());
    }
    Ok(())
}
