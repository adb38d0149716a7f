//! Root bounds of every formulation on CAB-surrogate prefixes across the
//! alpha sweep, written as a compare table.

use hubforge::cli::{compare_row, ALPHA_SWEEP, COMPARE_TOL};
use hubforge::formulations::FormulationKind;
use hubforge::instance::{load_cab, surrogate_setup};
use hubforge::report::write_compare;

fn main() -> hubforge::Result<()> {
    let raw = include_str!("../data/cab25_surrogate.txt");
    let mut rows = Vec::new();
    for n in [6, 8, 10] {
        for alpha in ALPHA_SWEEP {
            let inst = load_cab(raw, n, alpha, 1.0, 1.0, &vec![0.0; n])?;
            let inst = inst.with_setup(surrogate_setup(&inst, 150.0))?;
            rows.push(compare_row(&format!("cab{n}"), &inst, &FormulationKind::ALL)?);
        }
    }
    write_compare(&rows, COMPARE_TOL, std::io::stdout())?;
    for r in &rows {
        println!("cab n={} alpha={}: FZ_S over CF_S {:+.2}%", r.n, r.alpha, r.improvement_pct().unwrap_or(f64::NAN));
    }
    Ok(())
}
