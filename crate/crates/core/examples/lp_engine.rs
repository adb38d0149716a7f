//! The bounded-variable simplex engine on a small LP: solve, check optimality
//! conditions, then append a row and re-solve from the previous basis.

use hubforge::lp::{self, kkt_report, resolve_after, RowSpec};
use hubforge::model::{LinExpr, Model, Sense};

fn main() -> hubforge::Result<()> {
    // min -x - 2y  s.t.  x + y <= 4,  x - y >= -2,  0 <= x <= 3,  0 <= y <= 3
    let mut m = Model::new();
    let x = m.add_var("x", 0.0, 3.0, false, -1.0)?;
    let y = m.add_var("y", 0.0, 3.0, false, -2.0)?;
    m.add_constraint(&LinExpr::new().term(x, 1.0).term(y, 1.0), Sense::Le, 4.0, "cap")?;
    m.add_constraint(&LinExpr::new().term(x, 1.0).term(y, -1.0), Sense::Ge, -2.0, "diff")?;

    let (res, basis) = lp::solve_lp(&m, None)?;
    println!("{:?}: objective {} at {:?}", res.status, res.objective, res.x);
    println!("duals {:?}, {} iterations", res.duals, res.iterations);
    let kkt = kkt_report(&m, &res);
    println!("{kkt:?}");

    // add x >= 2 and warm start
    let row = RowSpec {
        terms: vec![(x, 1.0)],
        sense: Sense::Ge,
        rhs: 2.0,
    };
    let (res2, _) = resolve_after(&m, &[row], &[], &basis)?;
    println!("{:?}: objective {} at {:?} after {} iterations", res2.status, res2.objective, res2.x, res2.iterations);
    Ok(())
}
