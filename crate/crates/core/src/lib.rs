//! Exact solver toolkit for the uncapacitated multiple-allocation hub location
//! problem (MA-HLP).
//!
//! The crate builds six integer programming formulations of the problem, solves
//! them with an internal bounded-variable simplex engine and an LP-based
//! branch-and-cut driver, and cross-checks the results against brute-force
//! enumeration of hub sets.
//!
//! A typical pipeline:
//!
//! ```
//! use hubforge::{formulations, instance::Instance, bnc, costs::CostTables};
//!
//! let inst = Instance::toy4();
//! let tables = CostTables::build(&inst);
//! let built = formulations::build(&inst, &tables, formulations::FormulationKind::FzS).unwrap();
//! let res = bnc::solve(&built, &bnc::SolveParams::default()).unwrap();
//! assert!((res.upper_bound - 5.0).abs() < 1e-6);
//! ```
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory (`cargo run --example <name>`).

pub mod bnc;
pub mod cli;
pub mod costs;
pub mod error;
pub mod formulations;
pub mod instance;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod report;
pub mod routing;
pub mod separation;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
