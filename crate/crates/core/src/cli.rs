//! Command-line surface. [`run`] parses arguments, dispatches a subcommand and
//! returns the process exit code: 0 on success or a proven optimum, 2 when a
//! limit stopped the search, 1 on any error.

use crate::bnc::{self, BranchRule, MipStatus, NodeOrder, SolveParams};
use crate::costs::{CostTables, ScheduleVariant, SingleHubPolicy, SortedSchedule};
use crate::error::{Error, Result};
use crate::formulations::{self, BuildOptions, BuiltModel, FormulationKind};
use crate::instance::{
    generate_random, load_ap, load_cab, parse_canonical, surrogate_setup, to_canonical,
    GeneratorConfig, Instance,
};
use crate::model::Sense;
use crate::oracle;
use crate::report::{self, CompareRecord, RunRecord};
use crate::routing;
use crate::separation;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Default `alpha` sweep of `compare`.
pub const ALPHA_SWEEP: [f64; 3] = [0.2, 0.5, 0.8];
/// Tolerance of the bound relations reported by `compare`.
pub const COMPARE_TOL: f64 = 1e-6;
/// Largest `n` for which `solve` cross-checks two-hub formulations against the
/// oracle.
const SINGLE_HUB_CHECK_MAX_N: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "hubforge", version, about = "Exact solvers for multiple-allocation hub location")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance with one formulation.
    Solve(SolveArgs),
    /// LP bound (converged root for CF_S / FZ_S) of one formulation.
    Bound(BoundArgs),
    /// Bound table over instances, formulations and an alpha sweep.
    Compare(CompareArgs),
    /// Brute-force optimum over hub subsets.
    Oracle(OracleArgs),
    /// Write a formulation as MPS.
    Export(ExportArgs),
    /// Write a seeded random instance in HLI format.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Hli,
    Cab,
    Ap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Order {
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Branching {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Hli)]
    format: Format,
    /// Node prefix for CAB / AP data (default: all nodes).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Whitespace-separated setup costs, one per node.
    #[arg(long, conflicts_with = "setup_mean")]
    setup_file: Option<PathBuf>,
    /// Surrogate setup costs proportional to outgoing flow with this mean.
    #[arg(long)]
    setup_mean: Option<f64>,
    /// Multiplies every setup cost.
    #[arg(long)]
    setup_factor: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value = "fzs")]
    formulation: FormulationKind,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Add the first supermodular row of every commodity up front.
    #[arg(long)]
    seed_cuts: bool,
    /// Offer only `V^r` nodes as single-hub entries.
    #[arg(long)]
    literal_single_hubs: bool,
    #[arg(long, value_enum, default_value_t = Order::BestBound)]
    order: Order,
    #[arg(long, value_enum, default_value_t = Branching::MostFractional)]
    branching: Branching,
    /// Directory for run.csv, routing.csv and progress.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value = "fzs")]
    formulation: FormulationKind,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// HLI instances (repeatable).
    #[arg(long = "instance", required = true)]
    instances: Vec<PathBuf>,
    /// Comma-separated formulations.
    #[arg(long, value_delimiter = ',', default_value = "sk,hlpma,cfp,fzp,cfs,fzs")]
    formulations: Vec<FormulationKind>,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_values_t = ALPHA_SWEEP)]
    alphas: Vec<f64>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    min_hubs: usize,
    /// Output CSV (default: text report only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value = "fzp")]
    formulation: FormulationKind,
    /// Output MPS file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Probability that an ordered pair becomes a commodity.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 3000.0)]
    setup_max: f64,
    /// Output HLI file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Export(a) => cmd_export(a),
        Command::Generate(a) => cmd_generate(a),
    }
}

fn read_setup_file(path: &Path) -> Result<Vec<f64>> {
    fs::read_to_string(path)?
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::InvalidInstance(format!("bad setup cost `{t}` in {}", path.display())))
        })
        .collect()
}

fn raw_node_count(raw: &str) -> Result<usize> {
    raw.split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(1, "missing node count"))
}

/// Loads and adjusts the instance; also returns its id for reports.
fn load_instance(a: &InstanceArgs) -> Result<(String, Instance)> {
    let raw = fs::read_to_string(&a.instance)?;
    let id = a
        .instance
        .file_stem()
        .map_or_else(|| a.instance.display().to_string(), |s| s.to_string_lossy().into_owned());
    let mut inst = match a.format {
        Format::Hli => {
            let mut inst = parse_canonical(&raw)?;
            if let Some(path) = &a.setup_file {
                inst = inst.with_setup(read_setup_file(path)?)?;
            }
            inst
        }
        Format::Cab | Format::Ap => {
            let total = raw_node_count(&raw)?;
            let n = a.n.unwrap_or(total);
            let setup = match &a.setup_file {
                Some(path) => read_setup_file(path)?,
                None if a.setup_mean.is_some() => vec![0.0; n],
                None => {
                    return Err(Error::InvalidInstance(
                        "CAB / AP data carry no setup costs; pass --setup-file or --setup-mean".into(),
                    ))
                }
            };
            let (alpha, gamma, theta) = (a.alpha.unwrap_or(0.5), a.gamma.unwrap_or(1.0), a.theta.unwrap_or(1.0));
            if a.format == Format::Cab {
                load_cab(&raw, n, alpha, gamma, theta, &setup)?
            } else {
                load_ap(&raw, n, alpha, gamma, theta, &setup)?
            }
        }
    };
    if let Some(mean) = a.setup_mean {
        inst = inst.with_setup(surrogate_setup(&inst, mean))?;
    }
    if let Some(f) = a.setup_factor {
        if !(f >= 0.0) {
            return Err(Error::OutOfRange("setup factor must be non-negative".into()));
        }
        inst = inst.scale_setup(f);
    }
    inst = inst.with_factors(
        a.alpha.unwrap_or(inst.alpha),
        a.gamma.unwrap_or(inst.gamma),
        a.theta.unwrap_or(inst.theta),
    );
    let rep = inst.validate();
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    rep.into_result()?;
    Ok((id, inst))
}

fn write_or_print(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Integer routing of an incumbent, rebuilt from its hub set.
pub fn routing_for_hubs(tables: &CostTables, hubs: &[usize]) -> Result<routing::Routing> {
    let schedule = SortedSchedule::build(tables, ScheduleVariant::Fzs, SingleHubPolicy::AllNodes);
    let mut z = vec![0.0; tables.n()];
    for &h in hubs {
        z[h - 1] = 1.0;
    }
    let y: Vec<f64> = tables
        .edges()
        .iter()
        .map(|(_, (i, j))| z[i] * z[j])
        .collect();
    routing::recover_integer(&schedule, tables, &z, &y)
}

fn cmd_solve(a: SolveArgs) -> Result<i32> {
    let (id, inst) = load_instance(&a.inst)?;
    let tables = CostTables::build(&inst);
    let opts = BuildOptions {
        policy: if a.literal_single_hubs {
            SingleHubPolicy::Literal
        } else {
            SingleHubPolicy::AllNodes
        },
        seed_cuts: a.seed_cuts,
    };
    let built = formulations::build_with(&inst, &tables, a.formulation, opts)?;
    for w in &built.warnings {
        eprintln!("note: {}: {w}", a.formulation);
    }
    let params = SolveParams {
        time_limit: a.time_limit,
        gap: a.gap,
        order: match a.order {
            Order::BestBound => NodeOrder::BestBound,
            Order::DepthFirst => NodeOrder::DepthFirst,
        },
        branching: match a.branching {
            Branching::MostFractional => BranchRule::MostFractional,
            Branching::PseudoCost => BranchRule::PseudoCost,
        },
        ..SolveParams::default()
    };
    let res = bnc::solve(&built, &params)?;
    print!("{}", res.summary());
    if res.status == MipStatus::Optimal && !built.warnings.is_empty() && inst.n() <= SINGLE_HUB_CHECK_MAX_N {
        let free = oracle::enumerate_optimum(&inst, 1)?;
        if res.upper_bound > free.objective + 1e-6 * (1.0 + free.objective.abs()) {
            eprintln!(
                "warning: {} optimum {} exceeds the unrestricted optimum {}; this formulation needs an optimum with two hubs",
                a.formulation, res.upper_bound, free.objective
            );
        }
    }
    let record = RunRecord::from_result(&id, &inst, a.formulation, &res);
    let mut run_csv = Vec::new();
    report::write_runs(&[record], &mut run_csv)?;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("run.csv"), &run_csv)?;
            res.write_progress_csv(fs::File::create(dir.join("progress.csv"))?)?;
            if !res.hubs.is_empty() {
                let rt = routing_for_hubs(&tables, &res.hubs)?;
                rt.write_csv(&tables, fs::File::create(dir.join("routing.csv"))?)?;
            }
        }
        None => std::io::stdout().write_all(&run_csv)?,
    }
    Ok(match res.status {
        MipStatus::Optimal => 0,
        MipStatus::Feasible | MipStatus::NoSolution => 2,
        MipStatus::Infeasible => 1,
    })
}

fn cmd_bound(a: BoundArgs) -> Result<i32> {
    let (id, inst) = load_instance(&a.inst)?;
    let tables = CostTables::build(&inst);
    let bound = oracle::lp_bound(&inst, &tables, a.formulation)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["instance", "n", "alpha", "formulation", "bound"])?;
    w.write_record([
        id,
        inst.n().to_string(),
        inst.alpha.to_string(),
        a.formulation.to_string(),
        bound.to_string(),
    ])?;
    w.flush()?;
    Ok(0)
}

/// Bounds of `kinds` for one instance (others left `None`).
pub fn compare_row(id: &str, inst: &Instance, kinds: &[FormulationKind]) -> Result<CompareRecord> {
    let tables = CostTables::build(inst);
    let mut bounds = [None; 6];
    for (slot, kind) in bounds.iter_mut().zip(FormulationKind::ALL) {
        if kinds.contains(&kind) {
            *slot = Some(oracle::lp_bound(inst, &tables, kind)?);
        }
    }
    Ok(CompareRecord {
        instance: id.to_string(),
        n: inst.n(),
        alpha: inst.alpha,
        bounds,
    })
}

fn cmd_compare(a: CompareArgs) -> Result<i32> {
    let mut rows = Vec::new();
    for path in &a.instances {
        let (id, base) = load_instance(&InstanceArgs {
            instance: path.clone(),
            format: Format::Hli,
            n: None,
            alpha: None,
            gamma: None,
            theta: None,
            setup_file: None,
            setup_mean: None,
            setup_factor: None,
        })?;
        for &alpha in &a.alphas {
            let inst = base.with_factors(alpha, base.gamma, base.theta);
            rows.push(compare_row(&id, &inst, &a.formulations)?);
        }
    }
    let mut buf = Vec::new();
    report::write_compare(&rows, COMPARE_TOL, &mut buf)?;
    write_or_print(a.out.as_deref(), &buf)?;
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Result<i32> {
    let (_, inst) = load_instance(&a.inst)?;
    let res = oracle::enumerate_optimum(&inst, a.min_hubs)?;
    print!("{}", res.summary());
    if let Some(path) = &a.out {
        res.write_csv(fs::File::create(path)?)?;
    }
    Ok(0)
}

/// The model to export. Masters get every supermodular row explicitly, which
/// makes them complete MILPs for an external solver.
pub fn export_model(built: &BuiltModel) -> Result<String> {
    let Some(schedule) = &built.schedule else {
        return Ok(built.model.export_mps(&built.kind.to_string()));
    };
    let mut model = built.model.clone();
    for r in 0..schedule.num_commodities() {
        for t in 0..schedule.entries(r).len() {
            let row = separation::cut_at(schedule, r, t).to_row(built);
            debug_assert_eq!(row.sense, Sense::Ge);
            model.add_constraint(
                &row.terms.into_iter().collect(),
                row.sense,
                row.rhs,
                format!("super r={} t={}", r + 1, t + 1),
            )?;
        }
    }
    Ok(model.export_mps(&built.kind.to_string()))
}

fn cmd_export(a: ExportArgs) -> Result<i32> {
    let (_, inst) = load_instance(&a.inst)?;
    let tables = CostTables::build(&inst);
    let built = formulations::build(&inst, &tables, a.formulation)?;
    let mps = export_model(&built)?;
    write_or_print(a.out.as_deref(), mps.as_bytes())?;
    Ok(0)
}

fn cmd_generate(a: GenerateArgs) -> Result<i32> {
    if a.n < 2 {
        return Err(Error::OutOfRange("n must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Error::OutOfRange("density must lie in [0, 1]".into()));
    }
    let inst = generate_random(&GeneratorConfig {
        n: a.n,
        density: a.density,
        seed: a.seed,
        alpha: a.alpha,
        gamma: a.gamma,
        theta: a.theta,
        setup_max: a.setup_max,
        ..GeneratorConfig::default()
    });
    inst.validate().into_result()?;
    write_or_print(a.out.as_deref(), to_canonical(&inst).as_bytes())?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_bad_flags() {
        assert_eq!(run(["hubforge", "solve", "--bogus"]), 1);
        assert_eq!(run(["hubforge", "solve", "--instance", "/nonexistent.hli"]), 1);
    }

    #[test]
    fn routing_from_hubs() {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let rt = routing_for_hubs(&t, &[2, 3]).unwrap();
        assert!((rt.total_cost - 3.0).abs() < 1e-12);
    }

    #[test]
    fn export_master_is_complete() {
        let inst = Instance::toy4();
        let t = CostTables::build(&inst);
        let built = formulations::build(&inst, &t, FormulationKind::FzS).unwrap();
        let mps = export_model(&built).unwrap();
        let len: usize = (0..2).map(|r| built.schedule.as_ref().unwrap().entries(r).len()).sum();
        let rows = mps.lines().filter(|l| l.starts_with(" G ")).count();
        assert_eq!(rows, len);
    }
}
