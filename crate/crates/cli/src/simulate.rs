use std::path::PathBuf;
use std::str::FromStr;

use blockrec::runtime::{CostModel, DropType, Task};
use blockrec::sim::{replay_trace, run_simulation, LatencyModel, RunReport, SimConfig};
use blockrec::{gen, Error, ScalarKind};
use clap::{Args, ValueEnum};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimAlgo {
    Mul,
    InvTri,
    Cholesky,
    InvStrassen,
    QrG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Cost {
    Unit,
    Ops,
}

/// `node@tick`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureAt(usize, u64);

impl FromStr for FailureAt {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (n, t) = s.split_once('@').ok_or_else(|| format!("`{s}`: expected node@tick"))?;
        let n = n.trim().parse().map_err(|_| format!("`{s}`: bad node id"))?;
        let t = t.trim().parse().map_err(|_| format!("`{s}`: bad tick"))?;
        Ok(FailureAt(n, t))
    }
}

/// `T` for a constant latency of T ticks, `LO..HI` for a seeded uniform draw.
fn parse_latency(s: &str) -> Result<LatencyModel, String> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("bad latency `{s}`"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok(LatencyModel::Uniform { lo: num(lo)?, hi: num(hi)? }),
        None => Ok(LatencyModel::Constant(num(s)?)),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "mul")]
    algo: SimAlgo,
    #[arg(long, default_value_t = 32)]
    order: usize,
    #[arg(long, default_value = "f64")]
    scalar: ScalarKind,
    /// Seed for the input matrices; defaults to --seed.
    #[arg(long)]
    input_seed: Option<u64>,
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Seed for latency draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1..4", value_parser = parse_latency)]
    latency: LatencyModel,
    #[arg(long, default_value_t = 8)]
    leaf: usize,
    #[arg(long, default_value_t = 2)]
    threshold: usize,
    /// Fail a node at a tick (`node@tick`); repeatable.
    #[arg(long)]
    fail: Vec<FailureAt>,
    #[arg(long, value_enum, default_value = "ops")]
    cost: Cost,
    #[arg(long, default_value_t = 100_000_000)]
    tick_budget: u64,
    #[arg(long, default_value_t = 1 << 16)]
    fragment_bytes: usize,
    /// Trace output (newline-delimited JSON).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report output; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Rerun on one node and require a bitwise-identical result.
    #[arg(long)]
    check_against_single_node: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn build_task(args: &SimulateArgs) -> Task {
    let (n, kind, seed) = (args.order, args.scalar, args.input_seed.unwrap_or(args.seed));
    match args.algo {
        SimAlgo::Mul => Task::root(
            DropType::Mul,
            vec![gen::random_dense(n, kind, seed), gen::random_dense(n, kind, seed.wrapping_add(1))],
        ),
        SimAlgo::InvTri => Task::root(DropType::InvTri, vec![gen::random_lower_triangular(n, kind, seed)]),
        SimAlgo::Cholesky => Task::root(DropType::Cholesky, vec![gen::random_spd(n, seed).to_kind(kind)]),
        SimAlgo::InvStrassen => Task::root(DropType::InvStrassen, vec![gen::random_diag_dominant(n, kind, seed)]),
        SimAlgo::QrG => Task::root(DropType::QRG, vec![gen::random_dense(n, kind, seed)]),
    }
}

fn emit(report: &RunReport, path: &Option<PathBuf>) -> Result<(), Failure> {
    let doc = report.to_json() + "\n";
    match path {
        Some(p) => std::fs::write(p, doc)?,
        None => print!("{doc}"),
    }
    Ok(())
}

pub fn run(args: SimulateArgs) -> Result<(), Failure> {
    let task = build_task(&args);
    let cfg = SimConfig {
        num_nodes: args.nodes,
        seed: args.seed,
        latency: args.latency,
        leaf_size: args.leaf,
        overload_threshold: args.threshold,
        failures: args.fail.iter().map(|f| (f.0, f.1)).collect(),
        cost_model: match args.cost {
            Cost::Unit => CostModel::Unit,
            Cost::Ops => CostModel::ScalarOps,
        },
        tick_budget: args.tick_budget,
        fragment_bytes: args.fragment_bytes,
        trace_path: args.trace.clone(),
    };
    let report = match run_simulation(&task, &cfg) {
        Ok(r) => r,
        Err(Error::Stalled(msg)) => {
            let trace = args.trace.as_ref().map_or("(no trace requested)".into(), |p| p.display().to_string());
            return Err(Failure::Lib(Error::Stalled(format!("{msg}; trace: {trace}"))));
        }
        Err(e) => return Err(e.into()),
    };
    emit(&report, &args.report)?;
    if args.check_against_single_node {
        let single = SimConfig { num_nodes: 1, failures: Vec::new(), trace_path: None, ..cfg };
        let base = run_simulation(&task, &single)?;
        let same = base.result.len() == report.result.len()
            && base.result.iter().zip(&report.result).all(|(x, y)| x.bitwise_eq(y));
        if !same {
            return Err(Failure::Mismatch(format!("{}-node result differs from the single-node run", args.nodes)));
        }
        eprintln!("result bitwise equal to the single-node run");
    }
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Result<(), Failure> {
    let report = replay_trace(&args.trace)?;
    emit(&report, &args.report)
}
