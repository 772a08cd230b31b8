mod complexity;
mod config;
mod kernel;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use blockrec::Error;
use clap::{Parser, Subcommand};

/// Block-recursive matrix kernels, Givens QR and a simulated decentralized
/// cluster, as reproducible batch experiments.
#[derive(Debug, Parser)]
#[command(name = "blockrec", version)]
struct Cli {
    /// Flat key=value file; each key is a long flag name of the subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one kernel and write its result and a stats block.
    Kernel(kernel::KernelArgs),
    /// Check every kernel against the independent oracles.
    Verify(verify::VerifyArgs),
    /// Compare counted QP / QR_G costs against the closed forms (CSV).
    Complexity(complexity::ComplexityArgs),
    /// Run a task on the simulated cluster.
    Simulate(simulate::SimulateArgs),
    /// Re-execute a trace and check it event by event.
    Replay(simulate::ReplayArgs),
}

/// Outcome of a command other than plain success.
#[derive(Debug)]
pub enum Failure {
    /// A verification or property check did not hold.
    Check(String),
    /// The distributed result differs from the single-node one.
    Mismatch(String),
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e.to_string()))
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Stalled(_) => 2,
        Error::InvalidConfig(_) | Error::Parse(_) | Error::Io(_) => 4,
        Error::InvalidShape(_) => 5,
        Error::InvalidIndex(_) => 6,
        Error::Singular(_) => 7,
        Error::PivotBlockSingular(_) => 8,
        Error::NotPositiveDefinite(_) => 9,
        Error::UnsupportedScalar(_) => 10,
        Error::PreconditionViolated(_) => 11,
        Error::ModelSingular(_) => 12,
        Error::NotExpandable(_) => 13,
        Error::DuplicateWrite(_) => 14,
        Error::RootFailureUnsupported => 15,
        Error::TraceDecodeError(_) => 16,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Kernel(a) => kernel::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Complexity(a) => complexity::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Replay(a) => simulate::replay(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(4);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("Mismatch: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(error_code(&e))
        }
    }
}
