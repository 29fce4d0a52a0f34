//! `ceig`: complementarity eigenpairs of tensor pairs from the command line.
//!
//! Exit codes: 0 on success (including an empty eigenvalue set), 2 for
//! unreadable or invalid input, 3 when the solver fails.

mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use problem::ProblemFile;
use report::{MethodChoice, RunOptions};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "ceig", version, about = "Complementarity eigenpairs of tensor pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Run(RunArgs),
    /// Write a problem file for a built-in family.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Plain,
    Structured,
}

#[derive(clap::Args)]
struct RunArgs {
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodChoice,
    /// Treat B as strictly copositive without checking.
    #[arg(long)]
    assert_copositive: bool,
    /// Seed for the random direction and objective of the general path.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    delta0: f64,
    /// Largest relaxation order (default m + 3).
    #[arg(long)]
    k_max: Option<usize>,
    /// Feasibility and gap tolerance of the semidefinite solver.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Cross-check against the brute-force oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "structured")]
    emit: Emit,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock times (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Family for A.
    family: String,
    /// Family for B.
    #[arg(long, default_value = "identity")]
    b: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Seed for the random families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.problem) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.problem.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let pair = match ProblemFile::parse(&text).and_then(|p| p.pair()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let opts = RunOptions {
        method: args.method,
        assert_copositive: args.assert_copositive,
        seed: args.seed,
        delta0: args.delta0,
        k_max: args.k_max,
        tol: args.tol,
        oracle: args.oracle,
    };
    if !(opts.delta0 > 0.0 && opts.tol > 0.0) {
        eprintln!("error: --delta0 and --tol must be positive");
        return ExitCode::from(EXIT_INPUT);
    }
    let report = match report::run(&pair, &opts, args.timings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    eprintln!(
        "{:?} via {:?}: {} eigenpair(s){}",
        report.status,
        report.method,
        report.eigenpairs.len(),
        report.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
    );
    for p in &report.eigenpairs {
        eprintln!("  lambda = {:.6}", p.lambda);
    }
    if let Some(o) = report.oracle.as_ref().filter(|o| o.ran && !(o.missing.is_empty() && o.extra.is_empty())) {
        eprintln!("warning: oracle disagrees (missing {:?}, extra {:?})", o.missing, o.extra);
    }
    let body = match args.emit {
        Emit::Structured => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Emit::Plain => report.to_plain(),
    };
    if let Err(e) = write_output(args.out.as_ref(), &body) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SOLVER)
    }
}

fn generate(args: GenerateArgs) -> ExitCode {
    let file = match ProblemFile::generate(&args.family, &args.b, args.n, args.m, args.seed) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let body = serde_json::to_string_pretty(&file).expect("problem serializes") + "\n";
    match write_output(args.out.as_ref(), &body) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Generate(args) => generate(args),
    }
}
