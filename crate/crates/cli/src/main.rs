mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Output;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit 2.
    Config(String),
    /// A verification criterion failed; exit 3.
    Acceptance(String),
    /// A solver or optimiser did not converge; exit 4.
    NonConvergence(String),
    Other(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Acceptance(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Acceptance(m) => write!(f, "check failed: {m}"),
            CliError::NonConvergence(m) => write!(f, "no convergence: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<homctl_core::Error> for CliError {
    fn from(e: homctl_core::Error) -> Self {
        use homctl_core::Error as E;
        match e {
            E::LinearSolve { .. } => CliError::NonConvergence(e.to_string()),
            E::Io(_) | E::Json(_) => CliError::Other(e.into()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

#[derive(Parser)]
#[command(
    name = "homctl",
    version,
    about = "Optimal control of the homogenized heat equation with memory"
)]
struct Cli {
    /// Output directory; overrides `output.dir` of the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// RNG seed; overrides `seed` of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the homogenized constants as JSON.
    Constants {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
    },
    /// Verify the capacity cell problem on a ladder of eps.
    CellVerify {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        eps_list: Vec<f64>,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
    },
    /// Solve the state equation for the configured control.
    SolveState(ConfigArg),
    /// Solve the discrete adjoint and compare with the continuous one.
    SolveAdjoint(ConfigArg),
    /// Evaluate the cost of the configured control.
    Cost(ConfigArg),
    /// Minimise the cost by gradient descent.
    Optimize(ConfigArg),
    /// Solve the optimality system by damped fixed-point iteration.
    FixedPoint(ConfigArg),
    /// Finite-difference check of the reduced gradient.
    Gradcheck(ConfigArg),
    /// Solve the weighted problem for each kappa and check the trends.
    KappaSweep(ConfigArg),
    /// Convergence study against a manufactured solution.
    Mms(ConfigArg),
}

#[derive(clap::Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, arg) = match cli.command {
        Command::Constants { n, c0 } => return commands::constants(n, c0),
        Command::CellVerify {
            n,
            c0,
            eps_list,
            nodes,
        } => return commands::cell_verify(n, c0, &eps_list, nodes),
        Command::SolveState(a) => ("solve-state", a),
        Command::SolveAdjoint(a) => ("solve-adjoint", a),
        Command::Cost(a) => ("cost", a),
        Command::Optimize(a) => ("optimize", a),
        Command::FixedPoint(a) => ("fixed-point", a),
        Command::Gradcheck(a) => ("gradcheck", a),
        Command::KappaSweep(a) => ("kappa-sweep", a),
        Command::Mms(a) => ("mms", a),
    };
    let mut cfg = RunConfig::load(&arg.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let dir = cli.out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let out = Output::new(&dir, &cfg.output.formats, cli.quiet)?;
    out.note(&format!("{name}: {}", arg.config.display()));
    match name {
        "solve-state" => commands::state(&cfg, &out),
        "solve-adjoint" => commands::adjoint(&cfg, &out),
        "cost" => commands::cost(&cfg, &out),
        "optimize" => commands::optimize(&cfg, &out),
        "fixed-point" => commands::fixed_point(&cfg, &out),
        "gradcheck" => commands::gradcheck_cmd(&cfg, &out),
        "kappa-sweep" => commands::kappa(&cfg, &out),
        "mms" => commands::mms(&cfg, &out),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homctl: {e}");
            ExitCode::from(e.code())
        }
    }
}
