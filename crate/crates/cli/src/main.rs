use std::path::PathBuf;
use std::process::ExitCode;

use acoustic_shape::driver::{execute, Command, EXIT_ERROR};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "acoustic-shape",
    version,
    about = "Time-domain nonlinear acoustics and shape optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory for tables, snapshots and status.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the randomized checks; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Forward solve with trajectory export.
    Solve,
    /// Forward and adjoint solve.
    Adjoint,
    /// Boundary shape-gradient density.
    Gradient,
    /// Finite-difference check of the shape derivative.
    TaylorTest,
    /// Gradient descent on the domain.
    Optimize,
    /// Built-in invariant suite.
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Adjoint => Command::Adjoint,
            Cmd::Gradient => Command::Gradient,
            Cmd::TaylorTest => Command::TaylorTest,
            Cmd::Optimize => Command::Optimize,
            Cmd::Check => Command::Check,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("InvalidInput: cannot set up {n} threads: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    let code = execute(
        cli.command.into(),
        cli.config.as_deref(),
        &cli.out,
        cli.seed,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    ExitCode::from(code as u8)
}
