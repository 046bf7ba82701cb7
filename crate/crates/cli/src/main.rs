use std::path::PathBuf;
use std::process::ExitCode;

use alexflow_cli::{run, verify, Overrides, Status};
use clap::{Args, Parser, Subcommand};

/// Certified discrete-time gradient flows on model spaces.
#[derive(Parser)]
#[command(name = "alexflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow and write its records.
    Run(Common),
    /// Run the oracle checks listed in the configuration.
    Verify(Common),
    /// Run a grid of schedules and seeds and summarize the decay rates.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trials and checks.
    #[arg(long)]
    jobs: Option<usize>,
    /// Certificate tolerance, overriding the defaults.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (c, f): (&Common, fn(&std::path::Path, &Overrides) -> _) = match &cli.command {
        Command::Run(c) => (c, run::run),
        Command::Verify(c) => (c, verify::verify),
        Command::Sweep(c) => (c, run::sweep),
    };
    let ov = Overrides {
        out: c.out.clone(),
        seed: c.seed,
        jobs: c.jobs,
        tolerance: c.tolerance,
    };
    let status = f(&c.config, &ov).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Status::Error
    });
    ExitCode::from(status as u8)
}
