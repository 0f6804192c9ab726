use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radial_nodal::cli::{exit_code, load_config, run_command, Command, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "radial-nodal", version, about = "Radial nodal solutions: shooting, classification and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Probe the growth and convexity conditions of the nonlinearity.
    CheckNonlinearity(Common),
    /// Find all solutions at the configured lambda.
    Solve(Common),
    /// Classify solutions (or a given profile) by zeros of u − g₊⁻¹(λ + f).
    Classify(Common),
    /// Evaluate the a priori bounds on solutions (or a given profile).
    VerifyBounds(Common),
    /// Sweep lambda and track solution branches.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 when any check fails.
    #[arg(long)]
    strict: bool,
    /// CSV profile (`t,u,du`) to use instead of solving.
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::CheckNonlinearity(c) => (Command::CheckNonlinearity, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::VerifyBounds(c) => (Command::VerifyBounds, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let options = RunOptions {
        out: common.out,
        profile: common.profile,
    };
    let result = match &common.config {
        Some(path) => load_config(path),
        None => Ok(RunConfig::default()),
    }
    .and_then(|config| run_command(command, &config, &options));
    match &result {
        Ok(outcome) => {
            println!("{}: {}", command.name(), outcome.summary);
            for a in &outcome.artifacts {
                println!("  wrote {}", a.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result, common.strict) as u8)
}
