use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod output;
mod run;

/// Pseudoholomorphic discs through a prescribed point, by a fixed-point
/// iteration on weighted Cauchy-Green transforms.
#[derive(Debug, Parser)]
#[command(name = "jdisc", version)]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a disc and write disc_samples.csv, diagnostics.json and plot_boundary.csv.
    /// Exit codes: 0 converged, 2 not converged, 3 invalid config or structure, 4 I/O failure.
    Solve { config: PathBuf },
    /// Run the operator and conformal-map check battery.
    /// Exit codes: 0 all passed, 1 a check failed, 3 invalid config, 4 I/O failure.
    Verify { config: PathBuf },
    /// Print the default configuration as TOML.
    PrintDefaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match cli.command {
        Command::Solve { config } => run::run_solve(&config),
        Command::Verify { config } => run::run_verify(&config),
        Command::PrintDefaults => match toml::to_string(&config::RunConfig::default()) {
            Ok(text) => {
                print!("{text}");
                run::EXIT_OK
            }
            Err(e) => {
                eprintln!("{e}");
                run::EXIT_IO
            }
        },
    };
    ExitCode::from(code as u8)
}
