//! Command-line front end: run a scenario from a config file, list the
//! verification battery, or dump model diagnostics.

mod checks;
mod config;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "sevlab",
    about = "Numerical laboratory for counterterm approximations of strongly \
             singular evolution equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by a TOML config and write CSV + JSON.
    Run {
        /// Path to the experiment configuration.
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List the verification battery.
    Checks,
    /// Print model and counterterm diagnostics for a config as JSON.
    DumpModel {
        /// Path to the experiment configuration.
        config: PathBuf,
    },
}

fn init_workers() {
    // SEVLAB_WORKERS bounds the rayon pool used to fan out ladder rungs.
    if let Ok(w) = std::env::var("SEVLAB_WORKERS") {
        if let Ok(n) = w.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run() -> Result<bool> {
    init_workers();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out_dir } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = config::parse_config(&text)?;
            let outcome = scenario::run_scenario(&cfg, out_dir.as_deref())?;
            for (name, passed) in &outcome.lines {
                println!("{:<28} {}", name, if *passed { "pass" } else { "FAIL" });
            }
            println!(
                "wrote {} and {}",
                outcome.csv_path.display(),
                outcome.json_path.display()
            );
            println!(
                "verdicts: {}",
                if outcome.all_passed {
                    "all pass"
                } else {
                    "FAILURES"
                }
            );
            Ok(outcome.all_passed)
        }
        Command::Checks => {
            print!("{}", checks::render());
            Ok(true)
        }
        Command::DumpModel { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = config::parse_config(&text)?;
            println!("{}", scenario::dump_model(&cfg)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
