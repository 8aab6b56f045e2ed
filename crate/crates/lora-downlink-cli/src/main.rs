//! Command-line entry: `sweep` writes a CSV over a swept variable, `validate`
//! cross-checks the closed forms against the simulator. Exit codes: 0 ok,
//! 1 usage or config error, 2 validation failure, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lora_downlink_cli::{run_validation, write_sweep, CliError, Config};

#[derive(Parser)]
#[command(name = "lora-downlink-cli", version, about = "Closed-form and Monte-Carlo \
sweeps of multi-gateway LoRa downlink performance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the closed forms over the configured sweep and write CSV.
    Sweep {
        /// TOML config path; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Override the simulation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the per-point iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Leave the simulation columns empty even if the config enables them.
        #[arg(long)]
        no_sim: bool,
    },
    /// Cross-check every closed form against the simulator at the configured
    /// operating point; exits nonzero if any row falls outside three standard
    /// errors.
    Validate {
        /// TOML config path; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the simulation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the iteration count.
        #[arg(long)]
        iterations: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Sweep { config, out, seed, iterations, no_sim } => {
            let mut cfg = Config::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.simulation.seed = s;
            }
            if let Some(n) = iterations {
                cfg.simulation.iterations = n;
            }
            if no_sim {
                cfg.simulation.enabled = false;
            }
            let summary = write_sweep(&cfg, &out)?;
            println!(
                "wrote {} rows to {} ({} marked failed)",
                summary.rows,
                out.display(),
                summary.failed_rows
            );
            Ok(())
        }
        Cmd::Validate { config, seed, iterations } => {
            let mut cfg = Config::load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.simulation.seed = s;
            }
            if let Some(n) = iterations {
                cfg.simulation.iterations = n;
            }
            cfg.simulation.enabled = true;
            let report = run_validation(&cfg)?;
            print!("{}", report.render());
            let failed = report.failures();
            if failed > 0 {
                Err(CliError::ValidationFailed { failed, total: report.rows.len() })
            } else {
                println!("all {} rows within three standard errors", report.rows.len());
                Ok(())
            }
        }
    }
}
