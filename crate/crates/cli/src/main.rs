use clap::{Parser, Subcommand};
use cosred::checks::run_suite;
use cosred::config::{write_atomic, ExperimentConfig, ExperimentReport, OutputFormat};
use cosred::family::{generate_family, summarize, FamilySpec};
use std::path::PathBuf;
use std::process::ExitCode;

/// Batch experiment runner for the cosine-function calculus laboratory.
#[derive(Parser)]
#[command(name = "cosred", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an operator family from a JSON spec and print its summary.
    Gen { family_json: PathBuf },
    /// Run a check suite from a config file.
    Run {
        config: PathBuf,
        /// Stop scheduling after the first check that errors.
        #[arg(long)]
        strict: bool,
        /// Number of checks to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-render an existing report.
    Report {
        report: PathBuf,
        /// Emit CSV (check, param_1..param_k, value, bound, tolerance, pass).
        #[arg(long)]
        csv: bool,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG_ERROR)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Gen { family_json } => {
            let text = match std::fs::read_to_string(&family_json) {
                Ok(t) => t,
                Err(e) => return config_error(format!("{}: {e}", family_json.display())),
            };
            let spec: FamilySpec = match serde_json::from_str(&text) {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            match generate_family(&spec) {
                Ok(provider) => {
                    let summary = summarize(&provider);
                    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
                    ExitCode::SUCCESS
                }
                Err(e) => config_error(e),
            }
        }
        Command::Run {
            config,
            strict,
            jobs,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return config_error(format!("{}: {e}", config.display())),
            };
            let mut cfg: ExperimentConfig = match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            if let Ok(seed) = std::env::var("COSRED_SEED") {
                match seed.parse::<u64>() {
                    Ok(s) => cfg.seed = s,
                    Err(e) => return config_error(format!("COSRED_SEED: {e}")),
                }
            }
            let report = match run_suite(&cfg, jobs.max(1), strict) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            let json = serde_json::to_string_pretty(&report).unwrap();
            if let Some(out) = &cfg.output {
                let rendered = match out.format {
                    OutputFormat::Json => json,
                    OutputFormat::Csv => report.to_csv(),
                };
                if let Err(e) = write_atomic(std::path::Path::new(&out.path), &rendered) {
                    return config_error(format!("{}: {e}", out.path));
                }
            } else {
                println!("{json}");
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Command::Report { report, csv } => {
            let text = match std::fs::read_to_string(&report) {
                Ok(t) => t,
                Err(e) => return config_error(format!("{}: {e}", report.display())),
            };
            let parsed: ExperimentReport = match serde_json::from_str(&text) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            if csv {
                print!("{}", parsed.to_csv());
            } else {
                println!("{}", serde_json::to_string_pretty(&parsed).unwrap());
            }
            ExitCode::SUCCESS
        }
    }
}
