use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otoc_sim::config::{ExperimentConfig, RunMode};
use otoc_sim::experiment::{default_output, exit_code, run_to_files, sidecar_path};
use otoc_sim::verify::run_verification;

#[derive(Parser)]
#[command(name = "otoc-sim", version, about = "Sequential weak-measurement correlator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSV results plus a resolved-config sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (default: the config path with a .csv extension).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<RunMode>,
    },
    /// Run the randomized identity suites.
    Verify {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 2026)]
        seed: u64,
    },
}

fn run(
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<u64>,
    mode: Option<RunMode>,
) -> Result<(), (i32, String)> {
    let invalid = |e: otoc_sim::Error| (1, e.to_string());
    let mut cfg = ExperimentConfig::load(&config).map_err(invalid)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = trials {
        cfg.trials = n;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    let cfg = cfg.resolve().map_err(invalid)?;
    let out = out.unwrap_or_else(|| default_output(&config));
    if out == config || sidecar_path(&out) == config {
        return Err((1, format!("output {} would overwrite the config", out.display())));
    }
    let rows = run_to_files(&cfg, &out).map_err(|e| (exit_code(&e), e.to_string()))?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, trials, mode } => match run(config, out, seed, trials, mode) {
            Ok(()) => ExitCode::SUCCESS,
            Err((code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(code as u8)
            }
        },
        Command::Verify { samples, seed } => {
            let report = run_verification(samples, seed);
            println!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
