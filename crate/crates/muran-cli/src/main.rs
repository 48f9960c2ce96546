//! Command-line front end for the muran micro-RAN simulator.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 unwritable output
//! directory, 1 any other failure. Log verbosity via RUST_LOG.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muran_core::config::{validate_config_file, ExperimentConfig};
use muran_core::mesh::Policy;
use muran_core::runner::{run_experiment, RunOptions};
use muran_core::SimError;

const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_UNWRITABLE_OUTPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "muran", version, about = "Micro-RAN mesh backhaul simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment matrix and write CSV/JSON artifacts.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated policies (network_centric,user_centric,always_on).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<Policy>>,
        /// Comma-separated hours (0-23).
        #[arg(long, value_delimiter = ',')]
        hours: Option<Vec<u8>>,
        /// Also run the link-level SNR sweep.
        #[arg(long)]
        linklevel: bool,
        /// Run the experiment matrix single-threaded.
        #[arg(long)]
        serial: bool,
    },
    /// Check a config file and print diagnostics.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            policies,
            hours,
            linklevel,
            serial,
        } => run(config, out, seed, policies, hours, linklevel, serial),
        Command::Validate { config } => validate(config),
        Command::Version => {
            println!("muran {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

fn run(
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    policies: Option<Vec<Policy>>,
    hours: Option<Vec<u8>>,
    linklevel: bool,
    serial: bool,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(cfg) => cfg,
        Err(SimError::Config(msg)) | Err(SimError::McsTable(msg)) => {
            eprintln!("{}: {}", config.display(), msg);
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(policies) = policies {
        cfg.policies = policies;
    }
    if let Some(hours) = hours {
        cfg.hours = hours;
    }
    if linklevel {
        cfg.linklevel.enabled = true;
    }

    let diags = cfg.validate();
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{d}");
        }
        return ExitCode::from(EXIT_INVALID_CONFIG);
    }

    let opts = RunOptions {
        out_dir: out.clone(),
        parallel: !serial,
    };
    match run_experiment(&cfg, &opts) {
        Ok(manifest) => {
            log::info!("run complete in {} ms", manifest.wall_ms);
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(SimError::Io { path, source }) => {
            eprintln!("cannot write {path}: {source}");
            ExitCode::from(EXIT_UNWRITABLE_OUTPUT)
        }
        Err(SimError::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn validate(config: PathBuf) -> ExitCode {
    match validate_config_file(&config) {
        Ok(diags) if diags.is_empty() => ExitCode::SUCCESS,
        Ok(diags) => {
            for d in &diags {
                eprintln!("{d}");
            }
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
