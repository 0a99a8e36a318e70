//! `roughvol`: batch pipeline for rough-volatility option pricing,
//! calibration and robustness analysis.
//!
//! ```text
//! roughvol --config run.json --out results synth-chain
//! roughvol --config run.json --out results calibrate
//! roughvol --config run.json --out results bootstrap
//! ```

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "roughvol", version, about = "Rough volatility pricing, calibration and robustness analysis")]
struct Cli {
    /// Run configuration (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base seed; overrides the configuration's `seed`
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: logical cores)
    #[arg(long, global = true, env = "ROUGHVOL_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,

    /// Log level: error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn", value_name = "LEVEL")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic option chain priced by the model
    SynthChain,
    /// Price options with fixed model parameters
    Price {
        /// Also write the joint covariance and its factor as CSV
        #[arg(long)]
        dump_covariance: bool,
    },
    /// Calibrate the model to an option chain
    Calibrate,
    /// Run bootcalibrations and robustness statistics
    Bootstrap,
    /// KS sensitivity analysis over a bootstrap report
    Sensitivity,
    /// t-test of a restricted model against the full model
    Significance,
    /// Markdown summary of a bootstrap run
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    let path = cli.config.as_deref().context("--config is required")?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::SynthChain => commands::synth(&cfg, &out),
        Command::Price { dump_covariance } => commands::price(&cfg, &out, dump_covariance),
        Command::Calibrate => commands::calibrate_cmd(&cfg, &out),
        Command::Bootstrap => commands::bootstrap(&cfg, &out),
        Command::Sensitivity => commands::sensitivity(&cfg, &out),
        Command::Significance => commands::significance(&cfg, &out),
        Command::Report => commands::report(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::json!({ "error": commands::describe(&err) });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
