//! `alab`: command-line front end for the active-learning laboratory.

mod commands;
mod config;
mod csvio;
mod errors;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "alab",
    version,
    about = "Pool-based active-learning experiments with stability-based acquisition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every listed strategy.
    Run {
        /// Experiment config file (flat `section.key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for metrics.csv, curves.svg, manifest.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override a config key, e.g. --set train.epochs=20 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Shorthand override for run.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Dump per-round snapshot CSVs for sequential strategies.
        #[arg(long)]
        dump_snapshots: bool,
    },
    /// Re-run the experiment across a list of values for one numeric key.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Swept key and values, e.g. --param schedule.interval=1,5,10.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        param: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic blob dataset CSV.
    GenData {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 250)]
        per_class: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 4.0)]
        center_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render accuracy curves from one or more metrics CSVs.
    Plot {
        /// Metrics CSV files produced by `run`.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, set, seed, dump_snapshots } => {
            commands::cmd_run(config.as_deref(), &out, &set, seed, dump_snapshots)
        }
        Command::Sweep { config, out, param, set, seed } => {
            commands::cmd_sweep(config.as_deref(), &out, &param, &set, seed)
        }
        Command::GenData { classes, per_class, dim, center_scale, noise_sigma, seed, out } => {
            commands::cmd_gen_data(classes, per_class, dim, center_scale, noise_sigma, seed, &out)
        }
        Command::Plot { inputs, out } => commands::cmd_plot(&inputs, &out),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        process::exit(err.exit_code());
    }
}
