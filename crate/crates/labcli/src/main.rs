use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fluctlab::{load_config, run_to_file, ExperimentId, LabError, LabResult, Overrides};

#[derive(Parser)]
#[command(name = "fluctlab", version, about = "Subsystem entropy fluctuation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment and write its CSV table.
    Run(RunArgs),
    /// Run a bounds_sweep configuration.
    SweepBounds(RunArgs),
    /// Validate a configuration and print it with defaults filled.
    Validate {
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    workers: Option<usize>,
    /// Override the trial count
    #[arg(long)]
    trials: Option<u64>,
    /// Write the output file name under this directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(args: &RunArgs, require_sweep: bool) -> LabResult<()> {
    let cfg = load_config(&args.config)?;
    let overrides = Overrides { seed: args.seed, workers: args.workers, trials: args.trials, out_dir: args.out_dir.clone() };
    let cfg = cfg.with_overrides(&overrides).map_err(LabError::Config)?;
    if require_sweep && cfg.experiment != ExperimentId::BoundsSweep {
        return Err(LabError::Config(vec![fluctlab::ConfigIssue::invalid(
            "experiment",
            format!("sweep-bounds expects bounds_sweep, got {}", cfg.experiment),
        )]));
    }
    let table = run_to_file(&cfg)?;
    println!("{}: {} rows -> {} ({:.1} s)", cfg.experiment, table.rows.len(), cfg.output.display(), table.wall_time_s);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, false),
        Command::SweepBounds(a) => run(a, true),
        Command::Validate { config } => load_config(config).map(|cfg| {
            println!("{}", serde_json::to_string_pretty(cfg.document()).expect("document serializes"));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
