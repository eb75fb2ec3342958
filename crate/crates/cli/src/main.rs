use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use pomdp_cli::commands::{self, parse_age, Global, ReportOptions, Status};
use pomdp_core::workflow::Objective;

#[derive(Parser)]
#[command(name = "pomdp", version, about = "Run, tune and compare online POMDP planners")]
struct Cli {
    /// Episode cache directory.
    #[arg(long, global = true, env = "POMDP_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Run store directory.
    #[arg(long, global = true, env = "POMDP_RUN_DIR")]
    run_dir: Option<PathBuf>,
    /// Worker threads; overrides the config backend (1 = serial).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print only result tables.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every configured policy and store the run.
    Evaluate { config: PathBuf },
    /// Search each policy's parameters, then evaluate the best.
    Optimize {
        config: PathBuf,
        /// Trial objective; `cvar` uses the config alpha.
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Mean)]
        objective: ObjectiveArg,
    },
    /// Compare stored runs.
    Report {
        /// Only runs of this experiment.
        #[arg(long)]
        experiment: Option<String>,
        /// Print a per-cohort histogram of discounted returns.
        #[arg(long)]
        histogram: bool,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Inspect or prune the episode cache.
    Cache {
        #[command(subcommand)]
        action: CacheCommand,
    },
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Entry count, size and quarantine count.
    Stats,
    /// Delete entries older than the given age.
    Gc {
        /// Age such as 0, 90s, 15m, 12h or 7d.
        #[arg(long, value_parser = parse_age)]
        older_than: Duration,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Mean,
    Cvar,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Global {
        cache_dir: cli.cache_dir,
        run_dir: cli.run_dir,
        workers: cli.workers,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let result = match cli.command {
        Command::Evaluate { config } => commands::evaluate(&config, &g, &mut out, &mut err),
        Command::Optimize { config, objective } => {
            let objective = match objective {
                ObjectiveArg::Mean => Objective::MeanReturn,
                ObjectiveArg::Cvar => {
                    match pomdp_cli::config::ExperimentConfig::load(&config) {
                        Ok(c) => Objective::Cvar(c.alpha),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(Status::Error.code() as u8);
                        }
                    }
                }
            };
            commands::optimize(&config, objective, &g, &mut out, &mut err)
        }
        Command::Report {
            experiment,
            histogram,
            bins,
        } => commands::report(
            &ReportOptions {
                experiment,
                histogram,
                bins,
            },
            &g,
            &mut out,
            &mut err,
        ),
        Command::Cache { action } => match action {
            CacheCommand::Stats => commands::cache_stats(&g, &mut out),
            CacheCommand::Gc { older_than } => commands::cache_gc(older_than, &g, &mut out),
        },
    };
    let status = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Status::Error
    });
    ExitCode::from(status.code() as u8)
}
