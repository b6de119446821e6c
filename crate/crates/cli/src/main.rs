//! `kg-agent`: load graphs, run the agent, build and mix instruction data,
//! and score predictions.
//!
//! Exit codes: 0 success, 1 output write failure, 2 usage or config error,
//! 3 malformed input, 4 planner error, 5 execution error, 6 step budget
//! exhausted.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides, RunConfig};
use exit::{Failure, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "kg-agent", version, about = "Tool-augmented reasoning over knowledge graphs")]
struct Cli {
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Triple file (TSV: head, relation, tail).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    /// Tool registry TOML (enabled tools, reserved relations).
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a graph and report its size and index health.
    Ingest,
    /// Answer one question with the agent loop.
    Run {
        #[arg(long)]
        question: String,
        /// Topic entity id, e.g. `#CristianoRonaldo`; repeatable.
        #[arg(long = "topic")]
        topics: Vec<String>,
        /// `scripted:<path>` or `remote:<url>`.
        #[arg(long)]
        planner: Option<String>,
        /// Remote planner base URL used when no planner is given.
        #[arg(long, env = "KG_AGENT_PLANNER_URL", hide_env_values = true)]
        planner_url: Option<String>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Turn query-graph samples into instruction pairs.
    Synthesize {
        /// Query graphs, one JSON object per line.
        #[arg(long)]
        input: PathBuf,
        /// Rejection report path; defaults next to `--out`.
        #[arg(long)]
        rejections: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Sample whole trajectories from weighted pair files.
    Mix {
        /// `NAME:WEIGHT:PATH`; repeatable.
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long)]
        total: usize,
    },
    /// Score predictions against gold answers.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Hits@1 sampling repeats per record.
        #[arg(long)]
        repeats: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut flags = Overrides {
        graph: cli.graph,
        registry: cli.registry,
        seed: cli.seed,
        out: cli.out,
        ..Overrides::default()
    };
    match cli.command {
        Command::Ingest => commands::ingest(&RunConfig::resolve(file, flags)?),
        Command::Run {
            question,
            topics,
            planner,
            planner_url,
            max_steps,
        } => {
            flags.planner = planner;
            flags.planner_url = planner_url;
            flags.max_steps = max_steps;
            commands::run(&RunConfig::resolve(file, flags)?, &question, &topics)
        }
        Command::Synthesize {
            input,
            rejections,
            workers,
        } => {
            flags.workers = workers;
            commands::synthesize(&RunConfig::resolve(file, flags)?, &input, rejections)
        }
        Command::Mix { sources, total } => commands::mix(&RunConfig::resolve(file, flags)?, &sources, total),
        Command::Evaluate {
            predictions,
            gold,
            repeats,
        } => {
            flags.repeats = repeats;
            commands::evaluate(&RunConfig::resolve(file, flags)?, &predictions, &gold)
        }
    }
}
