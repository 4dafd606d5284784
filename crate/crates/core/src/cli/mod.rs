//! Command-line front end: argument parsing, config loading, dispatch, and
//! exit-code mapping (0 ok, 1 usage/config, 2 contract/data, 3 I/O).

pub mod commands;
pub mod config;
pub mod render;
pub mod train;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Result;

pub use config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "objnav", version, about = "Desk-scale ObjectGoal navigation lab")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed; falls back to $OBJNAV_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate procedural houses into a directory.
    WorldGen(commands::WorldGenArgs),
    /// Generate an episode dataset plus its stats report.
    Dataset(commands::DatasetArgs),
    /// Summarize a dataset manifest per split and goal class.
    Stats(commands::StatsArgs),
    /// Train a policy with PPO.
    Train(train::TrainArgs),
    /// Evaluate a checkpoint or baseline over a split.
    Eval(commands::EvalArgs),
    /// Render a logged trajectory to SVG.
    Replay(commands::ReplayArgs),
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = config::resolve_seed(cli.seed)?;
    match &cli.cmd {
        Cmd::WorldGen(args) => commands::cmd_world_gen(&cfg, seed, args),
        Cmd::Dataset(args) => commands::cmd_dataset(&cfg, seed, args),
        Cmd::Stats(args) => commands::cmd_stats(args),
        Cmd::Train(args) => train::cmd_train(&cfg, seed, args),
        Cmd::Eval(args) => commands::cmd_eval(seed, args),
        Cmd::Replay(args) => commands::cmd_replay(args),
    }
}

/// Parse and run, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
