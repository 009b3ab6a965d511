//! `quasipot`: fixed points, characteristics, training, paths, exit times and
//! control of planar stochastic systems from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig, OUT_DIR_ENV};
use error::CliError;

#[derive(Parser)]
#[command(name = "quasipot", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Locate and classify the fixed points of the drift.
    FixedPoints,
    /// Shoot characteristics and write the per-cell dataset.
    Shoot,
    /// Train the network on the dataset and write a checkpoint.
    Train,
    /// Evaluate a checkpoint on a lattice over the domain.
    EvalGrid,
    /// Trace the most probable exit path.
    TracePath,
    /// Estimate the mean exit time under the gain `c`.
    ExitTime,
    /// Steer the mean exit time to the target time.
    Control,
    /// Shoot, train and control in one run.
    Repro,
}

#[derive(Args)]
struct Flags {
    /// Flat TOML file with run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long = "target-time", global = true)]
    target_time: Option<f64>,
    /// Output directory (also settable through QUASIPOT_OUT_DIR).
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long = "n-traj", global = true)]
    n_traj: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Control gain for exit-time.
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Training steps.
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// Number of characteristic seeds.
    #[arg(long = "seed-count", global = true)]
    seed_count: Option<usize>,
    /// Use the closed-form quasipotential (gamma = 1) instead of a checkpoint.
    #[arg(long, global = true)]
    analytic: bool,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let f = cli.flags;
    let overrides = Overrides {
        seed: f.seed,
        gamma: f.gamma,
        sigma: f.sigma,
        target_time: f.target_time,
        out_dir: f.out_dir,
        n_traj: f.n_traj,
        dt: f.dt,
        c: f.c,
        checkpoint: f.checkpoint,
        steps: f.steps,
        seed_count: f.seed_count,
        analytic: f.analytic,
        serial: f.serial,
    };
    let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let cfg = RunConfig::resolve(f.config.as_deref(), env_dir, &overrides)?;
    match cli.command {
        Command::FixedPoints => commands::cmd_fixed_points(&cfg),
        Command::Shoot => commands::cmd_shoot(&cfg).map(|_| ()),
        Command::Train => commands::cmd_train(&cfg),
        Command::EvalGrid => commands::cmd_eval_grid(&cfg),
        Command::TracePath => commands::cmd_trace_path(&cfg),
        Command::ExitTime => commands::cmd_exit_time(&cfg),
        Command::Control => commands::cmd_control(&cfg),
        Command::Repro => commands::cmd_repro(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ");
            eprintln!("{}", CliError::new(error::ErrorCode::Config, msg));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code.exit_status() as u8)
        }
    }
}
