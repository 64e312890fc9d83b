use std::path::PathBuf;
use std::process::ExitCode;

use aeroarm::{cmd_disturb, cmd_eval, cmd_plan, cmd_sweep, cmd_train, sweep, Axis, CliError, Context, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aeroarm", version, about = "Planar aerial-manipulator planning, learning and disturbance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Root RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the feasible corridor and plan the base path.
    Plan(Common),
    /// Train the tracking agent and evaluate it greedily.
    Train(Common),
    /// Evaluate a saved Q-table.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Q-table file; defaults to qtable.bin in the output directory.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Hyperparameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lr, gamma or samples; all three when omitted.
        #[arg(long)]
        axis: Option<Axis>,
    },
    /// Arm-on-body disturbance study.
    Disturb {
        #[command(flatten)]
        common: Common,
        /// Q-table file; trains from scratch when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

impl Common {
    fn context(&self) -> Result<Context, CliError> {
        let overrides = Overrides {
            seed: self.seed,
            episodes: self.episodes,
            learning_rate: self.lr,
            discount: self.gamma,
            out: self.out.clone(),
        };
        Context::load(&self.config, &overrides)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(c) => cmd_plan(&c.context()?).map(drop),
        Command::Train(c) => cmd_train(&c.context()?).map(drop),
        Command::Eval { common, table } => cmd_eval(&common.context()?, table.as_deref()).map(drop),
        Command::Sweep { common, axis } => {
            let axes = axis.map_or_else(|| Axis::ALL.to_vec(), |a| vec![a]);
            cmd_sweep(&common.context()?, &axes, sweep::thread_limit()).map(drop)
        }
        Command::Disturb { common, table } => cmd_disturb(&common.context()?, table.as_deref()).map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
