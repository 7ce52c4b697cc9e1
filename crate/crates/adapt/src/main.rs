use std::path::PathBuf;
use std::process::ExitCode;

use cavity_adapt::{cmd_ensemble, cmd_equilibria, cmd_run, load_config, CliError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavity-adapt", version, about = "Multimode cavity self-ordering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate and classify equilibria; export the intensity landscape.
    Equilibria(Common),
    /// Run one trajectory.
    Run(Common),
    /// Run several independently seeded trajectories and summarize them.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config; merged over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set (fig2a, fig2b, fig2c, fig3a, fig3b, fig3c, fig4, fig6desk, fig6full).
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, runs) = match &cli.command {
        Command::Equilibria(c) | Command::Run(c) => (c, None),
        Command::Ensemble { common, runs } => (common, Some(*runs)),
    };
    let doc = load_config(common.config.as_deref(), common.preset.as_deref(), common.seed)?;
    match cli.command {
        Command::Equilibria(_) => cmd_equilibria(&doc, &common.out)?,
        Command::Run(_) => cmd_run(&doc, &common.out)?,
        Command::Ensemble { .. } => cmd_ensemble(&doc, &common.out, runs.unwrap_or(1))?,
    };
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
