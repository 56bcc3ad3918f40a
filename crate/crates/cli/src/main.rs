//! `ringswitch` command-line front end.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunArgs, Settings};

#[derive(Parser)]
#[command(
    name = "ringswitch",
    version,
    about = "Plan and simulate AllReduce-family collectives on reconfigurable photonic rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical per-threshold totals, Ring baseline and per-step breakdowns
    Model(RunArgs),
    /// Choose Ring or a reconfiguration threshold for each phase
    Plan(RunArgs),
    /// Flow-level simulation with a per-step timeline
    Simulate(RunArgs),
    /// Grid sweep over sizes, propagation and reconfiguration delays (CSV)
    Sweep(RunArgs),
    /// Static Recursive Doubling vs Ring completion-time ratios (CSV)
    Ratio(RunArgs),
}

type Runner = fn(&Settings, &mut std::io::StdoutLock<'static>) -> config::CliResult<()>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, Runner) = match &cli.command {
        Command::Model(a) => (a, commands::cmd_model),
        Command::Plan(a) => (a, commands::cmd_plan),
        Command::Simulate(a) => (a, commands::cmd_simulate),
        Command::Sweep(a) => (a, commands::cmd_sweep),
        Command::Ratio(a) => (a, commands::cmd_ratio),
    };
    let mut out = std::io::stdout().lock();
    let result = Settings::load(args).and_then(|s| run(&s, &mut out));
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, config::CliError::BrokenPipe) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
