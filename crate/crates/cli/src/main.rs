//! Command-line surface for the hierarchy analysis library.
//!
//! Exit codes: 0 success, 2 argument or config error, 3 numerical tripwire.

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use orgscale_cli::output::Format;
use orgscale_cli::{commands, config, Tripwire};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; flags and --set overrides take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single config key, e.g. --set fan_in=7. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output path; defaults to <ORGSCALE_OUT_DIR>/<command>.<format>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// RNG seed; overrides the config seed where a command uses one.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; any value produces identical results.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Parser)]
#[command(name = "orgscale", version, about = "Majority-vote hierarchy analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the majority map, its correlated variant, and the recursion.
    Maps(Common),
    /// Classify the (rho, gamma) plane and emit the analytic boundaries.
    PhaseDiagram(Common),
    /// Monte Carlo rho-sweep against the exact recursion.
    Simulate(Common),
    /// Envelope, recommendation, and topology tables over a budget grid.
    Design(Common),
    /// Continuous-loss depth curve, floor, and compute split.
    Continuous(Common),
    /// Star vs tree vs single-agent comparison over a budget grid.
    Compare(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Maps(c)
            | Command::PhaseDiagram(c)
            | Command::Simulate(c)
            | Command::Design(c)
            | Command::Continuous(c)
            | Command::Compare(c) => c,
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.max(1))
        .build_global()
        .ok();
    let out = common.out.clone();
    let format = common.format;
    match &cli.command {
        Command::Maps(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_maps(&cfg, out, format)
        }
        Command::PhaseDiagram(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_phase_diagram(&cfg, out, format)
        }
        Command::Simulate(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_simulate(&cfg, out, format, c.seed)
        }
        Command::Design(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_design(&cfg, out, format)
        }
        Command::Continuous(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_continuous(&cfg, out, format)
        }
        Command::Compare(c) => {
            let cfg = config::resolve(c.config.as_deref(), &c.overrides)?;
            commands::cmd_compare(&cfg, out, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<Tripwire>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
