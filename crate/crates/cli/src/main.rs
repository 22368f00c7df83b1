//! Batch driver for the market simulator and econometrics toolkit.
//!
//! Every command reads its inputs, writes its outputs plus a run manifest
//! into `--out` (or `$ADMARKET_OUT/<command>`), and exits 0 on success,
//! 2 on user/config errors, 3 on I/O failures. Outputs are byte-identical
//! across reruns with the same inputs and seed.

mod cmds;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use errors::CliError;

#[derive(Parser)]
#[command(name = "admarket", version, about = "Second-price ad auction simulator and estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory; defaults to $ADMARKET_OUT/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a market scenario and emit per-impression outcomes.
    Simulate {
        /// Market configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config file's disclosure regime.
        #[arg(long, value_parser = ["none", "partial", "full"])]
        regime: Option<String>,
        /// Treated bidder indices for the partial regime.
        #[arg(long, value_delimiter = ',')]
        treated: Vec<usize>,
        /// Additionally run the none and full regimes over the same draw.
        #[arg(long)]
        paired: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a two-year site-week panel from a generation config.
    GeneratePanel {
        /// Panel generation config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Weighted fixed-effects diff-in-diff with clustered standard errors.
    Did {
        /// Panel file (delimited text).
        #[arg(long)]
        panel: PathBuf,
        /// Model specification file (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Fit a synthetic control for one treated buyer.
    Synth {
        #[command(flatten)]
        synth: cmds::SynthArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// MSPE-ratio placebo inference over every buyer.
    Placebo {
        #[command(flatten)]
        synth: cmds::SynthArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Project yearly revenue gains from a CPM uplift.
    ProjectRevenue {
        #[arg(long)]
        weekly_supply: f64,
        #[arg(long)]
        cpm_uplift: f64,
        #[arg(long)]
        weeks: f64,
        #[arg(long)]
        n_sites: f64,
        #[arg(long)]
        commission: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn resolve_out(out: &OutArg, command: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = &out.out {
        return Ok(dir.clone());
    }
    match std::env::var_os("ADMARKET_OUT") {
        Some(root) => Ok(PathBuf::from(root).join(command)),
        None => Err(CliError::user(
            "no output directory: pass --out or set ADMARKET_OUT",
        )),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            regime,
            treated,
            paired,
            out,
        } => {
            let out = resolve_out(&out, "simulate")?;
            cmds::simulate(&config, seed, regime.as_deref(), &treated, paired, &out)
        }
        Command::GeneratePanel { config, seed, out } => {
            let out = resolve_out(&out, "generate-panel")?;
            cmds::generate_panel(&config, seed, &out)
        }
        Command::Did { panel, spec, out } => {
            let out = resolve_out(&out, "did")?;
            cmds::did(&panel, &spec, &out)
        }
        Command::Synth { synth, out } => {
            let out = resolve_out(&out, "synth")?;
            cmds::synth(&synth, &out)
        }
        Command::Placebo { synth, out } => {
            let out = resolve_out(&out, "placebo")?;
            cmds::placebo(&synth, &out)
        }
        Command::ProjectRevenue {
            weekly_supply,
            cpm_uplift,
            weeks,
            n_sites,
            commission,
            out,
        } => {
            let out = resolve_out(&out, "project-revenue")?;
            cmds::project_revenue(weekly_supply, cpm_uplift, weeks, n_sites, commission, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}
