//! Command-line front end: load an experiment config (file or built-in
//! preset), apply overrides, run it, and write CSV artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use optilin::harness::{execute, preset, ExperimentConfig, ExperimentKind, PRESET_NAMES};

#[derive(Parser)]
#[command(
    name = "optilin",
    version,
    about = "Online regression and linear bandit experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an online-regression experiment (ridge / forward family).
    Regress(RunArgs),
    /// Run a stationary optimistic linear bandit experiment.
    Bandit(RunArgs),
    /// Run a drifting-target bandit experiment with discounted agents.
    Drift(RunArgs),
    /// Tabulate the closed-form bounds for a config without simulating.
    Bounds(RunArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct RunArgs {
    /// Path to a TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in preset name: fig1, fig2, fig3, abrupt, slow.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory; overrides the config's `[outputs] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Replicate-count override.
    #[arg(long, value_name = "N")]
    replicates: Option<u32>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &args.config {
        return ExperimentConfig::from_path(path)
            .with_context(|| format!("failed to load config {}", path.display()));
    }
    let name = args.preset.as_deref().expect("clap guarantees a source");
    preset(name).map_err(|_| {
        anyhow!(
            "unknown preset `{name}`; available presets: {}",
            PRESET_NAMES.join(", ")
        )
    })
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (args, expected) = match &cli.command {
        Command::Regress(a) => (a, Some(ExperimentKind::Regression)),
        Command::Bandit(a) => (a, Some(ExperimentKind::Bandit)),
        Command::Drift(a) => (a, Some(ExperimentKind::Nonstationary)),
        Command::Bounds(a) => (a, None),
    };
    let mut config = load_config(args)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(replicates) = args.replicates {
        config.replicates = replicates;
    }
    match expected {
        // The bounds subcommand tabulates any config's closed forms.
        None => config.kind = ExperimentKind::BoundsTable,
        Some(kind) if config.kind != kind => bail!(
            "this subcommand runs `{}` configs, but the config declares kind `{}`",
            kind.label(),
            config.kind.label()
        ),
        Some(_) => {}
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.outputs.as_ref().map(|o| o.dir.clone()))
        .ok_or_else(|| anyhow!("no output directory: pass --out or set `[outputs] dir`"))?;
    let files = execute(&config, &out_dir)?;
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for file in files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
