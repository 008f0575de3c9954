use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use envex_harness::{resolve_output, run_all, run_stage, ExperimentConfig, HarnessError, Layout, Stage};

#[derive(Parser)]
#[command(name = "envex", version, about = "Envelope-domain attribution experiments for bearing-fault classifiers")]
struct Cli {
    /// TOML experiment config; defaults are used if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides ENVEX_OUT and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the dataset splits.
    Synth,
    /// Train the classifiers and fit BASE.
    Train,
    /// Select strata and compute attributions.
    Attribute,
    /// Score attributions against the fault harmonics.
    Align,
    /// Collect tables into summary.json and summary.txt.
    Report,
    /// Run every stage in order.
    Run,
    /// Print the effective config as TOML.
    Config,
}

fn run(cli: Cli) -> envex_harness::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.output_dir = resolve_output(&cfg, cli.out.as_deref());
    cfg.validate()?;
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }
    let layout = Layout::new(&cfg.output_dir);
    let stage = match cli.command {
        Command::Synth => Stage::Synth,
        Command::Train => Stage::Train,
        Command::Attribute => Stage::Attribute,
        Command::Align => Stage::Align,
        Command::Report => Stage::Report,
        Command::Run => return run_all(&cfg, &layout),
        Command::Config => {
            print!("{}", toml::to_string_pretty(&cfg).map_err(|e| HarnessError::Config(e.to_string()))?);
            return Ok(());
        }
    };
    run_stage(stage, &cfg, &layout)?;
    if stage == Stage::Report {
        print!("{}", std::fs::read_to_string(layout.summary_txt()).map_err(HarnessError::io(layout.summary_txt()))?);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
