//! `scenid`: simulate, sound, estimate, build datasets, train and evaluate
//! the scenario classifier. Every run that writes files leaves a
//! `<output>.manifest.json` that `scenid replay` re-executes.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{DatasetConfig, EstimateConfig, EvalConfig, SimulateConfig, SoundConfig, TrainCmdConfig};
use manifest::{manifest_path, RunManifest};

#[derive(Parser)]
#[command(name = "scenid", version, about = "Fading-channel scenario identification")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress at info level.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random draw of the run; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Primary output file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled D-DPDP dataset (JSON Lines).
    Dataset {
        #[command(flatten)]
        common: Common,
    },
    /// Train the classifier on the noiseless records of a dataset.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy per SNR of a model on the noisy records of a dataset.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Channel order, delays and amplitudes from a received m-sequence probe.
    Sound {
        #[arg(long)]
        signal: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// BEM-LS tap-gain estimate of a received signal with known pilots.
    Estimate {
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        pilots: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit fading tap-gain traces of one scenario as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a recorded invocation from its manifest.
    Replay {
        manifest: PathBuf,
        /// Write the primary output here instead of the recorded path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value.as_deref().with_context(|| format!("--{flag} is required"))
}

/// Config from file plus the seed override, or `None` after printing it.
fn resolve<T>(common: &Common, apply_seed: impl FnOnce(&mut T, u64)) -> Result<Option<T>>
where
    T: DeserializeOwned + Serialize + Default,
{
    let mut cfg: T = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        apply_seed(&mut cfg, seed);
    }
    if common.print_config {
        print!("{}", config::to_toml(&cfg)?);
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn start<T: Serialize>(name: &str, cfg: &T, common: &Common, threads: Option<usize>) -> Result<RunManifest> {
    let mut m = RunManifest::new(name, serde_json::to_value(cfg)?);
    m.config_path = common.config.clone();
    m.seed = common.seed;
    m.threads = threads;
    Ok(m)
}

fn finish(m: &RunManifest, output: &Path) -> Result<()> {
    m.save(&manifest_path(output))
}

fn ignore_seed<T>(_: &mut T, seed: u64) {
    log::warn!("--seed {seed} has no effect: this subcommand draws no random numbers");
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Dataset { common } => {
            let Some(cfg) = resolve::<DatasetConfig>(&common, |c, s| c.master_seed = s)? else { return Ok(()) };
            let output = common.output.clone().unwrap_or_else(|| "dataset.jsonl".into());
            let mut m = start("dataset", &cfg, &common, threads)?;
            commands::dataset(&cfg, &output, &mut m)?;
            finish(&m, &output)
        }
        Command::Train { dataset, common } => {
            let Some(cfg) = resolve::<TrainCmdConfig>(&common, |c, s| {
                c.init_seed = s;
                c.train.seed = s;
            })?
            else {
                return Ok(());
            };
            let output = common.output.clone().unwrap_or_else(|| "model.json".into());
            let mut m = start("train", &cfg, &common, threads)?;
            commands::train_model(&cfg, required(&dataset, "dataset")?, &output, &mut m)?;
            finish(&m, &output)
        }
        Command::Eval { model, dataset, common } => {
            let Some(cfg) = resolve::<EvalConfig>(&common, ignore_seed)? else { return Ok(()) };
            let output = common.output.clone().unwrap_or_else(|| "report.csv".into());
            let mut m = start("eval", &cfg, &common, threads)?;
            commands::eval(&cfg, required(&model, "model")?, required(&dataset, "dataset")?, &output, &mut m)?;
            finish(&m, &output)
        }
        Command::Sound { signal, common } => {
            let Some(cfg) = resolve::<SoundConfig>(&common, ignore_seed)? else { return Ok(()) };
            let mut m = start("sound", &cfg, &common, threads)?;
            commands::sound(&cfg, required(&signal, "signal")?, common.output.as_deref(), &mut m)?;
            match &common.output {
                Some(output) => finish(&m, output),
                None => Ok(()),
            }
        }
        Command::Estimate { signal, pilots, common } => {
            let Some(cfg) = resolve::<EstimateConfig>(&common, ignore_seed)? else { return Ok(()) };
            let output = common.output.clone().unwrap_or_else(|| "cir.csv".into());
            let mut m = start("estimate", &cfg, &common, threads)?;
            commands::estimate(&cfg, required(&signal, "signal")?, required(&pilots, "pilots")?, &output, &mut m)?;
            finish(&m, &output)
        }
        Command::Simulate { common } => {
            let Some(cfg) = resolve::<SimulateConfig>(&common, |c, s| c.sim.seed = s)? else { return Ok(()) };
            let output = common.output.clone().unwrap_or_else(|| "fading.csv".into());
            let mut m = start("simulate", &cfg, &common, threads)?;
            commands::simulate(&cfg, &output, &mut m)?;
            finish(&m, &output)
        }
        Command::Replay { manifest, output } => replay(&manifest, output, threads),
    }
}

fn snapshot<T: DeserializeOwned>(m: &RunManifest) -> Result<T> {
    serde_json::from_value(m.config.clone())
        .with_context(|| format!("manifest config is not a valid {} configuration", m.subcommand))
}

/// Runs the recorded subcommand with the recorded configuration and inputs.
/// The new run's manifest is written next to its primary output.
fn replay(path: &Path, output: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let old = RunManifest::load(path)?;
    let mut m = RunManifest::new(&old.subcommand, old.config.clone());
    m.config_path = old.config_path.clone();
    m.seed = old.seed;
    m.threads = threads;
    let primary = |name: &str| -> Result<PathBuf> {
        match &output {
            Some(p) => Ok(p.clone()),
            None => Ok(old.output(name)?.to_path_buf()),
        }
    };
    let out = match old.subcommand.as_str() {
        "dataset" => {
            let out = primary("dataset")?;
            commands::dataset(&snapshot(&old)?, &out, &mut m)?;
            out
        }
        "train" => {
            let out = primary("model")?;
            commands::train_model(&snapshot(&old)?, old.input("dataset")?, &out, &mut m)?;
            out
        }
        "eval" => {
            let out = primary("report")?;
            commands::eval(&snapshot(&old)?, old.input("model")?, old.input("dataset")?, &out, &mut m)?;
            out
        }
        "sound" => {
            let out = primary("result")?;
            commands::sound(&snapshot(&old)?, old.input("signal")?, Some(&out), &mut m)?;
            out
        }
        "estimate" => {
            let out = primary("cir")?;
            commands::estimate(&snapshot(&old)?, old.input("signal")?, old.input("pilots")?, &out, &mut m)?;
            out
        }
        "simulate" => {
            let out = primary("traces")?;
            commands::simulate(&snapshot(&old)?, &out, &mut m)?;
            out
        }
        other => anyhow::bail!("{}: unknown subcommand {other:?}", path.display()),
    };
    finish(&m, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their sources in their message.
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
