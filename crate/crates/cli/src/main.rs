//! `posverif`: runs the position verification experiments and writes CSV or
//! JSON reports.
//!
//! Settings come from, in increasing priority: built-in defaults,
//! `POSVERIF_SEED`, a `--config` file of `key=value` lines, and flags.
//! Exit status is 0 when every row passes, 1 when any row fails, and 2 on a
//! configuration error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posverif_core::experiment::{run_experiment, Experiment, ExperimentConfig, ExperimentError, CONFIG_KEYS};

#[derive(Parser)]
#[command(name = "posverif", version, about = "Position verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Honest acceptance across prover positions.
    Completeness(Flags),
    /// Acceptance of a named two-adversary attack.
    Attack(Flags),
    /// Non-local game, its 2-of-2 reduction, and the reduction inequality.
    Nonlocal(Flags),
    /// Proof-of-quantumness transform with quantum and classical provers.
    Poq(Flags),
    /// JSON-lines trace of one seeded trial.
    Trace(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Prover position as "num/den".
    #[arg(long)]
    pos: Option<String>,
    /// Attack or strategy name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// File of key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let fields = [
            ("n", self.n.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("pos", self.pos.clone()),
            ("name", self.name.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("format", self.format.clone()),
        ];
        fields.into_iter().filter_map(|(k, v)| Some((k, v?))).collect()
    }
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ExperimentError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ExperimentError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let mut settings = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ExperimentError::ConfigInvalid(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(ExperimentError::ConfigInvalid(format!("{}:{}: unknown key {key:?}", path.display(), i + 1)));
        }
        settings.insert(key.to_string(), value.trim().to_string());
    }
    Ok(settings)
}

fn settings(flags: &Flags) -> Result<BTreeMap<String, String>, ExperimentError> {
    let mut settings = BTreeMap::new();
    if let Ok(seed) = std::env::var("POSVERIF_SEED") {
        settings.insert("seed".to_string(), seed);
    }
    if let Some(path) = &flags.config {
        settings.extend(read_config_file(path)?);
    }
    for (key, value) in flags.overrides() {
        settings.insert(key.to_string(), value);
    }
    Ok(settings)
}

fn run(experiment: Experiment, flags: &Flags) -> Result<bool, ExperimentError> {
    let config = ExperimentConfig::from_settings(experiment, &settings(flags)?)?;
    let report = run_experiment(&config)?;
    let text = report.render(config.format)?;
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::Completeness(f) => (Experiment::Completeness, f),
        Command::Attack(f) => (Experiment::Attack, f),
        Command::Nonlocal(f) => (Experiment::Nonlocal, f),
        Command::Poq(f) => (Experiment::Poq, f),
        Command::Trace(f) => (Experiment::Trace, f),
    };
    match run(experiment, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("posverif {}: {e}", experiment.as_str());
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
