//! The experiment commands behind the CLI: configuration, one function per
//! command, and CSV/JSON rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::{theory, Estimate};
use crate::adversary::attack_by_name;
use crate::nonlocal::{
    estimate_2of2_rate, estimate_win_rate, reduce_to_2of2, reduction_inequality, strategy_by_name,
    theoretical_2of2_rate, theoretical_win_rate, NonlocalError,
};
use crate::protocol::{
    estimate_acceptance, poq_transform, position_in_range, run_prpv, ClassicalStandIn, HonestProver, Participants,
    PoqStep, PreimageThenGuess, PRPVConfig, ProtocolError, Variant,
};
use crate::rng::trial_seed;
use crate::spacetime::Coordinate;

/// Positions swept by the completeness experiment.
pub const SWEEP_POSITIONS: [(i64, i64); 5] = [(1, 1), (5, 4), (3, 2), (7, 4), (199, 100)];

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 10] = [
    "experiment", "n", "k", "trials", "successes", "rate", "ci_low", "ci_high", "theory", "pass",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown attack {0:?}")]
    UnknownAttack(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error("output: {0}")]
    Output(String),
}

impl ExperimentError {
    /// Whether the failure happened before any trial ran.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ExperimentError::ConfigInvalid(_)
                | ExperimentError::UnknownAttack(_)
                | ExperimentError::UnknownStrategy(_)
                | ExperimentError::Protocol(ProtocolError::ConfigInvalid(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Completeness,
    Attack,
    Nonlocal,
    Poq,
    Trace,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Completeness => "completeness",
            Experiment::Attack => "attack",
            Experiment::Nonlocal => "nonlocal",
            Experiment::Poq => "poq",
            Experiment::Trace => "trace",
        }
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "completeness" => Experiment::Completeness,
            "attack" => Experiment::Attack,
            "nonlocal" => Experiment::Nonlocal,
            "poq" => Experiment::Poq,
            "trace" => Experiment::Trace,
            other => return Err(ExperimentError::ConfigInvalid(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ExperimentError::ConfigInvalid(format!("unknown format {other:?}"))),
        }
    }
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub k: usize,
    pub lambda: usize,
    pub trials: u64,
    pub seed: u64,
    /// `None` sweeps [`SWEEP_POSITIONS`] in the completeness experiment and
    /// means 3/2 elsewhere.
    pub position: Option<Coordinate>,
    pub name: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const CONFIG_KEYS: [&str; 9] = ["n", "k", "lambda", "trials", "seed", "pos", "name", "out", "format"];

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            n: 8,
            k: 1,
            lambda: 16,
            trials: 10_000,
            seed: 0,
            position: None,
            name: None,
            out: None,
            format: Format::Csv,
        }
    }

    /// Builds and validates a configuration from `key=value` settings.
    pub fn from_settings(experiment: Experiment, settings: &BTreeMap<String, String>) -> Result<Self, ExperimentError> {
        let mut config = Self::new(experiment);
        for (key, value) in settings {
            let bad = |e: &dyn fmt::Display| ExperimentError::ConfigInvalid(format!("{key}={value}: {e}"));
            match key.as_str() {
                "n" => config.n = value.parse().map_err(|e| bad(&e))?,
                "k" => config.k = value.parse().map_err(|e| bad(&e))?,
                "lambda" => config.lambda = value.parse().map_err(|e| bad(&e))?,
                "trials" => config.trials = value.parse().map_err(|e| bad(&e))?,
                "seed" => config.seed = value.parse().map_err(|e| bad(&e))?,
                "pos" => config.position = Some(value.parse().map_err(|e| bad(&e))?),
                "name" => config.name = Some(value.clone()),
                "out" => config.out = Some(PathBuf::from(value)),
                "format" => config.format = value.parse()?,
                _ => return Err(ExperimentError::ConfigInvalid(format!("unknown key {key:?}"))),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 && self.experiment != Experiment::Trace {
            return Err(ExperimentError::ConfigInvalid("trials must be at least 1".into()));
        }
        if let Some(p) = self.position {
            if !position_in_range(p) {
                return Err(ExperimentError::ConfigInvalid(format!("position {p} outside [1, 2)")));
            }
        }
        self.protocol_config(self.position())
            .validate(Variant::RandomOracle)?;
        match (self.experiment, self.name.as_deref()) {
            (Experiment::Attack, None) => Err(ExperimentError::ConfigInvalid("attack needs --name".into())),
            (Experiment::Attack | Experiment::Trace, Some(name)) if attack_by_name(name, self.n, self.k).is_none() => {
                Err(ExperimentError::UnknownAttack(name.to_string()))
            }
            (Experiment::Nonlocal, None) => Err(ExperimentError::ConfigInvalid("nonlocal needs --name".into())),
            (Experiment::Nonlocal, Some(name)) if strategy_by_name(name).is_none() => {
                Err(ExperimentError::UnknownStrategy(name.to_string()))
            }
            _ => Ok(()),
        }
    }

    fn position(&self) -> Coordinate {
        self.position.unwrap_or_else(|| Coordinate::new(3, 2).expect("3/2"))
    }

    fn protocol_config(&self, position: Coordinate) -> PRPVConfig {
        PRPVConfig::new(self.n, self.k)
            .with_lambda(self.lambda)
            .with_seed(self.seed)
            .with_position(position)
    }
}

/// One line of an experiment report. `pass` is derived from the other
/// fields by the constructors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theory: f64,
    pub pass: bool,
}

impl ResultRow {
    /// Passes iff the interval covers `theory`.
    pub fn covering(experiment: impl Into<String>, n: usize, k: usize, est: &Estimate, theory: f64) -> Self {
        Self::with_pass(experiment, n, k, est, theory, est.contains(theory))
    }

    /// Passes iff the rate is at least `bound`; `theory` holds the bound.
    pub fn at_least(experiment: impl Into<String>, n: usize, k: usize, est: &Estimate, bound: f64) -> Self {
        Self::with_pass(experiment, n, k, est, bound, est.rate >= bound)
    }

    fn with_pass(experiment: impl Into<String>, n: usize, k: usize, est: &Estimate, theory: f64, pass: bool) -> Self {
        Self {
            experiment: experiment.into(),
            n,
            k,
            trials: est.trials,
            successes: est.successes,
            rate: est.rate,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            theory,
            pass,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Rows(Vec<ResultRow>),
    /// JSON-lines trace of one trial, plus whether it was accepted.
    Trace { lines: String, accept: bool },
}

impl Report {
    pub fn passed(&self) -> bool {
        match self {
            Report::Rows(rows) => rows.iter().all(|r| r.pass),
            Report::Trace { .. } => true,
        }
    }

    pub fn rows(&self) -> &[ResultRow] {
        match self {
            Report::Rows(rows) => rows,
            Report::Trace { .. } => &[],
        }
    }

    pub fn render(&self, format: Format) -> Result<String, ExperimentError> {
        let rows = match self {
            Report::Trace { lines, .. } => return Ok(lines.clone()),
            Report::Rows(rows) => rows,
        };
        let out = |e: &dyn fmt::Display| ExperimentError::Output(e.to_string());
        match format {
            Format::Json => serde_json::to_string_pretty(rows).map(|s| s + "\n").map_err(|e| out(&e)),
            Format::Csv => {
                let mut writer = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    writer.serialize(row).map_err(|e| out(&e))?;
                }
                if rows.is_empty() {
                    writer.write_record(CSV_HEADER).map_err(|e| out(&e))?;
                }
                let bytes = writer.into_inner().map_err(|e| out(&e))?;
                String::from_utf8(bytes).map_err(|e| out(&e))
            }
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    config.validate()?;
    match config.experiment {
        Experiment::Completeness => cmd_completeness(config).map(Report::Rows),
        Experiment::Attack => cmd_attack(config).map(|r| Report::Rows(vec![r])),
        Experiment::Nonlocal => cmd_nonlocal(config).map(Report::Rows),
        Experiment::Poq => cmd_poq(config).map(Report::Rows),
        Experiment::Trace => cmd_trace(config),
    }
}

/// Honest acceptance at each position, against `(1 - 2^{-n-1})^k`.
pub fn cmd_completeness(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let positions: Vec<Coordinate> = match config.position {
        Some(p) => vec![p],
        None => SWEEP_POSITIONS
            .iter()
            .map(|&(a, b)| Coordinate::new(a, b).expect("constant position"))
            .collect(),
    };
    let target = theory::honest_parallel(config.n, config.k);
    positions
        .into_iter()
        .map(|p| {
            let prpv = config.protocol_config(p);
            let est = estimate_acceptance(&prpv, Variant::Plain, Participants::Prover(&HonestProver), config.trials)?;
            Ok(ResultRow::covering(format!("completeness@{p}"), config.n, config.k, &est, target))
        })
        .collect()
}

/// Closed-form acceptance of a built-in attack.
pub fn attack_theory(name: &str, n: usize, k: usize) -> Option<f64> {
    Some(match name {
        "guess" | "forward_compiled_guess" => theory::guessing_parallel(n, k),
        "teleport" => theory::honest_parallel(n, k),
        "classical_forward" => theory::zero_obligation_parallel(n, k),
        _ => return None,
    })
}

pub fn cmd_attack(config: &ExperimentConfig) -> Result<ResultRow, ExperimentError> {
    config.validate()?;
    let name = config.name.as_deref().unwrap_or_default();
    let adv = attack_by_name(name, config.n, config.k).ok_or_else(|| ExperimentError::UnknownAttack(name.into()))??;
    let target = attack_theory(name, config.n, config.k).ok_or_else(|| ExperimentError::UnknownAttack(name.into()))?;
    let prpv = config.protocol_config(config.position());
    let est = estimate_acceptance(&prpv, Variant::Plain, Participants::Adversaries(&*adv), config.trials)?;
    Ok(ResultRow::covering(format!("attack:{name}"), config.n, config.k, &est, target))
}

/// Game row, reduced 2-of-2 row, and the reduction inequality
/// `p' >= 2τ - 1 - 5σ`.
pub fn cmd_nonlocal(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let name = config.name.as_deref().unwrap_or_default();
    let unknown = || ExperimentError::UnknownStrategy(name.into());
    let strategy = strategy_by_name(name).ok_or_else(unknown)?;
    let game = estimate_win_rate(config.n, &*strategy, config.trials, config.seed)?;
    let solver = reduce_to_2of2(&*strategy);
    let two = estimate_2of2_rate(config.n, &solver, config.trials, trial_seed(config.seed, u64::MAX))?;
    let (bound, _) = reduction_inequality(&game, &two);
    Ok(vec![
        ResultRow::covering(
            format!("nonlocal:{name}"),
            config.n,
            1,
            &game,
            theoretical_win_rate(name, config.n).ok_or_else(unknown)?,
        ),
        ResultRow::covering(
            format!("2of2:{name}"),
            config.n,
            1,
            &two,
            theoretical_2of2_rate(name).ok_or_else(unknown)?,
        ),
        ResultRow::at_least(format!("reduction:{name}"), config.n, 1, &two, bound),
    ])
}

/// Quantum prover, classical stand-in, and a transcript-order check.
pub fn cmd_poq(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let (n, k) = (config.n, config.k);
    let poq = poq_transform(&config.protocol_config(config.position()))?;
    let quantum = poq.estimate(&HonestProver, config.trials)?;
    let classical = poq.estimate(&ClassicalStandIn(PreimageThenGuess), config.trials)?;
    let expected = [PoqStep::Key, PoqStep::Obligation, PoqStep::Challenge, PoqStep::Answers];
    let checks = config.trials.min(100);
    let mut ordered = 0;
    for i in 0..checks {
        let out = poq.run(&HonestProver, trial_seed(config.seed, i))?;
        if out.transcript.iter().map(|(s, _)| *s).eq(expected) {
            ordered += 1;
        }
    }
    let order = Estimate::from_counts(ordered, checks).map_err(ProtocolError::from)?;
    Ok(vec![
        ResultRow::covering("poq:quantum", n, k, &quantum, theory::honest_parallel(n, k)),
        ResultRow::covering("poq:classical", n, k, &classical, theory::preimage_then_guess_parallel(k)),
        ResultRow::covering("poq:transcript_order", n, k, &order, 1.0),
    ])
}

/// One seeded trial, honest or with the named attack, as a JSON-lines trace.
pub fn cmd_trace(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    config.validate()?;
    let prpv = config.protocol_config(config.position());
    let out = match config.name.as_deref() {
        None => run_prpv(&prpv, Participants::Prover(&HonestProver))?,
        Some(name) => {
            let adv = attack_by_name(name, config.n, config.k)
                .ok_or_else(|| ExperimentError::UnknownAttack(name.into()))??;
            run_prpv(&prpv, Participants::Adversaries(&*adv))?
        }
    };
    Ok(Report::Trace {
        lines: out.trace.to_json_lines(),
        accept: out.verdict.accept(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn config(experiment: Experiment, pairs: &[(&str, &str)]) -> Result<ExperimentConfig, ExperimentError> {
        ExperimentConfig::from_settings(experiment, &settings(pairs))
    }

    #[test]
    fn settings_are_validated() {
        let ok = config(Experiment::Completeness, &[("n", "6"), ("pos", "5/4"), ("format", "json")]).unwrap();
        assert_eq!(ok.n, 6);
        assert_eq!(ok.position, Some(Coordinate::new(5, 4).unwrap()));
        assert_eq!(ok.format, Format::Json);
        let config_err = |pairs: &[(&str, &str)]| config(Experiment::Completeness, pairs).unwrap_err().is_config();
        assert!(config_err(&[("pos", "2/1")]));
        assert!(config_err(&[("pos", "1/0")]));
        assert!(config_err(&[("n", "x")]));
        assert!(config_err(&[("n", "13")]));
        assert!(config_err(&[("k", "0")]));
        assert!(config_err(&[("trials", "0")]));
        assert!(config_err(&[("lambda", "4")]));
        assert!(config_err(&[("color", "red")]));
        assert!(config_err(&[("format", "xml")]));
        assert!(config(Experiment::Completeness, &[("pos", "1/1")]).is_ok());
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            config(Experiment::Attack, &[("name", "nosuch")]),
            Err(ExperimentError::UnknownAttack(_))
        ));
        assert!(matches!(
            config(Experiment::Nonlocal, &[("name", "nosuch")]),
            Err(ExperimentError::UnknownStrategy(_))
        ));
        assert!(config(Experiment::Attack, &[]).unwrap_err().is_config());
    }

    #[test]
    fn csv_columns_are_fixed() {
        let c = config(Experiment::Completeness, &[("n", "4"), ("trials", "50"), ("pos", "3/2")]).unwrap();
        let text = run_experiment(&c).unwrap().render(Format::Csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("completeness@3/2,4,1,50,"));
        assert_eq!(Report::Rows(vec![]).render(Format::Csv).unwrap().trim(), CSV_HEADER.join(","));
    }

    #[test]
    fn completeness_sweeps_every_position() {
        let c = config(Experiment::Completeness, &[("n", "4"), ("trials", "20")]).unwrap();
        let report = run_experiment(&c).unwrap();
        let names: Vec<_> = report.rows().iter().map(|r| r.experiment.as_str()).collect();
        assert_eq!(
            names,
            ["completeness@1/1", "completeness@5/4", "completeness@3/2", "completeness@7/4", "completeness@199/100"]
        );
        for row in report.rows() {
            assert!(row.ci_low <= row.rate && row.rate <= row.ci_high);
            assert_eq!(row.pass, row.ci_low <= row.theory && row.theory <= row.ci_high);
        }
    }

    #[test]
    fn reports_are_byte_identical_for_a_seed() {
        for (experiment, pairs) in [
            (Experiment::Attack, vec![("name", "guess"), ("n", "4"), ("k", "2"), ("trials", "200"), ("seed", "3")]),
            (Experiment::Nonlocal, vec![("name", "measure_and_guess"), ("n", "4"), ("trials", "200")]),
            (Experiment::Poq, vec![("n", "4"), ("trials", "200"), ("format", "json")]),
            (Experiment::Trace, vec![("n", "4"), ("seed", "7")]),
        ] {
            let c = config(experiment, &pairs).unwrap();
            let a = run_experiment(&c).unwrap().render(c.format).unwrap();
            let b = run_experiment(&c).unwrap().render(c.format).unwrap();
            assert_eq!(a, b, "{experiment:?}");
            assert!(!a.is_empty());
        }
    }

    #[test]
    fn trace_shows_exact_rational_times() {
        let c = config(Experiment::Trace, &[("n", "4"), ("pos", "3/2")]).unwrap();
        let Report::Trace { lines, .. } = run_experiment(&c).unwrap() else { panic!() };
        for t in ["\"3/2\"", "\"3/1\"", "\"4/1\"", "\"5/2\""] {
            assert!(lines.contains(&format!("\"time\":{t}")), "missing {t}");
        }
    }

    #[test]
    fn nonlocal_rows_and_inequality() {
        let c = config(Experiment::Nonlocal, &[("name", "always_fail"), ("n", "4"), ("trials", "100")]).unwrap();
        let rows = cmd_nonlocal(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].successes, 0);
        assert!(rows[2].pass && rows[2].theory < 0.0);
    }
}
