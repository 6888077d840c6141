//! Monte Carlo trial fan-out and binomial confidence intervals.
//!
//! Trial `i` of a run with master seed `m` always receives the seed
//! [`trial_seed(m, i)`](crate::rng::trial_seed), whichever execution path is
//! used, and successes are summed, so results do not depend on scheduling.

use serde::Serialize;
use thiserror::Error;

use crate::rng::trial_seed;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("trial count must be at least 1")]
pub struct InvalidTrials;

/// Success count with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self, InvalidTrials> {
        if trials == 0 {
            return Err(InvalidTrials);
        }
        let rate = successes as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z95);
        Ok(Self {
            trials,
            successes,
            rate,
            ci_low: ci_low.min(rate),
            ci_high: ci_high.max(rate),
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    /// Plug-in binomial standard error `sqrt(p(1-p)/N)`.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Runs `trials` independent trials; `trial(index, seed)` reports success.
/// Uses the rayon pool when the `parallel` feature is on.
pub fn run_trials<E, F>(trials: u64, master_seed: u64, trial: F) -> Result<Estimate, E>
where
    E: Send + From<InvalidTrials>,
    F: Fn(u64, u64) -> Result<bool, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(trials, master_seed, trial)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(trials, master_seed, trial)
    }
}

pub fn run_trials_sequential<E, F>(trials: u64, master_seed: u64, trial: F) -> Result<Estimate, E>
where
    E: From<InvalidTrials>,
    F: Fn(u64, u64) -> Result<bool, E>,
{
    if trials == 0 {
        return Err(InvalidTrials.into());
    }
    let mut successes = 0u64;
    for i in 0..trials {
        successes += trial(i, trial_seed(master_seed, i))? as u64;
    }
    Ok(Estimate::from_counts(successes, trials)?)
}

#[cfg(feature = "parallel")]
pub fn run_trials_parallel<E, F>(trials: u64, master_seed: u64, trial: F) -> Result<Estimate, E>
where
    E: Send + From<InvalidTrials>,
    F: Fn(u64, u64) -> Result<bool, E> + Sync + Send,
{
    use rayon::prelude::*;

    if trials == 0 {
        return Err(InvalidTrials.into());
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| trial(i, trial_seed(master_seed, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Estimate::from_counts(successes, trials)?)
}

/// Maps every trial to a value, in trial order.
pub fn map_trials<T, E, F>(trials: u64, master_seed: u64, trial: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64, u64) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map(|i| trial(i, trial_seed(master_seed, i)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials)
            .map(|i| trial(i, trial_seed(master_seed, i)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq)]
    enum E {
        Trials,
        Boom,
    }

    impl From<InvalidTrials> for E {
        fn from(_: InvalidTrials) -> Self {
            E::Trials
        }
    }

    #[test]
    fn zero_trials_is_an_error() {
        assert_eq!(run_trials(0, 1, |_, _| Ok::<_, E>(true)).unwrap_err(), E::Trials);
        assert_eq!(Estimate::from_counts(0, 0).unwrap_err(), InvalidTrials);
    }

    #[test]
    fn always_failing_interval() {
        let est = run_trials(10_000, 1, |_, _| Ok::<_, E>(false)).unwrap();
        assert_eq!(est.rate, 0.0);
        assert_eq!(est.ci_low, 0.0);
        assert!(est.ci_high > 0.0 && est.ci_high < 4.0 / 10_000.0);
    }

    #[test]
    fn wilson_matches_reference_values() {
        // Reference: statsmodels proportion_confint(30, 100, method="wilson")
        let (lo, hi) = wilson_interval(30, 100, Z95);
        assert!((lo - 0.2189489).abs() < 1e-6, "{lo}");
        assert!((hi - 0.3958485).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn errors_propagate() {
        let r = run_trials(100, 1, |i, _| if i == 57 { Err(E::Boom) } else { Ok(true) });
        assert_eq!(r.unwrap_err(), E::Boom);
    }

    #[test]
    fn sequential_and_default_paths_agree() {
        let f = |_: u64, seed: u64| Ok::<_, E>(seed.is_multiple_of(3));
        let a = run_trials(5_000, 77, f).unwrap();
        let b = run_trials_sequential(5_000, 77, f).unwrap();
        assert_eq!(a, b);
    }
}
