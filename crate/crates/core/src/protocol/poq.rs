//! The timing-free interactive protocol obtained by running both verifiers
//! in one place: key, obligation, challenge, answers.

use serde::Serialize;

use super::{participant_seed, PRPVConfig, Payload, ProtocolError, ProverFactory, TrialEnv, Variant};
use crate::experiment::{run_trials, Estimate};
use crate::puzzle::Challenge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoqStep {
    Key,
    Obligation,
    Challenge,
    Answers,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoqOutcome {
    pub accept: bool,
    pub challenge: Challenge,
    /// Messages in the order they were exchanged.
    pub transcript: Vec<(PoqStep, Vec<u8>)>,
}

#[derive(Debug, Clone)]
pub struct PoqProtocol {
    config: PRPVConfig,
}

/// Drops the timing layer from the plain protocol. The prover position is
/// irrelevant and not checked.
pub fn poq_transform(config: &PRPVConfig) -> Result<PoqProtocol, ProtocolError> {
    config.validate_parameters(Variant::Plain)?;
    Ok(PoqProtocol { config: config.clone() })
}

impl PoqProtocol {
    pub fn config(&self) -> &PRPVConfig {
        &self.config
    }

    /// One run with the verifier randomness of `trial_seed`, the same as the
    /// spacetime protocol would draw for that seed.
    pub fn run(&self, prover: &dyn ProverFactory, trial_seed: u64) -> Result<PoqOutcome, ProtocolError> {
        let env = TrialEnv::sample(&self.config, Variant::Plain, trial_seed)?;
        let key = env.resolve(env.key_payload()).expect("the trial's own key");
        let mut session = prover.session(participant_seed(trial_seed));
        let mut transcript = vec![(PoqStep::Key, env.key_payload().to_vec())];
        let obligation = session.commit(&key)?;
        transcript.push((PoqStep::Obligation, Payload::Obligation(obligation.clone()).encode()));
        let challenge = env.verifier_challenge()?;
        transcript.push((PoqStep::Challenge, env.challenge_payload().to_vec()));
        let answers = session.respond(&challenge)?;
        transcript.push((PoqStep::Answers, Payload::Answers(answers.clone()).encode()));
        let accept = env.puzzle().verify(env.trapdoor(), &obligation, &challenge, &answers);
        Ok(PoqOutcome {
            accept,
            challenge,
            transcript,
        })
    }

    pub fn estimate(&self, prover: &dyn ProverFactory, trials: u64) -> Result<Estimate, ProtocolError> {
        run_trials(trials, self.config.seed, |_, seed| self.run(prover, seed).map(|o| o.accept))
    }
}
