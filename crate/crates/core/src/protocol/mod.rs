//! Position verification on the spacetime simulator.
//!
//! V0 sits at 0 and broadcasts the public key at t = 0. V1 sits at 3 and
//! broadcasts the challenge at t = 1. An honest prover in `[1, 2)` answers
//! each message the instant it arrives, so its obligation reaches V0 at
//! `2p` and V1 at 3, and its answers reach V0 at 4 and V1 at `7 - 2p`.
//! The verifiers accept iff
//!
//! | message | at V0   | at V1   |
//! |---------|---------|---------|
//! | `y`     | `t < 4` | `t = 3` |
//! | `ans`   | `t = 4` | `t ≤ 5` |
//!
//! both sides saw byte-identical `y` and `ans`, and the answers verify
//! under the trapdoor. With `k > 1` every message carries all `k`
//! instances. In the random-oracle variant both verifiers send nonces
//! instead and the challenge is `H(x0 ⊕ x1)`.

mod oracle;
mod payload;
mod poq;
mod prover;

pub use oracle::RandomOracle;
pub use payload::{Payload, TAG_ANSWERS, TAG_CHALLENGE, TAG_KEY, TAG_NONCE, TAG_OBLIGATION, TAG_PRIVATE};
pub use poq::{poq_transform, PoqOutcome, PoqProtocol, PoqStep};
pub use prover::{
    classical_tape, honest_prover, ClassicalProver, ClassicalStandIn, HonestProver, InteractiveProver,
    PreimageThenGuess, ProverFactory, ZeroObligationGuesser,
};

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{self, AdversaryError, CanonicalAdversary};
use crate::bits::Bits;
use crate::experiment::{run_trials, Estimate, InvalidTrials};
use crate::puzzle::{
    AnswerVector, Challenge, Obligation, ObligationSampler, PuzzleError, RepeatedPublic, RepeatedPuzzle,
    RepeatedTrapdoor, Repetition,
};
use crate::qsim::QsimError;
use crate::rng::{derive_seed, derived_rng, stream};
use crate::spacetime::{Action, Coordinate, PartyBehavior, PartyId, Simulation, SpacetimeError, SpacetimeMessage, Trace};

pub const V0_POSITION: i64 = 0;
pub const V1_POSITION: i64 = 3;
/// Simulated time after which nothing can still affect a verdict.
pub const HORIZON: i64 = 10;
pub const MIN_LAMBDA: usize = 8;
pub const MAX_LAMBDA: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("trial count must be at least 1")]
    InvalidTrials,
}

impl From<InvalidTrials> for ProtocolError {
    fn from(_: InvalidTrials) -> Self {
        ProtocolError::InvalidTrials
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// V1 sends the challenge bits.
    Plain,
    /// V0 and V1 send λ-bit nonces; the challenge is `H(x0 ⊕ x1)`.
    RandomOracle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PRPVConfig {
    pub n: usize,
    pub k: usize,
    pub repetition: Repetition,
    pub prover_position: Coordinate,
    pub lambda: usize,
    pub seed: u64,
}

impl PRPVConfig {
    /// Parallel repetition, prover at 3/2, λ = 16, seed 0.
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            repetition: Repetition::Parallel,
            prover_position: Coordinate::new(3, 2).expect("nonzero denominator"),
            lambda: 16,
            seed: 0,
        }
    }

    pub fn with_position(mut self, position: Coordinate) -> Self {
        self.prover_position = position;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lambda(mut self, lambda: usize) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_repetition(mut self, repetition: Repetition) -> Self {
        self.repetition = repetition;
        self
    }

    pub fn puzzle(&self) -> Result<RepeatedPuzzle, ProtocolError> {
        RepeatedPuzzle::new(self.n, self.k, self.repetition)
            .map_err(|e| ProtocolError::ConfigInvalid(e.to_string()))
    }

    /// Everything except the prover position.
    fn validate_parameters(&self, variant: Variant) -> Result<RepeatedPuzzle, ProtocolError> {
        let puzzle = self.puzzle()?;
        if variant == Variant::RandomOracle && !(MIN_LAMBDA..=MAX_LAMBDA).contains(&self.lambda) {
            return Err(ProtocolError::ConfigInvalid(format!(
                "lambda={} outside [{MIN_LAMBDA}, {MAX_LAMBDA}]",
                self.lambda
            )));
        }
        Ok(puzzle)
    }

    pub fn validate(&self, variant: Variant) -> Result<RepeatedPuzzle, ProtocolError> {
        let puzzle = self.validate_parameters(variant)?;
        if !position_in_range(self.prover_position) {
            return Err(ProtocolError::ConfigInvalid(format!(
                "prover position {} outside [1, 2)",
                self.prover_position
            )));
        }
        Ok(puzzle)
    }
}

/// Whether `p ∈ [1, 2)`, compared exactly.
pub fn position_in_range(p: Coordinate) -> bool {
    p >= Coordinate::integer(1) && p < Coordinate::integer(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Reason {
    TimingY0,
    TimingY1,
    TimingAns0,
    TimingAns1,
    Mismatch,
    VerFail,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Verdict {
    accept: bool,
    reason: Reason,
}

impl Verdict {
    pub fn accepted() -> Self {
        Self {
            accept: true,
            reason: Reason::None,
        }
    }

    pub fn rejected(reason: Reason) -> Self {
        assert_ne!(reason, Reason::None, "a rejection needs a reason");
        Self { accept: false, reason }
    }

    pub fn accept(&self) -> bool {
        self.accept
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }
}

/// Key material a participant obtains from V0's message: the public
/// handles, the honest obligation capability and, in the random-oracle
/// variant, the nonce `x0`.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub puzzle: RepeatedPuzzle,
    pub public: RepeatedPublic,
    pub samplers: Vec<ObligationSampler>,
    pub nonce: Option<Bits>,
    /// The encoded key message.
    pub wire: Vec<u8>,
}

/// Everything the verifiers sample for one trial.
///
/// A serialized public key only names `(n, seed)`; participants turn the
/// key message into usable handles with [`TrialEnv::resolve`].
#[derive(Debug)]
pub struct TrialEnv {
    puzzle: RepeatedPuzzle,
    trapdoor: RepeatedTrapdoor,
    key: KeyMaterial,
    challenge_payload: Vec<u8>,
    challenge: Option<Challenge>,
    nonces: Option<(Bits, Bits)>,
    oracle: Option<RandomOracle>,
}

impl TrialEnv {
    /// Verifier randomness for a trial. Depends only on the configuration
    /// and `trial_seed`, never on who the verifiers are talking to.
    pub fn sample(config: &PRPVConfig, variant: Variant, trial_seed: u64) -> Result<Self, ProtocolError> {
        let puzzle = config.validate_parameters(variant)?;
        let mut rng = derived_rng(trial_seed, &[stream::VERIFIER]);
        let trapdoor = puzzle.keygen(&mut rng)?;
        let public = trapdoor.public();
        let (challenge, nonces, oracle) = match variant {
            Variant::Plain => (Some(puzzle.sample_challenge(&mut rng)), None, None),
            Variant::RandomOracle => {
                let x0 = Bits::random(config.lambda, &mut rng);
                let x1 = Bits::random(config.lambda, &mut rng);
                let oracle = RandomOracle::new(
                    config.lambda,
                    puzzle.challenge_width(),
                    derive_seed(trial_seed, &[stream::ORACLE]),
                );
                (None, Some((x0, x1)), Some(oracle))
            }
        };
        let key_payload = Payload::key(&public, nonces.map(|(x0, _)| x0)).encode();
        let challenge_payload = match (&challenge, &nonces) {
            (Some(c), _) => Payload::Challenge(*c),
            (None, Some((_, x1))) => Payload::Nonce(*x1),
            (None, None) => unreachable!("one of the two is always set"),
        }
        .encode();
        let key = KeyMaterial {
            puzzle,
            public,
            samplers: trapdoor.samplers(),
            nonce: nonces.map(|(x0, _)| x0),
            wire: key_payload,
        };
        Ok(Self {
            puzzle,
            trapdoor,
            key,
            challenge_payload,
            challenge,
            nonces,
            oracle,
        })
    }

    pub fn puzzle(&self) -> &RepeatedPuzzle {
        &self.puzzle
    }

    pub fn trapdoor(&self) -> &RepeatedTrapdoor {
        &self.trapdoor
    }

    pub fn oracle(&self) -> Option<&RandomOracle> {
        self.oracle.as_ref()
    }

    pub fn key_payload(&self) -> &[u8] {
        &self.key.wire
    }

    pub fn challenge_payload(&self) -> &[u8] {
        &self.challenge_payload
    }

    /// The key material named by a key message, if it is this trial's key.
    pub fn resolve(&self, key_payload: &[u8]) -> Option<KeyMaterial> {
        (key_payload == self.key.wire.as_slice()).then(|| self.key.clone())
    }

    /// The challenge a participant holding `key` derives from V1's message.
    pub fn challenge_for(&self, key: &KeyMaterial, payload: &[u8]) -> Result<Challenge, ProtocolError> {
        match Payload::decode(payload)? {
            Payload::Challenge(c) if c.width() == key.puzzle.challenge_width() => Ok(c),
            Payload::Challenge(_) => Err(ProtocolError::Malformed("challenge width")),
            Payload::Nonce(x1) => {
                let x0 = key.nonce.ok_or(ProtocolError::Malformed("nonce without x0"))?;
                let oracle = self.oracle.as_ref().ok_or(ProtocolError::Malformed("no oracle in this variant"))?;
                Ok(Challenge::new(oracle.query(&x0.xor(&x1))?))
            }
            _ => Err(ProtocolError::Malformed("not a challenge message")),
        }
    }

    /// The challenge the verifiers check against.
    pub fn verifier_challenge(&self) -> Result<Challenge, ProtocolError> {
        match (&self.challenge, &self.nonces, &self.oracle) {
            (Some(c), _, _) => Ok(*c),
            (None, Some((x0, x1)), Some(oracle)) => Ok(Challenge::new(oracle.query(&x0.xor(x1))?)),
            _ => unreachable!("plain trials carry a challenge, oracle trials carry nonces"),
        }
    }
}

/// First error raised inside a party handler; handlers cannot return errors
/// through the simulator, so they park them here.
#[derive(Debug, Clone, Default)]
pub(crate) struct ErrorSlot(Rc<RefCell<Option<ProtocolError>>>);

impl ErrorSlot {
    pub(crate) fn record(&self, e: ProtocolError) {
        self.0.borrow_mut().get_or_insert(e);
    }

    pub(crate) fn check(&self) -> Result<(), ProtocolError> {
        match self.0.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// A verifier: broadcasts one fixed message when its alarm fires.
struct Announcer(Vec<u8>);

impl PartyBehavior for Announcer {
    fn on_receive(&mut self, _: Coordinate, _: &SpacetimeMessage) -> Vec<Action> {
        Vec::new()
    }

    fn on_alarm(&mut self, _: Coordinate, _: u64) -> Vec<Action> {
        vec![Action::broadcast(self.0.clone())]
    }
}

/// Who talks to the verifiers.
#[derive(Clone, Copy)]
pub enum Participants<'p> {
    Prover(&'p dyn ProverFactory),
    Adversaries(&'p dyn CanonicalAdversary),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrival {
    pub time: Coordinate,
    pub payload: Vec<u8>,
}

/// First arrival of each checked message.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub y0: Option<Arrival>,
    pub y1: Option<Arrival>,
    pub ans0: Option<Arrival>,
    pub ans1: Option<Arrival>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub verdict: Verdict,
    pub transcript: Transcript,
    pub trace: Trace,
    pub challenge: Challenge,
    pub v0: PartyId,
    pub v1: PartyId,
    /// EPR qubits used up by teleportation during the trial.
    pub epr_consumed: usize,
}

fn arrivals(trace: &Trace, party: PartyId, tag: u8) -> Vec<Arrival> {
    trace
        .deliveries_to(party)
        .filter(|e| e.payload.first() == Some(&tag))
        .map(|e| Arrival {
            time: e.time,
            payload: e.payload.clone(),
        })
        .collect()
}

/// The verifiers' decision from what they received.
///
/// Each verifier uses the first message of each kind it receives; any
/// later message of the same kind with different bytes is a mismatch.
pub fn decide(env: &TrialEnv, trace: &Trace, v0: PartyId, v1: PartyId) -> Result<(Verdict, Transcript), ProtocolError> {
    let y0 = arrivals(trace, v0, TAG_OBLIGATION);
    let y1 = arrivals(trace, v1, TAG_OBLIGATION);
    let a0 = arrivals(trace, v0, TAG_ANSWERS);
    let a1 = arrivals(trace, v1, TAG_ANSWERS);
    let transcript = Transcript {
        y0: y0.first().cloned(),
        y1: y1.first().cloned(),
        ans0: a0.first().cloned(),
        ans1: a1.first().cloned(),
    };
    let checks = [
        (&transcript.y0, Reason::TimingY0, (|t| t < Coordinate::integer(4)) as fn(Coordinate) -> bool),
        (&transcript.y1, Reason::TimingY1, |t| t == Coordinate::integer(3)),
        (&transcript.ans0, Reason::TimingAns0, |t| t == Coordinate::integer(4)),
        (&transcript.ans1, Reason::TimingAns1, |t| t <= Coordinate::integer(5)),
    ];
    let late = checks
        .into_iter()
        .find(|(arrival, _, ok)| !arrival.as_ref().is_some_and(|a| ok(a.time)))
        .map(|(_, reason, _)| reason);
    if let Some(reason) = late {
        return Ok((Verdict::rejected(reason), transcript));
    }
    let consistent = |list: &[Arrival]| list.iter().all(|a| a.payload == list[0].payload);
    let first = |a: &Option<Arrival>| a.as_ref().expect("timing checks passed").payload.clone();
    if !consistent(&y0)
        || !consistent(&y1)
        || !consistent(&a0)
        || !consistent(&a1)
        || first(&transcript.y0) != first(&transcript.y1)
        || first(&transcript.ans0) != first(&transcript.ans1)
    {
        return Ok((Verdict::rejected(Reason::Mismatch), transcript));
    }
    let obligation = match Payload::decode(&first(&transcript.y0)) {
        Ok(Payload::Obligation(o)) => o,
        _ => return Ok((Verdict::rejected(Reason::VerFail), transcript)),
    };
    let answers = match Payload::decode(&first(&transcript.ans0)) {
        Ok(Payload::Answers(a)) => a,
        _ => return Ok((Verdict::rejected(Reason::VerFail), transcript)),
    };
    let challenge = env.verifier_challenge()?;
    let verdict = if env.puzzle.verify(&env.trapdoor, &obligation, &challenge, &answers) {
        Verdict::accepted()
    } else {
        Verdict::rejected(Reason::VerFail)
    };
    Ok((verdict, transcript))
}

/// Seed handed to whichever participant runs in a trial.
pub fn participant_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, &[stream::PROVER])
}

/// One trial without the prover-position check. Used directly only to show
/// what happens to a prover outside `[1, 2)`.
pub fn simulate_trial(
    config: &PRPVConfig,
    variant: Variant,
    participants: Participants<'_>,
    trial_seed: u64,
) -> Result<TrialOutcome, ProtocolError> {
    let env = TrialEnv::sample(config, variant, trial_seed)?;
    let seed = participant_seed(trial_seed);
    let errors = ErrorSlot::default();
    let mut sim = Simulation::new();
    let v0 = sim.add_party(Coordinate::integer(V0_POSITION), Announcer(env.key_payload().to_vec()))?;
    let v1 = sim.add_party(Coordinate::integer(V1_POSITION), Announcer(env.challenge_payload().to_vec()))?;
    sim.schedule_alarm(v0, Coordinate::integer(0), 0)?;
    sim.schedule_alarm(v1, Coordinate::integer(1), 0)?;
    let installed = match participants {
        Participants::Prover(factory) => {
            let behavior = prover::ProverBehavior::new(factory.session(seed), &env, errors.clone());
            sim.add_party(config.prover_position, behavior)?;
            None
        }
        Participants::Adversaries(adv) => Some(adversary::install(&mut sim, adv, &env, seed, v0, v1, errors.clone())?),
    };
    let trace = sim.run(Coordinate::integer(HORIZON))?;
    drop(sim);
    errors.check()?;
    let epr_consumed = match (installed, participants) {
        (Some(memory), Participants::Adversaries(adv)) => {
            let used = memory.borrow().epr_consumed();
            adv.budget().check(used)?;
            used
        }
        _ => 0,
    };
    let (verdict, transcript) = decide(&env, &trace, v0, v1)?;
    Ok(TrialOutcome {
        verdict,
        transcript,
        trace,
        challenge: env.verifier_challenge()?,
        v0,
        v1,
        epr_consumed,
    })
}

/// One trial of the plain protocol, seeded by `config.seed`. With `k > 1`
/// this is the `k`-fold composition.
pub fn run_prpv(config: &PRPVConfig, participants: Participants<'_>) -> Result<TrialOutcome, ProtocolError> {
    config.validate(Variant::Plain)?;
    simulate_trial(config, Variant::Plain, participants, config.seed)
}

/// [`run_prpv`] with a fresh challenge bit per instance.
pub fn run_prpv_parallel(config: &PRPVConfig, participants: Participants<'_>) -> Result<TrialOutcome, ProtocolError> {
    run_prpv(&config.clone().with_repetition(Repetition::Parallel), participants)
}

pub fn run_roprpv(config: &PRPVConfig, participants: Participants<'_>) -> Result<TrialOutcome, ProtocolError> {
    config.validate(Variant::RandomOracle)?;
    simulate_trial(config, Variant::RandomOracle, participants, config.seed)
}

/// Acceptance rate over `trials` trials seeded from `config.seed`.
pub fn estimate_acceptance(
    config: &PRPVConfig,
    variant: Variant,
    participants: Participants<'_>,
    trials: u64,
) -> Result<Estimate, ProtocolError> {
    config.validate(variant)?;
    run_trials(trials, config.seed, |_, seed| {
        simulate_trial(config, variant, participants, seed).map(|o| o.verdict.accept())
    })
}

/// Random answers of the right shape for a challenge; used by stand-ins
/// and attacks that guess.
pub(crate) fn guessed_answers<R: Rng + ?Sized>(
    puzzle: &RepeatedPuzzle,
    challenge: &Challenge,
    rng: &mut R,
) -> AnswerVector {
    AnswerVector {
        answers: (0..puzzle.k())
            .map(|i| crate::puzzle::random_answer(puzzle.n(), puzzle.instance_bit(challenge, i), rng))
            .collect(),
    }
}

pub(crate) fn obligation_message(o: &Obligation) -> Vec<u8> {
    Payload::Obligation(o.clone()).encode()
}

pub(crate) fn answers_message(a: &AnswerVector) -> Vec<u8> {
    Payload::Answers(a.clone()).encode()
}

#[cfg(test)]
mod tests;
