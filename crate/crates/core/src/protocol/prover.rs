//! Provers: the honest quantum prover and classical stand-ins.

use rand::Rng;

use super::{answers_message, guessed_answers, obligation_message, ErrorSlot, KeyMaterial, ProtocolError, TrialEnv};
use crate::bits::Bits;
use crate::puzzle::{Answer, AnswerVector, Challenge, Obligation};
use crate::qsim::StateVector;
use crate::rng::{derive_seed, derived_rng, rng_from_seed, stream, TrialRng};
use crate::spacetime::{Action, Coordinate, PartyBehavior, SpacetimeMessage};

/// One prover run: commit to an obligation, then answer one challenge.
pub trait InteractiveProver {
    fn commit(&mut self, key: &KeyMaterial) -> Result<Obligation, ProtocolError>;
    fn respond(&mut self, challenge: &Challenge) -> Result<AnswerVector, ProtocolError>;
}

/// Builds a fresh prover for each trial from the trial's participant seed.
pub trait ProverFactory: Send + Sync {
    fn name(&self) -> &str;
    fn session(&self, seed: u64) -> Box<dyn InteractiveProver + '_>;
}

/// Obligates every instance honestly, keeps the states, and answers with
/// the XZ-solver.
#[derive(Debug, Default, Clone, Copy)]
pub struct HonestProver;

pub fn honest_prover() -> HonestProver {
    HonestProver
}

struct HonestSession {
    rng: TrialRng,
    key: Option<KeyMaterial>,
    states: Vec<StateVector>,
}

impl ProverFactory for HonestProver {
    fn name(&self) -> &str {
        "honest"
    }

    fn session(&self, seed: u64) -> Box<dyn InteractiveProver + '_> {
        Box::new(HonestSession {
            rng: rng_from_seed(seed),
            key: None,
            states: Vec::new(),
        })
    }
}

impl InteractiveProver for HonestSession {
    fn commit(&mut self, key: &KeyMaterial) -> Result<Obligation, ProtocolError> {
        let (ys, states) = key.samplers.iter().map(|s| s.obligate(&mut self.rng)).unzip();
        self.states = states;
        self.key = Some(key.clone());
        Ok(Obligation { ys })
    }

    fn respond(&mut self, challenge: &Challenge) -> Result<AnswerVector, ProtocolError> {
        let key = self.key.as_ref().ok_or(ProtocolError::Malformed("challenge before key"))?;
        let states = std::mem::take(&mut self.states);
        Ok(key.puzzle.solve(&key.public, states, challenge, &mut self.rng)?)
    }
}

/// A classical prover: both replies are pure functions of the messages seen
/// so far and a random tape.
pub trait ClassicalProver: Send + Sync {
    fn name(&self) -> &str;
    fn commit(&self, key: &KeyMaterial, tape: u64) -> Result<Obligation, ProtocolError>;
    fn respond(&self, key: &KeyMaterial, challenge: &Challenge, tape: u64) -> Result<AnswerVector, ProtocolError>;
}

/// The tape a classical prover draws from a participant seed. The
/// classical forwarding attack shares the same tape between its two halves.
pub fn classical_tape(participant_seed: u64) -> u64 {
    derive_seed(participant_seed, &[stream::TAPE])
}

/// Runs a [`ClassicalProver`] as an ordinary prover.
#[derive(Debug, Default, Clone, Copy)]
pub struct ClassicalStandIn<P>(pub P);

struct ClassicalSession<'p> {
    prover: &'p dyn ClassicalProver,
    tape: u64,
    key: Option<KeyMaterial>,
}

impl<P: ClassicalProver> ProverFactory for ClassicalStandIn<P> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn session(&self, seed: u64) -> Box<dyn InteractiveProver + '_> {
        Box::new(ClassicalSession {
            prover: &self.0,
            tape: classical_tape(seed),
            key: None,
        })
    }
}

impl InteractiveProver for ClassicalSession<'_> {
    fn commit(&mut self, key: &KeyMaterial) -> Result<Obligation, ProtocolError> {
        self.key = Some(key.clone());
        self.prover.commit(key, self.tape)
    }

    fn respond(&mut self, challenge: &Challenge) -> Result<AnswerVector, ProtocolError> {
        let key = self.key.as_ref().ok_or(ProtocolError::Malformed("challenge before key"))?;
        self.prover.respond(key, challenge, self.tape)
    }
}

const COMMIT_DRAW: u64 = 0;
const RESPOND_DRAW: u64 = 1;

/// Commits to `0^n` in every instance and answers at random.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroObligationGuesser;

impl ClassicalProver for ZeroObligationGuesser {
    fn name(&self) -> &str {
        "zero_obligation"
    }

    fn commit(&self, key: &KeyMaterial, _: u64) -> Result<Obligation, ProtocolError> {
        Ok(Obligation {
            ys: vec![Bits::zeros(key.puzzle.n()); key.puzzle.k()],
        })
    }

    fn respond(&self, key: &KeyMaterial, challenge: &Challenge, tape: u64) -> Result<AnswerVector, ProtocolError> {
        Ok(guessed_answers(&key.puzzle, challenge, &mut derived_rng(tape, &[RESPOND_DRAW])))
    }
}

/// Evaluates branch 0 on a random input from the tape and commits to the
/// image. Answers challenge 0 with that input and guesses equations.
#[derive(Debug, Default, Clone, Copy)]
pub struct PreimageThenGuess;

impl PreimageThenGuess {
    fn inputs(key: &KeyMaterial, tape: u64) -> Vec<Bits> {
        let mut rng = derived_rng(tape, &[COMMIT_DRAW]);
        (0..key.puzzle.k()).map(|_| Bits::random(key.puzzle.n(), &mut rng)).collect()
    }
}

impl ClassicalProver for PreimageThenGuess {
    fn name(&self) -> &str {
        "preimage_then_guess"
    }

    fn commit(&self, key: &KeyMaterial, tape: u64) -> Result<Obligation, ProtocolError> {
        let ys = Self::inputs(key, tape)
            .iter()
            .zip(&key.public.keys)
            .map(|(x, pk)| pk.eval(false, x))
            .collect::<Result<_, _>>()?;
        Ok(Obligation { ys })
    }

    fn respond(&self, key: &KeyMaterial, challenge: &Challenge, tape: u64) -> Result<AnswerVector, ProtocolError> {
        let mut rng = derived_rng(tape, &[RESPOND_DRAW]);
        let answers = Self::inputs(key, tape)
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                if key.puzzle.instance_bit(challenge, i) {
                    Answer::Equation {
                        c: rng.gen(),
                        d: Bits::random_nonzero(key.puzzle.n(), &mut rng),
                    }
                } else {
                    Answer::Preimage { bit: false, value: x }
                }
            })
            .collect();
        Ok(AnswerVector { answers })
    }
}

/// Places a prover in spacetime: replies to the key and the challenge the
/// instant each arrives, by broadcast.
pub(crate) struct ProverBehavior<'a> {
    session: Box<dyn InteractiveProver + 'a>,
    env: &'a TrialEnv,
    key: Option<KeyMaterial>,
    answered: bool,
    errors: ErrorSlot,
}

impl<'a> ProverBehavior<'a> {
    pub(crate) fn new(session: Box<dyn InteractiveProver + 'a>, env: &'a TrialEnv, errors: ErrorSlot) -> Self {
        Self {
            session,
            env,
            key: None,
            answered: false,
            errors,
        }
    }

    fn handle(&mut self, message: &SpacetimeMessage) -> Result<Vec<Action>, ProtocolError> {
        match message.payload.first().copied() {
            Some(super::TAG_KEY) if self.key.is_none() => {
                let Some(key) = self.env.resolve(&message.payload) else {
                    return Ok(Vec::new());
                };
                let y = self.session.commit(&key)?;
                self.key = Some(key);
                Ok(vec![Action::broadcast(obligation_message(&y))])
            }
            Some(super::TAG_CHALLENGE | super::TAG_NONCE) if !self.answered => {
                let Some(key) = &self.key else {
                    return Ok(Vec::new());
                };
                let challenge = self.env.challenge_for(key, &message.payload)?;
                let answers = self.session.respond(&challenge)?;
                self.answered = true;
                Ok(vec![Action::broadcast(answers_message(&answers))])
            }
            _ => Ok(Vec::new()),
        }
    }
}

impl PartyBehavior for ProverBehavior<'_> {
    fn on_receive(&mut self, _: Coordinate, message: &SpacetimeMessage) -> Vec<Action> {
        self.handle(message).unwrap_or_else(|e| {
            self.errors.record(e);
            Vec::new()
        })
    }
}

