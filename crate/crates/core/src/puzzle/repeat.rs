use rand::Rng;

use super::{keygen, obligate, solve, verify, Answer, AnswerVector, Challenge, Obligation, ObligationSampler};
use super::{PublicHandle, PuzzleError, Trapdoor};
use crate::bits::Bits;
use crate::qsim::StateVector;

/// How the `k` instances share the challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repetition {
    /// One challenge bit reused by every instance.
    Strong,
    /// A fresh bit per instance; the challenge is a `k`-bit string.
    Parallel,
}

/// `k` independent base instances run side by side; verification is the AND
/// of the per-instance verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatedPuzzle {
    n: usize,
    k: usize,
    repetition: Repetition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedPublic {
    pub keys: Vec<PublicHandle>,
}

impl RepeatedPublic {
    /// `u32` LE instance count, then each key id.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.keys.len() as u32).to_le_bytes().to_vec();
        for k in &self.keys {
            out.extend_from_slice(&k.key_id());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedTrapdoor {
    pub keys: Vec<Trapdoor>,
}

impl RepeatedTrapdoor {
    pub fn public(&self) -> RepeatedPublic {
        RepeatedPublic {
            keys: self.keys.iter().map(Trapdoor::public).collect(),
        }
    }

    pub fn samplers(&self) -> Vec<ObligationSampler> {
        self.keys.iter().cloned().map(ObligationSampler::new).collect()
    }
}

impl RepeatedPuzzle {
    pub fn new(n: usize, k: usize, repetition: Repetition) -> Result<Self, PuzzleError> {
        if !(super::family::MIN_N..=super::family::MAX_N).contains(&n) {
            return Err(PuzzleError::InvalidN(n));
        }
        if k == 0 {
            return Err(PuzzleError::InvalidK(k));
        }
        Ok(Self { n, k, repetition })
    }

    pub fn base(n: usize) -> Result<Self, PuzzleError> {
        Self::new(n, 1, Repetition::Parallel)
    }

    pub fn strong(n: usize, k: usize) -> Result<Self, PuzzleError> {
        Self::new(n, k, Repetition::Strong)
    }

    pub fn parallel(n: usize, k: usize) -> Result<Self, PuzzleError> {
        Self::new(n, k, Repetition::Parallel)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn repetition(&self) -> Repetition {
        self.repetition
    }

    pub fn challenge_width(&self) -> usize {
        match self.repetition {
            Repetition::Strong => 1,
            Repetition::Parallel => self.k,
        }
    }

    pub fn keygen<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RepeatedTrapdoor, PuzzleError> {
        let keys = (0..self.k)
            .map(|_| keygen(self.n, rng).map(|(_, td)| td))
            .collect::<Result<_, _>>()?;
        Ok(RepeatedTrapdoor { keys })
    }

    pub fn sample_challenge<R: Rng + ?Sized>(&self, rng: &mut R) -> Challenge {
        Challenge::new(Bits::random(self.challenge_width(), rng))
    }

    fn check_challenge(&self, challenge: &Challenge) -> Result<(), PuzzleError> {
        if challenge.width() != self.challenge_width() {
            return Err(PuzzleError::ChallengeWidth {
                expected: self.challenge_width(),
                found: challenge.width(),
            });
        }
        Ok(())
    }

    /// The challenge bit seen by instance `i`.
    pub fn instance_bit(&self, challenge: &Challenge, i: usize) -> bool {
        match self.repetition {
            Repetition::Strong => challenge.bits.get(0),
            Repetition::Parallel => challenge.bits.get(i),
        }
    }

    pub fn obligate<R: Rng + ?Sized>(
        &self,
        trapdoor: &RepeatedTrapdoor,
        rng: &mut R,
    ) -> (Obligation, Vec<StateVector>) {
        let (ys, states) = trapdoor.keys.iter().map(|td| obligate(td, rng)).unzip();
        (Obligation { ys }, states)
    }

    pub fn solve<R: Rng + ?Sized>(
        &self,
        public: &RepeatedPublic,
        states: Vec<StateVector>,
        challenge: &Challenge,
        rng: &mut R,
    ) -> Result<AnswerVector, PuzzleError> {
        self.check_challenge(challenge)?;
        if states.len() != self.k || public.keys.len() != self.k {
            return Err(PuzzleError::InstanceCount {
                expected: self.k,
                found: states.len(),
            });
        }
        let answers = public
            .keys
            .iter()
            .zip(states)
            .enumerate()
            .map(|(i, (pk, st))| solve(pk, st, self.instance_bit(challenge, i), rng))
            .collect::<Result<_, _>>()?;
        Ok(AnswerVector { answers })
    }

    /// AND of the per-instance verdicts. Any shape problem (wrong instance
    /// count, wrong answer tag, wrong challenge width) rejects.
    pub fn verify(
        &self,
        trapdoor: &RepeatedTrapdoor,
        obligation: &Obligation,
        challenge: &Challenge,
        answers: &AnswerVector,
    ) -> bool {
        if self.check_challenge(challenge).is_err()
            || obligation.ys.len() != self.k
            || answers.answers.len() != self.k
            || trapdoor.keys.len() != self.k
        {
            return false;
        }
        trapdoor
            .keys
            .iter()
            .zip(&obligation.ys)
            .zip(&answers.answers)
            .enumerate()
            .all(|(i, ((td, y), ans))| {
                verify(td, y, self.instance_bit(challenge, i), ans).unwrap_or(false)
            })
    }

    /// Answers for a chosen challenge computed from the trapdoor; used to
    /// check verification and by test solvers.
    pub fn trapdoor_answers<R: Rng + ?Sized>(
        &self,
        trapdoor: &RepeatedTrapdoor,
        obligation: &Obligation,
        challenge: &Challenge,
        rng: &mut R,
    ) -> Result<AnswerVector, PuzzleError> {
        let answers = trapdoor
            .keys
            .iter()
            .zip(&obligation.ys)
            .enumerate()
            .map(|(i, (td, y))| trapdoor_answer(td, y, self.instance_bit(challenge, i), rng))
            .collect::<Result<_, _>>()?;
        Ok(AnswerVector { answers })
    }
}

/// A valid answer produced with full key access.
pub(crate) fn trapdoor_answer<R: Rng + ?Sized>(
    trapdoor: &Trapdoor,
    y: &Bits,
    b: bool,
    rng: &mut R,
) -> Result<Answer, PuzzleError> {
    if b {
        let d = Bits::random_nonzero(trapdoor.n(), rng);
        let shift = trapdoor.inv(false, y)?.xor(&trapdoor.inv(true, y)?);
        Ok(Answer::Equation { c: d.dot(&shift), d })
    } else {
        let bit = rng.gen::<bool>();
        Ok(Answer::Preimage {
            bit,
            value: trapdoor.inv(bit, y)?,
        })
    }
}
