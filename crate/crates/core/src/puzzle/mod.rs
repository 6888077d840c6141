//! 1-of-2 puzzles.
//!
//! A puzzle has four algorithms: key generation, `obligate` (commit to an
//! image `y` and keep a quantum state), `solve` (answer one challenge bit from
//! that state) and `verify`. The base instantiation here is the claw-free
//! family in [`family`]; [`RepeatedPuzzle`] composes `k` instances either with
//! one shared challenge bit or with a fresh bit per instance.

mod answer;
pub mod family;
mod repeat;

pub use answer::{Answer, AnswerVector, Challenge, Obligation};
pub use family::{keygen, PublicHandle, PuzzleKey, Trapdoor};
pub use repeat::{RepeatedPublic, RepeatedPuzzle, RepeatedTrapdoor, Repetition};

use rand::Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::qsim::{self, Basis, QsimError, StateVector, BIT_REGISTER, PREIMAGE_REGISTER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PuzzleError {
    #[error("preimage length n={0} outside [2, 12]")]
    InvalidN(usize),
    #[error("repetition count k={0} must be at least 1")]
    InvalidK(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("solve needs registers (\"bit\", 1), (\"preimage\", n)")]
    WrongStateShape,
    #[error("answer shape does not match challenge bit")]
    TagMismatch,
    #[error("secret shift must be nonzero")]
    ZeroShift,
    #[error("challenge has width {found}, puzzle expects {expected}")]
    ChallengeWidth { expected: usize, found: usize },
    #[error("instance count mismatch: expected {expected}, found {found}")]
    InstanceCount { expected: usize, found: usize },
    #[error("malformed encoding")]
    Malformed,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Environment-side capability that prepares honest obligations.
///
/// Holds the trapdoor so it can write the post-measurement claw state down
/// directly, but only hands out `(y, state)` pairs. The joint distribution is
/// the same as running the sampling circuit and measuring the image register;
/// [`obligate_circuit_branches`] checks that.
#[derive(Debug, Clone)]
pub struct ObligationSampler {
    trapdoor: Trapdoor,
}

impl ObligationSampler {
    pub fn new(trapdoor: Trapdoor) -> Self {
        Self { trapdoor }
    }

    pub fn public(&self) -> PublicHandle {
        self.trapdoor.public()
    }

    pub fn obligate<R: Rng + ?Sized>(&self, rng: &mut R) -> (Bits, StateVector) {
        obligate(&self.trapdoor, rng)
    }
}

/// `x0` uniform, `y = f_{k,0}(x0)`, state `(|0,x0⟩ + |1,x0⊕s⟩)/√2`.
pub fn obligate<R: Rng + ?Sized>(trapdoor: &Trapdoor, rng: &mut R) -> (Bits, StateVector) {
    let pk = trapdoor.public();
    let x0 = Bits::random(pk.n(), rng);
    let y = pk.eval(false, &x0).expect("x0 has length n");
    let x1 = trapdoor.inv(true, &y).expect("y has length n");
    let state = qsim::prepare_claw_state(&x0, &x1).expect("n + 1 qubits fit");
    (y, state)
}

/// Exact branches of the explicit sampling circuit: uniform superposition
/// over `(b, x)`, image register `f_{k,b}(x)` written by a classical oracle,
/// image measured. Returns `(y, Pr[y], residual state)` for every `y` with
/// nonzero weight.
pub fn obligate_circuit_branches(pk: &PublicHandle) -> Result<Vec<(Bits, f64, StateVector)>, PuzzleError> {
    let n = pk.n();
    let mut state = StateVector::new(&[(BIT_REGISTER, 1), (PREIMAGE_REGISTER, n), ("image", n)])?;
    state.apply_hadamard(BIT_REGISTER)?;
    state.apply_hadamard(PREIMAGE_REGISTER)?;
    state.apply_classical_oracle(&[BIT_REGISTER, PREIMAGE_REGISTER], "image", |input| {
        let b = input.get(0);
        let x = input.slice(1, n);
        pk.eval(b, &x).expect("oracle input has length n")
    })?;
    let dist = state.measurement_distribution("image")?;
    let mut branches = Vec::with_capacity(dist.len());
    for y in dist.keys() {
        let (p, residual) = state.project("image", y)?;
        branches.push((*y, p, residual.expect("support outcome")));
    }
    Ok(branches)
}

/// One sampled run of the explicit circuit.
pub fn run_obligate_circuit<R: Rng + ?Sized>(
    pk: &PublicHandle,
    rng: &mut R,
) -> Result<(Bits, StateVector), PuzzleError> {
    let branches = obligate_circuit_branches(pk)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (y, p, s) in branches {
        acc += p;
        if u < acc {
            return Ok((y, s));
        }
        last = Some((y, s));
    }
    Ok(last.expect("at least one branch"))
}

/// XZ-solver: standard-basis measurement for challenge 0, Hadamard-basis for
/// challenge 1.
pub fn solve<R: Rng + ?Sized>(
    pk: &PublicHandle,
    state: StateVector,
    b: bool,
    rng: &mut R,
) -> Result<Answer, PuzzleError> {
    let shape_ok = state.registers()
        == vec![(BIT_REGISTER.to_string(), 1), (PREIMAGE_REGISTER.to_string(), pk.n())];
    if !shape_ok {
        return Err(PuzzleError::WrongStateShape);
    }
    let basis = Basis::from_bit(b);
    let (bit, rest) = state.measure_in(BIT_REGISTER, basis, rng)?;
    let (value, _) = rest.measure_in(PREIMAGE_REGISTER, basis, rng)?;
    let bit = bit.outcome.get(0);
    Ok(if b {
        Answer::Equation { c: bit, d: value.outcome }
    } else {
        Answer::Preimage { bit, value: value.outcome }
    })
}

/// A uniformly random answer shaped for challenge `b`: a random preimage
/// claim, or a random bit with a random nonzero `d`.
pub fn random_answer<R: Rng + ?Sized>(n: usize, b: bool, rng: &mut R) -> Answer {
    if b {
        Answer::Equation {
            c: rng.gen(),
            d: Bits::random_nonzero(n, rng),
        }
    } else {
        Answer::Preimage {
            bit: rng.gen(),
            value: Bits::random(n, rng),
        }
    }
}

/// Trapdoor verification. Wrongly sized strings are rejected, a wrongly
/// shaped answer is an error.
pub fn verify(trapdoor: &Trapdoor, y: &Bits, b: bool, ans: &Answer) -> Result<bool, PuzzleError> {
    if ans.challenge_bit() != b {
        return Err(PuzzleError::TagMismatch);
    }
    let n = trapdoor.n();
    if y.len() != n {
        return Ok(false);
    }
    match ans {
        Answer::Preimage { bit, value } => {
            if value.len() != n {
                return Ok(false);
            }
            Ok(trapdoor.public().chk(*bit, value, y)?)
        }
        Answer::Equation { c, d } => {
            if d.len() != n || d.is_zero() {
                return Ok(false);
            }
            let x0 = trapdoor.inv(false, y)?;
            let x1 = trapdoor.inv(true, y)?;
            Ok(d.dot(&x0.xor(&x1)) == *c)
        }
    }
}

/// Challenge-0 verification from the public handle alone.
pub fn verify_public_0(pk: &PublicHandle, y: &Bits, ans: &Answer) -> Result<bool, PuzzleError> {
    match ans {
        Answer::Preimage { bit, value } => {
            if value.len() != pk.n() || y.len() != pk.n() {
                return Ok(false);
            }
            pk.chk(*bit, value, y)
        }
        Answer::Equation { .. } => Err(PuzzleError::TagMismatch),
    }
}

#[cfg(test)]
mod tests;
