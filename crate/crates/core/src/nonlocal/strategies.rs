//! Built-in game strategies.

use super::{NonlocalError, NonlocalStrategy, Preparation, PuzzleAccess, PLAYER_B};
use crate::bits::Bits;
use crate::puzzle::{random_answer, Answer, PublicHandle, PuzzleError};
use crate::qsim::{Basis, QuantumMemory, ScopedView, BIT_REGISTER, PREIMAGE_REGISTER};
use crate::rng::TrialRng;

pub const STRATEGY_NAMES: [&str; 4] = ["honest_to_B", "measure_and_guess", "brute_force", "always_fail"];

pub fn strategy_by_name(name: &str) -> Option<Box<dyn NonlocalStrategy>> {
    match name {
        "honest_to_B" => Some(Box::new(HonestToB)),
        "measure_and_guess" => Some(Box::new(MeasureAndGuess)),
        "brute_force" => Some(Box::new(BruteForce)),
        "always_fail" => Some(Box::new(AlwaysFail)),
        _ => None,
    }
}

fn xz_measure(view: &ScopedView, b: bool, rng: &mut TrialRng) -> Result<Answer, NonlocalError> {
    let basis = Basis::from_bit(b);
    let bit = view.measure(BIT_REGISTER, basis, rng)?.outcome.get(0);
    let value = view.measure(PREIMAGE_REGISTER, basis, rng)?.outcome;
    Ok(if b {
        Answer::Equation { c: bit, d: value }
    } else {
        Answer::Preimage { bit, value }
    })
}

fn tape_answer(tape: &[Answer], b: bool) -> Result<Answer, NonlocalError> {
    tape.get(b as usize)
        .copied()
        .ok_or(NonlocalError::Puzzle(PuzzleError::Malformed))
}

/// B keeps the honest claw state and runs the XZ-solver; C answers at random.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestToB;

impl NonlocalStrategy for HonestToB {
    fn name(&self) -> &str {
        "honest_to_B"
    }

    fn prepare(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<Preparation, NonlocalError> {
        let (y, state) = access.sampler.obligate(rng);
        let mut memory = QuantumMemory::new();
        memory.insert_owned(state, PLAYER_B)?;
        Ok(Preparation { y, memory, tape: Vec::new() })
    }

    fn answer_b(&self, view: &ScopedView, _: &PublicHandle, _: &[Answer], b: bool, rng: &mut TrialRng) -> Result<Answer, NonlocalError> {
        xz_measure(view, b, rng)
    }

    fn answer_c(&self, _: &ScopedView, public: &PublicHandle, _: &[Answer], b: bool, rng: &mut TrialRng) -> Result<Answer, NonlocalError> {
        Ok(random_answer(public.n(), b, rng))
    }
}

/// A measures the claw state in the standard basis and guesses one equation;
/// both players replay the shared tape.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeasureAndGuess;

impl NonlocalStrategy for MeasureAndGuess {
    fn name(&self) -> &str {
        "measure_and_guess"
    }

    fn prepare(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<Preparation, NonlocalError> {
        let (y, state) = access.sampler.obligate(rng);
        let (bit, rest) = state.measure(BIT_REGISTER, rng)?;
        let (value, _) = rest.measure(PREIMAGE_REGISTER, rng)?;
        let preimage = Answer::Preimage {
            bit: bit.outcome.get(0),
            value: value.outcome,
        };
        let guess = random_answer(access.public.n(), true, rng);
        Ok(Preparation {
            y,
            memory: QuantumMemory::new(),
            tape: vec![preimage, guess],
        })
    }

    fn answer_b(&self, _: &ScopedView, _: &PublicHandle, tape: &[Answer], b: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        tape_answer(tape, b)
    }

    fn answer_c(&self, _: &ScopedView, _: &PublicHandle, tape: &[Answer], b: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        tape_answer(tape, b)
    }
}

/// Finds a claw by evaluating every branch-1 input, which is feasible only
/// because `n` is tiny. Knowing the claw answers both challenges.
#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForce;

impl NonlocalStrategy for BruteForce {
    fn name(&self) -> &str {
        "brute_force"
    }

    fn prepare(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<Preparation, NonlocalError> {
        let pk = &access.public;
        let n = pk.n();
        let x0 = Bits::random(n, rng);
        let y = pk.eval(false, &x0)?;
        let mut x1 = None;
        for x in Bits::all(n) {
            if pk.eval(true, &x)? == y {
                x1 = Some(x);
                break;
            }
        }
        let x1 = x1.expect("branch 1 is a bijection");
        let d = Bits::random_nonzero(n, rng);
        let c = d.dot(&x0.xor(&x1));
        Ok(Preparation {
            y,
            memory: QuantumMemory::new(),
            tape: vec![Answer::Preimage { bit: false, value: x0 }, Answer::Equation { c, d }],
        })
    }

    fn answer_b(&self, _: &ScopedView, _: &PublicHandle, tape: &[Answer], b: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        tape_answer(tape, b)
    }

    fn answer_c(&self, _: &ScopedView, _: &PublicHandle, tape: &[Answer], b: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        tape_answer(tape, b)
    }
}

/// Answers `Equation(0, 0^n)` to everything, which never verifies.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysFail;

impl NonlocalStrategy for AlwaysFail {
    fn name(&self) -> &str {
        "always_fail"
    }

    fn prepare(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<Preparation, NonlocalError> {
        let (y, _) = access.sampler.obligate(rng);
        Ok(Preparation { y, ..Default::default() })
    }

    fn answer_b(&self, _: &ScopedView, public: &PublicHandle, _: &[Answer], _: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        Ok(Answer::Equation { c: false, d: Bits::zeros(public.n()) })
    }

    fn answer_c(&self, _: &ScopedView, public: &PublicHandle, _: &[Answer], _: bool, _: &mut TrialRng) -> Result<Answer, NonlocalError> {
        Ok(Answer::Equation { c: false, d: Bits::zeros(public.n()) })
    }
}
