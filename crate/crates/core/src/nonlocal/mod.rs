//! The non-local solving game.
//!
//! A referee generates a key; stage A of a strategy commits to `y` and splits
//! whatever it prepared between two players B and C, who may also share a
//! classical tape. One challenge bit goes to both; they win iff both answers
//! verify. B and C only ever see a [`ScopedView`] of their own registers, so
//! neither can act on the other's half of the state.
//!
//! [`reduce_to_2of2`] turns a game strategy into a solver that answers both
//! challenges for one `y`, by running B on challenge 0 and C on challenge 1.

mod strategies;

pub use strategies::{strategy_by_name, AlwaysFail, BruteForce, HonestToB, MeasureAndGuess, STRATEGY_NAMES};

use rand::Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::experiment::{run_trials, Estimate, InvalidTrials};
use crate::puzzle::{keygen, verify, Answer, ObligationSampler, PublicHandle, PuzzleError, Trapdoor};
use crate::qsim::{Holder, QsimError, QuantumMemory, ScopedView};
use crate::rng::{rng_from_seed, TrialRng};

pub const PLAYER_B: Holder = "B";
pub const PLAYER_C: Holder = "C";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlocalError {
    #[error("{holder} touched register {register:?} it does not hold")]
    RegisterViolation { register: String, holder: String },
    #[error("trial count must be at least 1")]
    InvalidTrials,
    #[error("register {0:?} is assigned to neither player")]
    UnassignedRegister(String),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Qsim(QsimError),
}

impl From<QsimError> for NonlocalError {
    fn from(e: QsimError) -> Self {
        match e {
            QsimError::RegisterViolation { register, holder } => {
                NonlocalError::RegisterViolation { register, holder }
            }
            other => NonlocalError::Qsim(other),
        }
    }
}

impl From<InvalidTrials> for NonlocalError {
    fn from(_: InvalidTrials) -> Self {
        NonlocalError::InvalidTrials
    }
}

/// What stage A hands to the referee and players.
#[derive(Debug, Default)]
pub struct Preparation {
    pub y: Bits,
    /// Every register must be held by [`PLAYER_B`] or [`PLAYER_C`].
    pub memory: QuantumMemory,
    /// Classical data visible to both players.
    pub tape: Vec<Answer>,
}

/// Public key plus the honest obligation capability.
#[derive(Debug, Clone)]
pub struct PuzzleAccess {
    pub public: PublicHandle,
    pub sampler: ObligationSampler,
}

impl PuzzleAccess {
    pub fn new(trapdoor: &Trapdoor) -> Self {
        Self {
            public: trapdoor.public(),
            sampler: ObligationSampler::new(trapdoor.clone()),
        }
    }
}

pub trait NonlocalStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Stage A.
    fn prepare(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<Preparation, NonlocalError>;

    /// Stage B, restricted to B's registers.
    fn answer_b(
        &self,
        view: &ScopedView,
        public: &PublicHandle,
        tape: &[Answer],
        b: bool,
        rng: &mut TrialRng,
    ) -> Result<Answer, NonlocalError>;

    /// Stage C, restricted to C's registers.
    fn answer_c(
        &self,
        view: &ScopedView,
        public: &PublicHandle,
        tape: &[Answer],
        b: bool,
        rng: &mut TrialRng,
    ) -> Result<Answer, NonlocalError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameResult {
    pub win: bool,
    pub b_verdict: bool,
    pub c_verdict: bool,
    pub challenge: bool,
    pub obligation: Bits,
}

/// Runs stage A and returns the split memory as two views.
fn run_stage_a(
    strategy: &dyn NonlocalStrategy,
    access: &PuzzleAccess,
    rng: &mut TrialRng,
) -> Result<(Bits, ScopedView, ScopedView, Vec<Answer>), NonlocalError> {
    let prep = strategy.prepare(access, rng)?;
    if let Some((name, _)) = prep
        .memory
        .assignments()
        .find(|(_, h)| *h != PLAYER_B && *h != PLAYER_C)
    {
        return Err(NonlocalError::UnassignedRegister(name.to_string()));
    }
    let shared = prep.memory.into_shared();
    let b_view = ScopedView::new(shared.clone(), PLAYER_B);
    let c_view = ScopedView::new(shared, PLAYER_C);
    Ok((prep.y, b_view, c_view, prep.tape))
}

/// One round of the game with a freshly generated key.
pub fn play_nonlocal(
    n: usize,
    strategy: &dyn NonlocalStrategy,
    rng: &mut TrialRng,
) -> Result<GameResult, NonlocalError> {
    let (_, trapdoor) = keygen(n, rng)?;
    play_nonlocal_with_key(&trapdoor, strategy, rng)
}

pub fn play_nonlocal_with_key(
    trapdoor: &Trapdoor,
    strategy: &dyn NonlocalStrategy,
    rng: &mut TrialRng,
) -> Result<GameResult, NonlocalError> {
    let access = PuzzleAccess::new(trapdoor);
    let (y, b_view, c_view, tape) = run_stage_a(strategy, &access, rng)?;
    let challenge = rng.gen::<bool>();
    let ans_b = strategy.answer_b(&b_view, &access.public, &tape, challenge, rng)?;
    let ans_c = strategy.answer_c(&c_view, &access.public, &tape, challenge, rng)?;
    let b_verdict = verify(trapdoor, &y, challenge, &ans_b).unwrap_or(false);
    let c_verdict = verify(trapdoor, &y, challenge, &ans_c).unwrap_or(false);
    Ok(GameResult {
        win: b_verdict && c_verdict,
        b_verdict,
        c_verdict,
        challenge,
        obligation: y,
    })
}

/// Win rate over `trials` seeded rounds with a Wilson 95% interval.
pub fn estimate_win_rate(
    n: usize,
    strategy: &dyn NonlocalStrategy,
    trials: u64,
    seed: u64,
) -> Result<Estimate, NonlocalError> {
    run_trials(trials, seed, |_, s| {
        play_nonlocal(n, strategy, &mut rng_from_seed(s)).map(|r| r.win)
    })
}

/// A procedure that outputs one obligation and answers to both challenges.
pub trait TwoOfTwoSolver: Send + Sync {
    fn solve(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<(Bits, Answer, Answer), NonlocalError>;
}

/// Solver built from a game strategy: stage A once, B on challenge 0, C on
/// challenge 1.
pub struct ReducedSolver<'a> {
    strategy: &'a dyn NonlocalStrategy,
}

pub fn reduce_to_2of2(strategy: &dyn NonlocalStrategy) -> ReducedSolver<'_> {
    ReducedSolver { strategy }
}

impl TwoOfTwoSolver for ReducedSolver<'_> {
    fn solve(&self, access: &PuzzleAccess, rng: &mut TrialRng) -> Result<(Bits, Answer, Answer), NonlocalError> {
        let (y, b_view, c_view, tape) = run_stage_a(self.strategy, access, rng)?;
        let ans0 = self.strategy.answer_b(&b_view, &access.public, &tape, false, rng)?;
        let ans1 = self.strategy.answer_c(&c_view, &access.public, &tape, true, rng)?;
        Ok((y, ans0, ans1))
    }
}

/// Both-challenge game: wins iff `ans0` verifies for challenge 0 and `ans1`
/// for challenge 1 against the same `y`.
pub fn play_2of2(n: usize, solver: &dyn TwoOfTwoSolver, rng: &mut TrialRng) -> Result<bool, NonlocalError> {
    let (_, trapdoor) = keygen(n, rng)?;
    play_2of2_with_key(&trapdoor, solver, rng)
}

pub fn play_2of2_with_key(
    trapdoor: &Trapdoor,
    solver: &dyn TwoOfTwoSolver,
    rng: &mut TrialRng,
) -> Result<bool, NonlocalError> {
    let access = PuzzleAccess::new(trapdoor);
    let (y, ans0, ans1) = solver.solve(&access, rng)?;
    Ok(verify(trapdoor, &y, false, &ans0).unwrap_or(false) && verify(trapdoor, &y, true, &ans1).unwrap_or(false))
}

pub fn estimate_2of2_rate(
    n: usize,
    solver: &dyn TwoOfTwoSolver,
    trials: u64,
    seed: u64,
) -> Result<Estimate, NonlocalError> {
    run_trials(trials, seed, |_, s| play_2of2(n, solver, &mut rng_from_seed(s)))
}

/// Closed-form game value of a built-in strategy at preimage length `n`.
pub fn theoretical_win_rate(name: &str, n: usize) -> Option<f64> {
    let tail = 0.5f64.powi(n as i32);
    match name {
        "honest_to_B" => Some(0.5 * tail + 0.5 * (1.0 - tail) * 0.5),
        "measure_and_guess" => Some(0.75),
        "brute_force" => Some(1.0),
        "always_fail" => Some(0.0),
        _ => None,
    }
}

/// Closed-form rate of the reduced 2-of-2 solver of a built-in strategy.
pub fn theoretical_2of2_rate(name: &str) -> Option<f64> {
    match name {
        "honest_to_B" | "measure_and_guess" => Some(0.5),
        "brute_force" => Some(1.0),
        "always_fail" => Some(0.0),
        _ => None,
    }
}

/// The empirical reduction check `p' >= 2τ - 1 - 5σ`, with σ the combined
/// standard error of both estimates. Returns `(bound, holds)`.
pub fn reduction_inequality(game: &Estimate, two_of_two: &Estimate) -> (f64, bool) {
    let sigma = (4.0 * game.std_error().powi(2) + two_of_two.std_error().powi(2)).sqrt();
    let bound = 2.0 * game.rate - 1.0 - 5.0 * sigma;
    (bound, two_of_two.rate >= bound)
}
