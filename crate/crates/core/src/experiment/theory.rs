//! Closed-form acceptance probabilities used as targets by the experiments.

fn tail(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Honest XZ-solver, one instance: `1 - 2^{-n-1}`.
pub fn honest_instance(n: usize) -> f64 {
    1.0 - tail(n + 1)
}

/// Honest prover, `k` instances with independent challenge bits.
pub fn honest_parallel(n: usize, k: usize) -> f64 {
    honest_instance(n).powi(k as i32)
}

/// Honest prover, `k` instances sharing one challenge bit. Challenge 0
/// always passes; challenge 1 needs every `d` to be nonzero.
pub fn honest_strong(n: usize, k: usize) -> f64 {
    0.5 * (1.0 + (1.0 - tail(n)).powi(k as i32))
}

/// Guess every bit in advance and solve honestly for the guess.
pub fn guessing_parallel(n: usize, k: usize) -> f64 {
    (0.5 * honest_instance(n)).powi(k as i32)
}

pub fn guessing_strong(n: usize, k: usize) -> f64 {
    0.5 * honest_strong(n, k)
}

/// Commit to `0^n` and answer at random: a random preimage claim hits with
/// probability `2^{-n}`, a random equation with probability `1/2`.
pub fn zero_obligation_parallel(n: usize, k: usize) -> f64 {
    (0.5 * (tail(n) + 0.5)).powi(k as i32)
}

/// Commit to a known image, answer challenge 0 exactly and guess
/// challenge 1.
pub fn preimage_then_guess_parallel(k: usize) -> f64 {
    0.75f64.powi(k as i32)
}
