use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::*;
use crate::qsim::{Basis, NORM_TOLERANCE};
use crate::rng::rng_from_seed;

fn key(n: usize, seed: u64) -> (PublicHandle, Trapdoor) {
    keygen(n, &mut rng_from_seed(seed)).unwrap()
}

/// Exact acceptance probability of the honest solver on challenge `b`,
/// computed from the full outcome distribution of the claw state.
fn exact_acceptance(td: &Trapdoor, y: &Bits, state: &StateVector, b: bool) -> f64 {
    let n = td.n();
    let flat = StateVector::from_amplitudes(&[("all", n + 1)], state.amplitudes().to_vec()).unwrap();
    flat.distribution_in("all", Basis::from_bit(b))
        .unwrap()
        .into_iter()
        .map(|(o, p)| {
            let bit = o.get(0);
            let rest = o.slice(1, n);
            let ans = if b {
                Answer::Equation { c: bit, d: rest }
            } else {
                Answer::Preimage { bit, value: rest }
            };
            if verify(td, y, b, &ans).unwrap() { p } else { 0.0 }
        })
        .sum()
}

#[test]
fn claw_relation_and_round_trip_exhaustive() {
    for n in 2..=8 {
        for seed in 0..3 {
            let (pk, td) = key(n, seed);
            let s = td.key().shift;
            for x in Bits::all(n) {
                assert_eq!(pk.eval(true, &x.xor(&s)).unwrap(), pk.eval(false, &x).unwrap());
                for b in [false, true] {
                    let y = pk.eval(b, &x).unwrap();
                    assert_eq!(td.inv(b, &y).unwrap(), x);
                    assert_eq!(pk.eval(b, &td.inv(b, &x).unwrap()).unwrap(), x);
                }
            }
            for b in [false, true] {
                let images: BTreeSet<_> = Bits::all(n).map(|x| pk.eval(b, &x).unwrap()).collect();
                assert_eq!(images.len(), 1 << n);
            }
        }
    }
}

#[test]
fn chk_examples() {
    let (pk, _) = key(6, 4);
    let mut rng = rng_from_seed(9);
    for _ in 0..20 {
        let x = Bits::random(6, &mut rng);
        let b = rng.gen::<bool>();
        assert!(pk.chk(b, &x, &pk.eval(b, &x).unwrap()).unwrap());
        let flipped = x.xor(&Bits::new(6, 1));
        assert!(!pk.chk(false, &x, &pk.eval(false, &flipped).unwrap()).unwrap());
    }
    for n in [3, 8] {
        let (pk, _) = key(n, 21);
        let y = Bits::random(n, &mut rng);
        let count = Bits::all(n).filter(|x| pk.chk(false, x, &y).unwrap()).count();
        assert_eq!(count, 1);
    }
}

#[test]
fn obligation_is_uniform_chi_square() {
    let (_, td) = key(4, 5);
    let mut rng = rng_from_seed(77);
    let draws = 10_000;
    let mut counts = [0u32; 16];
    for _ in 0..draws {
        let (y, _) = obligate(&td, &mut rng);
        counts[y.value() as usize] += 1;
    }
    let expected = draws as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = 15.0f64;
    assert!(chi2 <= dof + 4.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}");
}

#[test]
fn obligation_state_support() {
    let (_, td) = key(5, 6);
    let mut rng = rng_from_seed(1);
    for _ in 0..50 {
        let (y, state) = obligate(&td, &mut rng);
        let flat = StateVector::from_amplitudes(&[("all", 6)], state.amplitudes().to_vec()).unwrap();
        let support: BTreeSet<Bits> = flat.measurement_distribution("all").unwrap().into_keys().collect();
        let expected: BTreeSet<Bits> = [false, true]
            .into_iter()
            .map(|b| Bits::new(1, b as u64).concat(&td.inv(b, &y).unwrap()))
            .collect();
        assert_eq!(support, expected);
    }
}

#[test]
fn analytic_obligate_matches_explicit_circuit() {
    let (pk, td) = key(3, 12);
    let branches = obligate_circuit_branches(&pk).unwrap();
    assert_eq!(branches.len(), 8);
    let by_y: BTreeMap<Bits, (f64, StateVector)> =
        branches.into_iter().map(|(y, p, s)| (y, (p, s))).collect();
    for (y, (p, state)) in &by_y {
        assert!((p - 0.125).abs() <= NORM_TOLERANCE);
        let analytic = crate::qsim::prepare_claw_state(&td.inv(false, y).unwrap(), &td.inv(true, y).unwrap()).unwrap();
        for (a, b) in analytic.amplitudes().iter().zip(state.amplitudes()) {
            assert!((a - b).norm() <= NORM_TOLERANCE);
        }
    }
    let mut rng = rng_from_seed(3);
    for _ in 0..200 {
        let (y, state) = obligate(&td, &mut rng);
        let (_, circuit_state) = &by_y[&y];
        for (a, b) in state.amplitudes().iter().zip(circuit_state.amplitudes()) {
            assert!((a - b).norm() <= NORM_TOLERANCE);
        }
    }
    let (y, s) = run_obligate_circuit(&pk, &mut rng).unwrap();
    assert_eq!(s.registers(), by_y[&y].1.registers());
}

#[test]
fn honest_acceptance_is_exact_for_small_n() {
    for n in 2..=4 {
        let (_, td) = key(n, 40 + n as u64);
        let mut rng = rng_from_seed(n as u64);
        for _ in 0..8 {
            let (y, state) = obligate(&td, &mut rng);
            let zero = exact_acceptance(&td, &y, &state, false);
            let one = exact_acceptance(&td, &y, &state, true);
            assert!((zero - 1.0).abs() <= NORM_TOLERANCE);
            let expected = 1.0 - 0.5f64.powi(n as i32);
            assert!((one - expected).abs() <= NORM_TOLERANCE, "n={n}: {one}");
            let completeness = 0.5 * zero + 0.5 * one;
            assert!((completeness - (1.0 - 0.5f64.powi(n as i32 + 1))).abs() <= NORM_TOLERANCE);
        }
    }
}

#[test]
fn premeasured_state_halves_equation_acceptance() {
    for n in 2..=4 {
        let (_, td) = key(n, 60 + n as u64);
        let (y, _) = obligate(&td, &mut rng_from_seed(2));
        let x0 = td.inv(false, &y).unwrap();
        let collapsed = StateVector::basis_state(
            &[(crate::qsim::BIT_REGISTER, 1), (crate::qsim::PREIMAGE_REGISTER, n)],
            &[(crate::qsim::PREIMAGE_REGISTER, x0)],
        )
        .unwrap();
        let p = exact_acceptance(&td, &y, &collapsed, true);
        let expected = 0.5 * (1.0 - 0.5f64.powi(n as i32));
        assert!((p - expected).abs() <= NORM_TOLERANCE, "n={n}: {p}");
    }
}

#[test]
fn solve_outputs_pass_on_challenge_zero() {
    let (pk, td) = key(8, 3);
    let mut rng = rng_from_seed(8);
    for _ in 0..500 {
        let (y, state) = obligate(&td, &mut rng);
        let ans = solve(&pk, state, false, &mut rng).unwrap();
        assert!(matches!(ans, Answer::Preimage { .. }));
        assert!(verify(&td, &y, false, &ans).unwrap());
    }
}

#[test]
fn solve_rejects_foreign_states() {
    let (pk, _) = key(4, 3);
    let wrong = StateVector::new(&[("bit", 1), ("preimage", 3)]).unwrap();
    assert_eq!(
        solve(&pk, wrong, false, &mut rng_from_seed(0)).unwrap_err(),
        PuzzleError::WrongStateShape
    );
}

#[test]
fn verify_examples() {
    let (_, td) = key(6, 31);
    let s = td.key().shift;
    let (y, _) = obligate(&td, &mut rng_from_seed(4));
    let preimage = Answer::Preimage { bit: true, value: td.inv(true, &y).unwrap() };
    assert!(verify(&td, &y, false, &preimage).unwrap());
    for c in [false, true] {
        let ans = Answer::Equation { c, d: Bits::zeros(6) };
        assert!(!verify(&td, &y, true, &ans).unwrap());
    }
    for d in Bits::all(6).filter(|d| !d.is_zero()) {
        assert!(verify(&td, &y, true, &Answer::Equation { c: d.dot(&s), d }).unwrap());
        assert!(!verify(&td, &y, true, &Answer::Equation { c: !d.dot(&s), d }).unwrap());
    }
    assert_eq!(verify(&td, &y, true, &preimage).unwrap_err(), PuzzleError::TagMismatch);
}

#[test]
fn public_zero_verification_agrees_with_trapdoor() {
    let (pk, td) = key(7, 15);
    let mut rng = rng_from_seed(16);
    for i in 0..10_000 {
        let (y, _) = obligate(&td, &mut rng);
        let bit = rng.gen::<bool>();
        let mut value = td.inv(bit, &y).unwrap();
        if i % 2 == 1 {
            value = value.xor(&Bits::random(7, &mut rng));
        }
        let ans = Answer::Preimage { bit, value };
        assert_eq!(verify_public_0(&pk, &y, &ans).unwrap(), verify(&td, &y, false, &ans).unwrap());
    }
    let (y, _) = obligate(&td, &mut rng);
    let good = Answer::Preimage { bit: false, value: td.inv(false, &y).unwrap() };
    assert!(verify_public_0(&pk, &y, &good).unwrap());
    if let Answer::Preimage { bit, value } = good {
        let bad = Answer::Preimage { bit, value: value.xor(&Bits::new(7, 0b100)) };
        assert!(!verify_public_0(&pk, &y, &bad).unwrap());
    }
    let eq = Answer::Equation { c: false, d: Bits::new(7, 1) };
    assert_eq!(verify_public_0(&pk, &y, &eq).unwrap_err(), PuzzleError::TagMismatch);
}

#[test]
fn single_instance_repetition_is_the_base_puzzle() {
    for puzzle in [RepeatedPuzzle::strong(5, 1).unwrap(), RepeatedPuzzle::parallel(5, 1).unwrap()] {
        for seed in 0..20 {
            let mut a = rng_from_seed(seed);
            let mut b = rng_from_seed(seed);
            let td = puzzle.keygen(&mut a).unwrap();
            let (_, base_td) = keygen(5, &mut b).unwrap();
            assert_eq!(td.keys, vec![base_td.clone()]);
            let (ob, states) = puzzle.obligate(&td, &mut a);
            let (y, state) = obligate(&base_td, &mut b);
            assert_eq!(ob.ys, vec![y]);
            assert_eq!(states, vec![state.clone()]);
            let bit = seed % 2 == 1;
            let ch = Challenge::single(bit);
            let answers = puzzle.solve(&td.public(), states, &ch, &mut a).unwrap();
            let ans = solve(&base_td.public(), state, bit, &mut b).unwrap();
            assert_eq!(answers.answers, vec![ans]);
            assert_eq!(puzzle.verify(&td, &ob, &ch, &answers), verify(&base_td, &y, bit, &ans).unwrap());
        }
    }
}

#[test]
fn repeated_puzzle_validation() {
    assert_eq!(RepeatedPuzzle::parallel(8, 0).unwrap_err(), PuzzleError::InvalidK(0));
    assert_eq!(RepeatedPuzzle::strong(1, 2).unwrap_err(), PuzzleError::InvalidN(1));
    let p = RepeatedPuzzle::parallel(4, 3).unwrap();
    let mut rng = rng_from_seed(1);
    let td = p.keygen(&mut rng).unwrap();
    let (ob, states) = p.obligate(&td, &mut rng);
    let err = p.solve(&td.public(), states, &Challenge::single(true), &mut rng).unwrap_err();
    assert!(matches!(err, PuzzleError::ChallengeWidth { expected: 3, found: 1 }));
    let ch = p.sample_challenge(&mut rng);
    let good = p.trapdoor_answers(&td, &ob, &ch, &mut rng).unwrap();
    assert!(p.verify(&td, &ob, &ch, &good));
    let mut short = good.clone();
    short.answers.pop();
    assert!(!p.verify(&td, &ob, &ch, &short));
    assert_eq!(td.public().to_bytes().len(), 4 + 3 * family::PUBLIC_KEY_BYTES);
}
