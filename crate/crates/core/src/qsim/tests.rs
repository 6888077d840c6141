use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::rng::rng_from_seed;

fn bits(s: &str) -> Bits {
    s.parse().unwrap()
}

fn assert_close(a: f64, b: f64) {
    assert!((a - b).abs() <= NORM_TOLERANCE, "{a} vs {b}");
}

fn assert_same_distribution(a: &BTreeMap<Bits, f64>, b: &BTreeMap<Bits, f64>) {
    let support = |d: &BTreeMap<Bits, f64>| -> Vec<Bits> {
        d.iter().filter(|(_, p)| **p > NORM_TOLERANCE).map(|(k, _)| *k).collect()
    };
    assert_eq!(support(a), support(b));
    for (k, p) in a {
        assert!((p - b.get(k).copied().unwrap_or(0.0)).abs() <= NORM_TOLERANCE);
    }
}

/// Hadamard-basis distribution by direct summation over the amplitude table.
fn brute_force_hadamard_distribution(state: &StateVector) -> BTreeMap<Bits, f64> {
    let q = state.num_qubits();
    let scale = (1u64 << q) as f64;
    Bits::all(q)
        .map(|out| {
            let amp: Complex64 = Bits::all(q)
                .map(|inp| {
                    let sign = if out.dot(&inp) { -1.0 } else { 1.0 };
                    state.amplitude(&inp) * sign
                })
                .sum();
            (out, amp.norm_sqr() / scale)
        })
        .filter(|(_, p)| *p > NORM_TOLERANCE)
        .collect()
}

fn random_state(width: usize, seed: u64) -> StateVector {
    let mut rng = rng_from_seed(seed);
    let mut amps: Vec<Complex64> = (0..1usize << width)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(&[("psi", width)], amps).unwrap()
}

#[test]
fn new_state_is_all_zeros() {
    let s = StateVector::new(&[("a", 1)]).unwrap();
    assert_eq!(s.amplitudes(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let s = StateVector::new(&[("a", 2), ("b", 1)]).unwrap();
    assert_eq!(s.amplitudes().len(), 8);
    assert_eq!(s.amplitude(&bits("000")), Complex64::new(1.0, 0.0));
}

#[test]
fn new_state_errors() {
    assert_eq!(
        StateVector::new(&[("a", 25)]).unwrap_err(),
        QsimError::CapacityExceeded(25)
    );
    assert!(matches!(
        StateVector::new(&[("a", 1), ("a", 2)]),
        Err(QsimError::DuplicateRegister(_))
    ));
    assert!(StateVector::new(&[("a", 24)]).is_ok());
}

#[test]
fn claw_state_amplitudes() {
    let s = prepare_claw_state(&bits("00"), &bits("11")).unwrap();
    for idx in Bits::all(3) {
        let expected = if idx == bits("000") || idx == bits("111") {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            0.0
        };
        assert_close(s.amplitude(&idx).re, expected);
    }
    assert!(matches!(
        prepare_claw_state(&bits("0"), &bits("11")),
        Err(QsimError::LengthMismatch { .. })
    ));
}

#[test]
fn degenerate_claw_bit_is_fair() {
    let s = prepare_claw_state(&bits("0"), &bits("0")).unwrap();
    let d = s.measurement_distribution(BIT_REGISTER).unwrap();
    assert_close(d[&bits("0")], 0.5);
    assert_close(d[&bits("1")], 0.5);
}

#[test]
fn claw_hadamard_distribution_matches_brute_force() {
    let s = prepare_claw_state(&bits("01"), &bits("10")).unwrap();
    let mut joined = StateVector::from_amplitudes(&[("all", 3)], s.amplitudes().to_vec()).unwrap();
    let oracle = brute_force_hadamard_distribution(&joined);
    assert_eq!(oracle.len(), 4);
    for (cd, p) in &oracle {
        let c = cd.get(0);
        let d = cd.slice(1, 2);
        assert_eq!(c, d.dot(&bits("11")));
        assert_close(*p, 0.25);
    }
    joined.apply_hadamard("all").unwrap();
    assert_same_distribution(&joined.measurement_distribution("all").unwrap(), &oracle);
}

#[test]
fn hadamard_examples() {
    let mut s = StateVector::new(&[("a", 1)]).unwrap();
    s.apply_hadamard("a").unwrap();
    assert_close(s.amplitudes()[0].re, std::f64::consts::FRAC_1_SQRT_2);
    assert_close(s.amplitudes()[1].re, std::f64::consts::FRAC_1_SQRT_2);

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut minus = StateVector::from_amplitudes(
        &[("a", 1)],
        vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    )
    .unwrap();
    minus.apply_hadamard("a").unwrap();
    assert_close(minus.amplitudes()[0].norm(), 0.0);
    assert_close(minus.amplitudes()[1].re, 1.0);
    assert!(matches!(minus.apply_hadamard("b"), Err(QsimError::UnknownRegister(_))));
}

#[test]
fn measurement_examples() {
    let s = prepare_claw_state(&bits("00"), &bits("11")).unwrap();
    for seed in 0..20 {
        let (rec, rest) = s.measure(BIT_REGISTER, &mut rng_from_seed(seed)).unwrap();
        assert_close(rec.probability, 0.5);
        let residual = rest.measurement_distribution(PREIMAGE_REGISTER).unwrap();
        let expected = if rec.outcome.get(0) { bits("11") } else { bits("00") };
        assert_eq!(residual.keys().copied().collect::<Vec<_>>(), vec![expected]);
    }
    let zero = StateVector::new(&[("r", 3)]).unwrap();
    let (rec, _) = zero.measure("r", &mut rng_from_seed(1)).unwrap();
    assert_eq!(rec.outcome, bits("000"));
    assert_close(rec.probability, 1.0);
}

#[test]
fn distribution_examples() {
    let zero = StateVector::new(&[("a", 1)]).unwrap();
    let d = zero.measurement_distribution("a").unwrap();
    assert_eq!(d.len(), 1);
    assert_close(d[&bits("0")], 1.0);
    let mut plus = zero.clone();
    plus.apply_hadamard("a").unwrap();
    let d = plus.measurement_distribution("a").unwrap();
    assert_close(d[&bits("0")], 0.5);
    assert_close(d[&bits("1")], 0.5);
}

#[test]
fn sampled_frequencies_match_born_rule() {
    let state = random_state(3, 99);
    let dist = state.measurement_distribution("psi").unwrap();
    let draws = 100_000u32;
    let mut counts: BTreeMap<Bits, u32> = BTreeMap::new();
    let mut rng = rng_from_seed(2024);
    for _ in 0..draws {
        let (rec, _) = state.measure("psi", &mut rng).unwrap();
        *counts.entry(rec.outcome).or_default() += 1;
    }
    for (outcome, p) in dist {
        let n = draws as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        let seen = counts.get(&outcome).copied().unwrap_or(0) as f64;
        assert!((seen - n * p).abs() <= 4.0 * sigma, "{outcome}: {seen} vs {}", n * p);
    }
}

#[test]
fn epr_pairs() {
    let s = make_epr_pairs(1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert_close(s.amplitude(&bits("00")).re, h);
    assert_close(s.amplitude(&bits("11")).re, h);
    assert_close(s.amplitude(&bits("01")).norm(), 0.0);

    let s = make_epr_pairs(3).unwrap();
    for seed in 0..50 {
        let mut rng = rng_from_seed(seed);
        let (r, rest) = s.measure("R", &mut rng).unwrap();
        let (sr, _) = rest.measure("S", &mut rng).unwrap();
        assert_eq!(r.outcome, sr.outcome);
    }
    assert_eq!(make_epr_pairs(13).unwrap_err(), QsimError::CapacityExceeded(26));
}

#[test]
fn teleport_zero_reads_k0() {
    let zero = StateVector::new(&[("psi", 1)]).unwrap();
    let joint = zero.tensor(&make_epr_pairs(1).unwrap()).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..200 {
        let (k0, k1, remote) = teleport(&joint, "psi", "R", &mut rng_from_seed(seed)).unwrap();
        seen.insert((k0, k1));
        let d = remote.measurement_distribution("S").unwrap();
        assert_eq!(d.keys().copied().collect::<Vec<_>>(), vec![k0]);
    }
    assert_eq!(seen.len(), 4, "all four Bell outcomes occur");
}

#[test]
fn teleport_then_correct_recovers_state() {
    for seed in 0..10 {
        let psi = random_state(2, seed);
        let joint = psi.tensor(&make_epr_pairs(2).unwrap()).unwrap();
        let (k0, k1, mut remote) = teleport(&joint, "psi", "R", &mut rng_from_seed(seed + 100)).unwrap();
        remote.apply_pauli_correction("S", &k0, &k1).unwrap();
        // equal up to a global phase
        let overlap: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(remote.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert_close(overlap.norm(), 1.0);
    }
}

#[test]
fn teleport_claw_state_commutes_with_standard_measurement() {
    let claw = prepare_claw_state(&bits("01"), &bits("11")).unwrap();
    let flat = StateVector::from_amplitudes(&[("psi", 3)], claw.amplitudes().to_vec()).unwrap();
    let direct = flat.measurement_distribution("psi").unwrap();
    let joint = flat.tensor(&make_epr_pairs(3).unwrap()).unwrap();
    for seed in 0..64 {
        let (k0, _, remote) = teleport(&joint, "psi", "R", &mut rng_from_seed(seed)).unwrap();
        let shifted: BTreeMap<Bits, f64> = remote
            .measurement_distribution("S")
            .unwrap()
            .into_iter()
            .map(|(o, p)| (o.xor(&k0), p))
            .collect();
        assert_same_distribution(&shifted, &direct);
    }
}

#[test]
fn memory_enforces_ownership_and_factorization() {
    let mut mem = QuantumMemory::new();
    for i in 0..9 {
        let pair = make_named_epr_pairs(1, &format!("R{i}"), &format!("S{i}")).unwrap();
        mem.insert(pair, &[(&format!("R{i}"), "A0"), (&format!("S{i}"), "A1")]).unwrap();
    }
    let claw = prepare_claw_state(&Bits::zeros(8), &Bits::new(8, 0xa5)).unwrap();
    mem.insert_owned(claw, "A0").unwrap();
    assert_eq!(mem.total_qubits(), 27);
    let shared = mem.into_shared();
    let a0 = ScopedView::new(shared.clone(), "A0");
    let a1 = ScopedView::new(shared.clone(), "A1");
    assert!(matches!(
        a1.apply_hadamard("R0"),
        Err(QsimError::RegisterViolation { .. })
    ));
    assert!(matches!(
        a0.measure("S0", Basis::Standard, &mut rng_from_seed(0)),
        Err(QsimError::RegisterViolation { .. })
    ));
    let parts: Vec<String> = (1..9).map(|i| format!("p{i}")).collect();
    let layout: Vec<(&str, usize)> = parts.iter().map(|p| (p.as_str(), 1)).collect();
    a0.split_register(PREIMAGE_REGISTER, &layout).unwrap();
    let mut rng = rng_from_seed(5);
    a0.teleport(BIT_REGISTER, "R0", &mut rng).unwrap();
    for i in 1..9 {
        a0.teleport(&format!("p{i}"), &format!("R{i}"), &mut rng).unwrap();
    }
    assert!(shared.borrow().largest_factor() <= 11);
    assert!(a0.registers().is_empty());
    assert_eq!(a1.registers().len(), 9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hadamard_is_an_involution(width in 1usize..=4, seed in any::<u64>()) {
        let psi = random_state(width, seed);
        let mut twice = psi.clone();
        twice.apply_hadamard("psi").unwrap();
        prop_assert!((twice.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
        twice.apply_hadamard("psi").unwrap();
        for (a, b) in psi.amplitudes().iter().zip(twice.amplitudes()) {
            prop_assert!((a - b).norm() <= NORM_TOLERANCE);
        }
    }

    #[test]
    fn teleportation_commutes_with_both_bases(width in 1usize..=4, seed in any::<u64>(), tseed in any::<u64>()) {
        let psi = random_state(width, seed);
        let joint = psi.tensor(&make_epr_pairs(width).unwrap()).unwrap();
        let (k0, k1, remote) = teleport(&joint, "psi", "R", &mut rng_from_seed(tseed)).unwrap();
        prop_assert!((remote.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
        for (basis, key) in [(Basis::Standard, k0), (Basis::Hadamard, k1)] {
            let direct = psi.distribution_in("psi", basis).unwrap();
            let shifted: BTreeMap<Bits, f64> = remote
                .distribution_in("S", basis)
                .unwrap()
                .into_iter()
                .map(|(o, p)| (o.xor(&key), p))
                .collect();
            for o in Bits::all(width) {
                let a = direct.get(&o).copied().unwrap_or(0.0);
                let b = shifted.get(&o).copied().unwrap_or(0.0);
                prop_assert!((a - b).abs() <= NORM_TOLERANCE);
            }
        }
    }
}

#[test]
fn teleport_branches_are_uniform_and_match_sampling() {
    for width in 1..=3 {
        let psi = random_state(width, width as u64);
        let joint = psi.tensor(&make_epr_pairs(width).unwrap()).unwrap();
        let branches = teleport_branches(&joint, "psi", "R").unwrap();
        assert_eq!(branches.len(), 1 << (2 * width));
        for (_, _, p, _) in &branches {
            assert_close(*p, 1.0 / (1u64 << (2 * width)) as f64);
        }
        for seed in 0..8 {
            let (k0, k1, remote) = teleport(&joint, "psi", "R", &mut rng_from_seed(seed)).unwrap();
            let (_, _, _, exact) = branches.iter().find(|(x, z, _, _)| *x == k0 && *z == k1).unwrap();
            for (a, b) in remote.amplitudes().iter().zip(exact.amplitudes()) {
                assert!((a - b).norm() <= NORM_TOLERANCE);
            }
        }
    }
}
