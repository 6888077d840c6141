use super::*;
use crate::puzzle::Answer;
use crate::rng::trial_seed;
use crate::spacetime::EventKind;

fn c(s: &str) -> Coordinate {
    s.parse().unwrap()
}

const POSITIONS: [&str; 5] = ["1", "5/4", "3/2", "7/4", "199/100"];

fn near(est: &Estimate, p: f64) {
    let sigma = (p * (1.0 - p) / est.trials as f64).sqrt();
    assert!(
        (est.rate - p).abs() <= 4.0 * sigma + 1e-12,
        "rate {} vs {p} (4σ = {})",
        est.rate,
        4.0 * sigma
    );
}

fn honest(n: usize) -> f64 {
    1.0 - 0.5f64.powi(n as i32 + 1)
}

#[test]
fn honest_timing_is_exact_at_every_position() {
    for pos in POSITIONS {
        let p = c(pos);
        let config = PRPVConfig::new(6, 1).with_position(p).with_seed(11);
        let out = run_prpv(&config, Participants::Prover(&HonestProver)).unwrap();
        let t = &out.transcript;
        let two_p = c("2").checked_mul(&p).unwrap();
        assert_eq!(t.y0.as_ref().unwrap().time, two_p, "p={pos}");
        assert_eq!(t.y1.as_ref().unwrap().time, c("3"));
        assert_eq!(t.ans0.as_ref().unwrap().time, c("4"));
        assert_eq!(t.ans1.as_ref().unwrap().time, c("7").checked_sub(&two_p).unwrap());
        assert!(!matches!(
            out.verdict.reason(),
            Reason::TimingY0 | Reason::TimingY1 | Reason::TimingAns0 | Reason::TimingAns1
        ));
    }
}

#[test]
fn prover_holds_the_state_for_four_minus_two_p() {
    for (pos, hold) in [("1", "2"), ("3/2", "1"), ("7/4", "1/2")] {
        let config = PRPVConfig::new(4, 1).with_position(c(pos));
        let out = run_prpv(&config, Participants::Prover(&HonestProver)).unwrap();
        let prover = PartyId(2);
        let times: Vec<_> = out
            .trace
            .deliveries_to(prover)
            .filter(|e| matches!(e.payload[0], TAG_KEY | TAG_CHALLENGE))
            .map(|e| e.time)
            .collect();
        assert_eq!(times.len(), 2);
        assert_eq!(times[0], c(pos));
        assert_eq!(times[1], c("4").checked_sub(&c(pos)).unwrap());
        assert_eq!(times[1].checked_sub(&times[0]).unwrap(), c(hold));
    }
}

#[test]
fn positions_outside_the_interval_miss_a_deadline() {
    for pos in ["1/2", "9/4", "5/2"] {
        let config = PRPVConfig::new(4, 1).with_position(c(pos));
        assert!(matches!(
            run_prpv(&config, Participants::Prover(&HonestProver)),
            Err(ProtocolError::ConfigInvalid(_))
        ));
        for seed in 0..20 {
            let out = simulate_trial(&config, Variant::Plain, Participants::Prover(&HonestProver), seed).unwrap();
            assert!(!out.verdict.accept());
            assert!(matches!(
                out.verdict.reason(),
                Reason::TimingY0 | Reason::TimingY1 | Reason::TimingAns0 | Reason::TimingAns1
            ));
        }
    }
    let at = |pos| {
        let config = PRPVConfig::new(4, 1).with_position(c(pos));
        simulate_trial(&config, Variant::Plain, Participants::Prover(&HonestProver), 0)
            .unwrap()
            .verdict
            .reason()
    };
    assert_eq!(at("1/2"), Reason::TimingAns1);
    assert_eq!(at("9/4"), Reason::TimingY0);
    assert_eq!(at("5/2"), Reason::TimingY0);
}

#[test]
fn config_validation() {
    let bad = |config: PRPVConfig, variant| matches!(config.validate(variant), Err(ProtocolError::ConfigInvalid(_)));
    assert!(bad(PRPVConfig::new(4, 0), Variant::Plain));
    assert!(bad(PRPVConfig::new(1, 1), Variant::Plain));
    assert!(bad(PRPVConfig::new(4, 1).with_position(c("2")), Variant::Plain));
    assert!(bad(PRPVConfig::new(4, 1).with_lambda(7), Variant::RandomOracle));
    assert!(PRPVConfig::new(4, 1).with_lambda(7).validate(Variant::Plain).is_ok());
    assert!(PRPVConfig::new(4, 1).with_position(c("1")).validate(Variant::Plain).is_ok());
}

struct ZeroD;

struct ZeroDSession(usize, usize);

impl InteractiveProver for ZeroDSession {
    fn commit(&mut self, key: &KeyMaterial) -> Result<Obligation, ProtocolError> {
        self.0 = key.puzzle.n();
        self.1 = key.puzzle.k();
        Ok(Obligation { ys: vec![Bits::zeros(self.0); self.1] })
    }

    fn respond(&mut self, _: &Challenge) -> Result<AnswerVector, ProtocolError> {
        Ok(AnswerVector {
            answers: vec![Answer::Equation { c: false, d: Bits::zeros(self.0) }; self.1],
        })
    }
}

impl ProverFactory for ZeroD {
    fn name(&self) -> &str {
        "zero_d"
    }

    fn session(&self, _: u64) -> Box<dyn InteractiveProver + '_> {
        Box::new(ZeroDSession(0, 0))
    }
}

#[test]
fn zero_d_answers_fail_verification() {
    for seed in 0..30 {
        let out = run_prpv(&PRPVConfig::new(4, 2).with_seed(seed), Participants::Prover(&ZeroD)).unwrap();
        assert_eq!(out.verdict, Verdict::rejected(Reason::VerFail));
    }
}

#[test]
fn honest_completeness_matches_closed_forms() {
    let single = estimate_acceptance(&PRPVConfig::new(5, 1).with_seed(3), Variant::Plain, Participants::Prover(&HonestProver), 3_000).unwrap();
    near(&single, honest(5));
    let parallel = estimate_acceptance(&PRPVConfig::new(3, 4).with_seed(4), Variant::Plain, Participants::Prover(&HonestProver), 3_000).unwrap();
    near(&parallel, honest(3).powi(4));
    let strong = PRPVConfig::new(3, 3).with_repetition(Repetition::Strong).with_seed(5);
    let est = estimate_acceptance(&strong, Variant::Plain, Participants::Prover(&HonestProver), 3_000).unwrap();
    near(&est, 0.5 * (1.0 + (1.0 - 0.125f64).powi(3)));
}

#[test]
fn k_instances_share_one_message_per_direction() {
    let out = run_prpv(&PRPVConfig::new(4, 4), Participants::Prover(&HonestProver)).unwrap();
    let prover = PartyId(2);
    let emits: Vec<_> = out
        .trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Emit && e.party == prover)
        .collect();
    assert_eq!(emits.len(), 2);
    match Payload::decode(&emits[0].payload).unwrap() {
        Payload::Obligation(o) => assert_eq!(o.ys.len(), 4),
        other => panic!("{other:?}"),
    }
    assert_eq!(out.challenge.width(), 4);
    assert_eq!(out.transcript.y0.as_ref().unwrap().time, c("3"));
}

fn accepted_outcome() -> (PRPVConfig, TrialOutcome) {
    for seed in 0.. {
        let config = PRPVConfig::new(4, 2).with_seed(seed);
        let out = run_prpv(&config, Participants::Prover(&HonestProver)).unwrap();
        if out.verdict.accept() {
            return (config, out);
        }
    }
    unreachable!()
}

fn redecide(config: &PRPVConfig, out: &TrialOutcome, edit: impl FnOnce(&mut Trace)) -> Reason {
    let env = TrialEnv::sample(config, Variant::Plain, config.seed).unwrap();
    let mut trace = out.trace.clone();
    edit(&mut trace);
    decide(&env, &trace, out.v0, out.v1).unwrap().0.reason()
}

fn delivery(trace: &mut Trace, party: PartyId, tag: u8) -> &mut crate::spacetime::TraceEvent {
    trace
        .events
        .iter_mut()
        .find(|e| e.kind == EventKind::Deliver && e.party == party && e.payload[0] == tag)
        .unwrap()
}

#[test]
fn corrupting_one_thing_flips_the_verdict() {
    let (config, out) = accepted_outcome();
    let (v0, v1) = (out.v0, out.v1);
    assert_eq!(redecide(&config, &out, |_| {}), Reason::None);
    let shift = |t: &mut Coordinate, d: &str| *t = t.checked_add(&c(d)).unwrap();
    assert_eq!(redecide(&config, &out, |t| shift(&mut delivery(t, v0, TAG_OBLIGATION).time, "2")), Reason::TimingY0);
    assert_eq!(redecide(&config, &out, |t| shift(&mut delivery(t, v1, TAG_OBLIGATION).time, "1/1000")), Reason::TimingY1);
    assert_eq!(redecide(&config, &out, |t| shift(&mut delivery(t, v0, TAG_ANSWERS).time, "-1/1000")), Reason::TimingAns0);
    assert_eq!(redecide(&config, &out, |t| shift(&mut delivery(t, v1, TAG_ANSWERS).time, "1001/1000")), Reason::TimingAns1);
    for byte in 1..out.transcript.y1.as_ref().unwrap().payload.len() {
        let reason = redecide(&config, &out, |t| delivery(t, v1, TAG_OBLIGATION).payload[byte] ^= 1);
        assert_eq!(reason, Reason::Mismatch, "byte {byte}");
    }
    assert_eq!(redecide(&config, &out, |t| { delivery(t, v0, TAG_ANSWERS).payload.push(0) }), Reason::Mismatch);
    let wrong = |t: &mut Trace| {
        let Payload::Answers(mut a) = Payload::decode(&delivery(t, v0, TAG_ANSWERS).payload).unwrap() else {
            unreachable!()
        };
        a.answers[1] = match a.answers[1] {
            Answer::Preimage { bit, value } => Answer::Preimage { bit: !bit, value },
            Answer::Equation { c, d } => Answer::Equation { c: !c, d },
        };
        let bytes = Payload::Answers(a).encode();
        delivery(t, v0, TAG_ANSWERS).payload = bytes.clone();
        delivery(t, v1, TAG_ANSWERS).payload = bytes;
    };
    assert_eq!(redecide(&config, &out, wrong), Reason::VerFail);
}

#[test]
fn later_conflicting_arrival_is_a_mismatch() {
    let (config, out) = accepted_outcome();
    let v0 = out.v0;
    let same = redecide(&config, &out, |t| {
        let mut extra = delivery(t, v0, TAG_OBLIGATION).clone();
        extra.time = c("7/2");
        t.events.push(extra);
    });
    assert_eq!(same, Reason::None);
    let different = redecide(&config, &out, |t| {
        let mut extra = delivery(t, v0, TAG_OBLIGATION).clone();
        extra.time = c("7/2");
        *extra.payload.last_mut().unwrap() ^= 1;
        t.events.push(extra);
    });
    assert_eq!(different, Reason::Mismatch);
}

#[test]
fn runs_are_deterministic() {
    let config = PRPVConfig::new(5, 3).with_seed(99);
    let a = run_prpv(&config, Participants::Prover(&HonestProver)).unwrap();
    let b = run_prpv(&config, Participants::Prover(&HonestProver)).unwrap();
    assert_eq!(a.trace.to_json_lines(), b.trace.to_json_lines());
    assert_eq!(a.verdict, b.verdict);
    let other = run_prpv(&config.clone().with_seed(100), Participants::Prover(&HonestProver)).unwrap();
    assert_ne!(a.trace.to_json_lines(), other.trace.to_json_lines());
}

#[test]
fn oracle_variant_derives_a_consistent_challenge() {
    let config = PRPVConfig::new(4, 4).with_lambda(16);
    for seed in 0..50 {
        let env = TrialEnv::sample(&config, Variant::RandomOracle, seed).unwrap();
        let key = env.resolve(env.key_payload()).unwrap();
        let prover_view = env.challenge_for(&key, env.challenge_payload()).unwrap();
        assert_eq!(prover_view, env.verifier_challenge().unwrap());
        assert_eq!(env.oracle().unwrap().distinct_queries(), 1);
    }
    let out = run_roprpv(&config, Participants::Prover(&HonestProver)).unwrap();
    assert_eq!(out.transcript.ans1.as_ref().unwrap().time, c("4"));
}

#[test]
fn oracle_outputs_are_fresh_across_trials() {
    let config = PRPVConfig::new(4, 4);
    let mut counts = [0u32; 16];
    let trials = 1_000;
    for i in 0..trials {
        let env = TrialEnv::sample(&config, Variant::RandomOracle, trial_seed(5, i)).unwrap();
        counts[env.verifier_challenge().unwrap().bits.value() as usize] += 1;
    }
    let expected = trials as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    // 15 degrees of freedom, p = 0.001.
    assert!(chi2 < 37.7, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn oracle_repeats_and_checks_width() {
    let oracle = RandomOracle::new(8, 3, 1);
    let x = Bits::new(8, 77);
    assert_eq!(oracle.query(&x).unwrap(), oracle.query(&x).unwrap());
    assert_eq!(oracle.distinct_queries(), 1);
    assert_eq!(oracle.query(&x).unwrap().len(), 3);
    assert!(oracle.query(&Bits::new(7, 1)).is_err());
}

#[test]
fn oracle_completeness_matches_plain() {
    let config = PRPVConfig::new(4, 3).with_seed(8);
    let plain = estimate_acceptance(&config, Variant::Plain, Participants::Prover(&HonestProver), 2_000).unwrap();
    let ro = estimate_acceptance(&config, Variant::RandomOracle, Participants::Prover(&HonestProver), 2_000).unwrap();
    assert!(plain.overlaps(&ro), "{plain:?} vs {ro:?}");
    near(&ro, honest(4).powi(3));
}

#[test]
fn poq_transcript_order_and_rates() {
    let config = PRPVConfig::new(4, 1).with_seed(12);
    let poq = poq_transform(&config).unwrap();
    let out = poq.run(&HonestProver, 1).unwrap();
    let steps: Vec<_> = out.transcript.iter().map(|(s, _)| *s).collect();
    assert_eq!(steps, vec![PoqStep::Key, PoqStep::Obligation, PoqStep::Challenge, PoqStep::Answers]);
    near(&poq.estimate(&HonestProver, 3_000).unwrap(), honest(4));
    near(&poq.estimate(&ClassicalStandIn(PreimageThenGuess), 3_000).unwrap(), 0.75);
    let zero = 0.5 * (0.0625 + 0.5);
    near(&poq.estimate(&ClassicalStandIn(ZeroObligationGuesser), 3_000).unwrap(), zero);
}

#[test]
fn poq_agrees_with_spacetime_runs_per_seed() {
    let config = PRPVConfig::new(4, 2);
    let poq = poq_transform(&config).unwrap();
    let stand_in = ClassicalStandIn(PreimageThenGuess);
    for seed in 0..40 {
        let a = poq.run(&stand_in, seed).unwrap().accept;
        let b = simulate_trial(&config, Variant::Plain, Participants::Prover(&stand_in), seed)
            .unwrap()
            .verdict
            .accept();
        assert_eq!(a, b, "seed {seed}");
    }
}
