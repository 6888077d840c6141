//! The built-in attacks.

use super::{
    forwarding_compiler, frame, unframe, AdversaryClass, AdversaryError, CanonicalAdversary, Context,
    EntanglementBudget, LeftStep, RightStep, Setup, Stage, StageSeed, LEFT, RIGHT,
};
use crate::bits::Bits;
use crate::protocol::{
    ClassicalProver, KeyMaterial, Payload, ProtocolError, ZeroObligationGuesser,
};
use crate::puzzle::{Answer, AnswerVector, Challenge, Obligation, PuzzleError, RepeatedPuzzle};
use crate::qsim::{make_named_epr_pairs, Basis, QuantumMemory, ScopedView, BIT_REGISTER, MAX_QUBITS, PREIMAGE_REGISTER};
use crate::rng::derive_seed;

pub const ATTACK_NAMES: [&str; 4] = ["guess", "forward_compiled_guess", "teleport", "classical_forward"];

/// Builds a named attack against `(n, k)` parallel instances.
pub fn attack_by_name(name: &str, n: usize, k: usize) -> Option<Result<Box<dyn CanonicalAdversary>, ProtocolError>> {
    let built: Result<Box<dyn CanonicalAdversary>, ProtocolError> = match name {
        "guess" => guessing_attack(n, k).map(|a| Box::new(a) as _),
        "forward_compiled_guess" => guessing_attack(n, k)
            .and_then(|a| forwarding_compiler(a).map_err(Into::into))
            .map(|a| Box::new(a) as _),
        "teleport" => teleport_attack(n, k).map(|a| Box::new(a) as _),
        "classical_forward" => Ok(Box::new(classical_forward_attack(ZeroObligationGuesser, TapeSharing::Shared))),
        _ => return None,
    };
    Some(built)
}

fn challenge_of(payload: &[u8]) -> Result<Challenge, ProtocolError> {
    match Payload::decode(payload)? {
        Payload::Challenge(c) => Ok(c),
        _ => Err(ProtocolError::Malformed("expected a challenge message")),
    }
}

/// The bit instance `i` answers: the single bit of a one-bit challenge, bit
/// `i` otherwise.
fn instance_bit(challenge: &Challenge, i: usize) -> bool {
    if challenge.width() == 1 {
        challenge.bits.get(0)
    } else {
        challenge.bits.get(i)
    }
}

fn check_shape(key: &KeyMaterial, n: usize, k: usize) -> Result<(), ProtocolError> {
    if key.puzzle.n() != n || key.puzzle.k() != k {
        return Err(ProtocolError::Malformed("key does not match the attack's parameters"));
    }
    Ok(())
}

fn decode_answers(bytes: &[u8]) -> Result<AnswerVector, ProtocolError> {
    Ok(AnswerVector::decode(bytes)?)
}

fn encode_bits(list: &[Bits]) -> Vec<u8> {
    let mut out = Vec::new();
    for b in list {
        b.encode_into(&mut out);
    }
    out
}

fn decode_bits(mut bytes: &[u8]) -> Result<Vec<Bits>, ProtocolError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (b, rest) = Bits::decode(bytes).ok_or(PuzzleError::Malformed)?;
        out.push(b);
        bytes = rest;
    }
    Ok(out)
}

/// Guesses the challenge before it is sent, obligates honestly, and
/// precomputes the answers for the guess. Wins iff the guess is right and
/// the honest answers verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuessingAttack {
    n: usize,
    k: usize,
}

pub fn guessing_attack(n: usize, k: usize) -> Result<GuessingAttack, ProtocolError> {
    RepeatedPuzzle::parallel(n, k).map_err(|e| ProtocolError::ConfigInvalid(e.to_string()))?;
    Ok(GuessingAttack { n, k })
}

impl CanonicalAdversary for GuessingAttack {
    fn name(&self) -> &str {
        "guess"
    }

    fn class(&self) -> AdversaryClass {
        AdversaryClass::R0
    }

    fn setup(&self, _: StageSeed) -> Result<Setup, ProtocolError> {
        Ok(Setup::default())
    }

    fn on_key(&self, ctx: &Context, _: &ScopedView, key: &KeyMaterial, _: &[u8]) -> Result<LeftStep, ProtocolError> {
        check_shape(key, self.n, self.k)?;
        let mut rng = ctx.seed.rng(Stage::U1);
        let guess = key.puzzle.sample_challenge(&mut rng);
        let (ys, states) = key.samplers.iter().map(|s| s.obligate(&mut rng)).unzip();
        let y = Obligation { ys };
        let answers = key.puzzle.solve(&key.public, states, &guess, &mut rng)?.encode();
        Ok(LeftStep {
            to_right: frame(&[&y.encode(), &answers]),
            keep: answers,
            y0: y,
        })
    }

    fn on_challenge(&self, _: &Context, _: &ScopedView, challenge: &[u8], _: &[u8]) -> Result<RightStep, ProtocolError> {
        Ok(RightStep {
            to_left: challenge.to_vec(),
            keep: Vec::new(),
        })
    }

    fn right_output(
        &self,
        _: &Context,
        _: &ScopedView,
        from_left: &[u8],
        _: &[u8],
        _: &[u8],
    ) -> Result<(Obligation, AnswerVector), ProtocolError> {
        let [y, answers] = unframe(from_left)?[..] else {
            return Err(ProtocolError::Malformed("guess message"));
        };
        Ok((Obligation::decode(y)?, decode_answers(answers)?))
    }

    fn left_output(
        &self,
        _: &Context,
        _: &ScopedView,
        _: &[u8],
        keep: &[u8],
        _: &[u8],
    ) -> Result<AnswerVector, ProtocolError> {
        decode_answers(keep)
    }
}

/// Teleports each instance's post-obligation state to A1 one qubit at a
/// time. A1 measures in the basis the challenge asks for and both sides
/// undo the teleportation's Pauli frame on the classical outcomes: the
/// X-type string fixes standard-basis results and the Z-type string fixes
/// Hadamard-basis results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeleportAttack {
    n: usize,
    k: usize,
    budget: usize,
}

pub fn teleport_attack(n: usize, k: usize) -> Result<TeleportAttack, ProtocolError> {
    teleport_attack_with_budget(n, k, k * (n + 1))
}

pub fn teleport_attack_with_budget(n: usize, k: usize, budget: usize) -> Result<TeleportAttack, ProtocolError> {
    RepeatedPuzzle::parallel(n, k).map_err(|e| ProtocolError::ConfigInvalid(e.to_string()))?;
    EntanglementBudget::new(budget).check(k * (n + 1))?;
    // Largest joint state: one instance plus the EPR pair in use.
    if n + 3 > MAX_QUBITS {
        return Err(AdversaryError::CapacityExceeded(n + 3).into());
    }
    Ok(TeleportAttack { n, k, budget })
}

fn source_register(i: usize, j: usize) -> String {
    format!("q{i}_{j}")
}

fn left_half(i: usize, j: usize) -> String {
    format!("R{i}_{j}")
}

fn right_half(i: usize, j: usize) -> String {
    format!("S{i}_{j}")
}

impl TeleportAttack {
    /// EPR pairs the attack consumes.
    pub fn pairs(&self) -> usize {
        self.k * (self.n + 1)
    }

    /// `ans_i` from A1's outcome `r_i` and the Pauli frame `(x_i, z_i)`.
    fn answers(&self, challenge: &Challenge, rs: &[Bits], frames: &[Bits]) -> Result<AnswerVector, ProtocolError> {
        if rs.len() != self.k || frames.len() != 2 * self.k {
            return Err(ProtocolError::Malformed("teleport message"));
        }
        let answers = (0..self.k)
            .map(|i| {
                let b = instance_bit(challenge, i);
                let fix = frames[2 * i + b as usize];
                let out = rs[i].xor(&fix);
                let (bit, value) = (out.get(0), out.slice(1, self.n));
                if b {
                    Answer::Equation { c: bit, d: value }
                } else {
                    Answer::Preimage { bit, value }
                }
            })
            .collect();
        Ok(AnswerVector { answers })
    }
}

impl CanonicalAdversary for TeleportAttack {
    fn name(&self) -> &str {
        "teleport"
    }

    fn class(&self) -> AdversaryClass {
        AdversaryClass::RL(self.budget)
    }

    fn budget(&self) -> EntanglementBudget {
        EntanglementBudget::new(self.budget)
    }

    fn setup(&self, _: StageSeed) -> Result<Setup, ProtocolError> {
        let mut memory = QuantumMemory::new();
        for i in 0..self.k {
            for j in 0..=self.n {
                let (l, r) = (left_half(i, j), right_half(i, j));
                memory.insert(make_named_epr_pairs(1, &l, &r)?, &[(&l, LEFT), (&r, RIGHT)])?;
            }
        }
        Ok(Setup {
            memory,
            tape: Vec::new(),
        })
    }

    fn on_key(&self, ctx: &Context, view: &ScopedView, key: &KeyMaterial, _: &[u8]) -> Result<LeftStep, ProtocolError> {
        check_shape(key, self.n, self.k)?;
        let mut rng = ctx.seed.rng(Stage::U1);
        let mut ys = Vec::with_capacity(self.k);
        let mut frames = Vec::with_capacity(2 * self.k);
        for (i, sampler) in key.samplers.iter().enumerate() {
            let (y, mut state) = sampler.obligate(&mut rng);
            ys.push(y);
            state.rename_register(BIT_REGISTER, &source_register(i, 0))?;
            let names: Vec<String> = (1..=self.n).map(|j| source_register(i, j)).collect();
            let parts: Vec<(&str, usize)> = names.iter().map(|s| (s.as_str(), 1)).collect();
            state.split_register(PREIMAGE_REGISTER, &parts)?;
            view.insert(state)?;
            let mut x = Vec::with_capacity(self.n + 1);
            let mut z = Vec::with_capacity(self.n + 1);
            for j in 0..=self.n {
                let (k0, k1) = view.teleport(&source_register(i, j), &left_half(i, j), &mut rng)?;
                x.push(k0.get(0));
                z.push(k1.get(0));
            }
            frames.push(Bits::from_bools(&x));
            frames.push(Bits::from_bools(&z));
        }
        let y = Obligation { ys };
        let frames = encode_bits(&frames);
        Ok(LeftStep {
            to_right: frame(&[&y.encode(), &frames]),
            keep: frames,
            y0: y,
        })
    }

    fn on_challenge(&self, ctx: &Context, view: &ScopedView, challenge: &[u8], _: &[u8]) -> Result<RightStep, ProtocolError> {
        let ch = challenge_of(challenge)?;
        let mut rng = ctx.seed.rng(Stage::U2);
        let mut rs = Vec::with_capacity(self.k);
        for i in 0..self.k {
            let basis = Basis::from_bit(instance_bit(&ch, i));
            let mut r = Vec::with_capacity(self.n + 1);
            for j in 0..=self.n {
                r.push(view.measure(&right_half(i, j), basis, &mut rng)?.outcome.get(0));
            }
            rs.push(Bits::from_bools(&r));
        }
        let msg = frame(&[challenge, &encode_bits(&rs)]);
        Ok(RightStep {
            to_left: msg.clone(),
            keep: msg,
        })
    }

    fn right_output(
        &self,
        _: &Context,
        _: &ScopedView,
        from_left: &[u8],
        keep: &[u8],
        _: &[u8],
    ) -> Result<(Obligation, AnswerVector), ProtocolError> {
        let [y, frames] = unframe(from_left)?[..] else {
            return Err(ProtocolError::Malformed("teleport message"));
        };
        let [ch, rs] = unframe(keep)?[..] else {
            return Err(ProtocolError::Malformed("teleport message"));
        };
        let answers = self.answers(&challenge_of(ch)?, &decode_bits(rs)?, &decode_bits(frames)?)?;
        Ok((Obligation::decode(y)?, answers))
    }

    fn left_output(
        &self,
        _: &Context,
        _: &ScopedView,
        from_right: &[u8],
        keep: &[u8],
        _: &[u8],
    ) -> Result<AnswerVector, ProtocolError> {
        let [ch, rs] = unframe(from_right)?[..] else {
            return Err(ProtocolError::Malformed("teleport message"));
        };
        self.answers(&challenge_of(ch)?, &decode_bits(rs)?, &decode_bits(keep)?)
    }
}

/// Whether the two halves of a classical-forwarding attack run the prover
/// on the same tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeSharing {
    Shared,
    /// Each side draws its own tape; the halves then disagree.
    Independent,
}

/// Both adversaries run the same classical prover locally. A0 forwards the
/// key to A1 and A1 forwards the challenge to A0, so each side has the full
/// transcript in time to answer its verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalForwardAttack<P> {
    prover: P,
    sharing: TapeSharing,
}

pub fn classical_forward_attack<P: ClassicalProver>(prover: P, sharing: TapeSharing) -> ClassicalForwardAttack<P> {
    ClassicalForwardAttack { prover, sharing }
}

const LEFT_TAPE: u64 = 1;
const RIGHT_TAPE: u64 = 2;

impl<P: ClassicalProver> ClassicalForwardAttack<P> {
    fn tape(&self, ctx: &Context, shared: &[u8], side: u64) -> Result<u64, ProtocolError> {
        let shared = u64::from_le_bytes(shared.try_into().map_err(|_| ProtocolError::Malformed("tape"))?);
        Ok(match self.sharing {
            TapeSharing::Shared => shared,
            TapeSharing::Independent => derive_seed(ctx.seed.tape(), &[side]),
        })
    }

    fn resolve(&self, ctx: &Context, wire: &[u8]) -> Result<KeyMaterial, ProtocolError> {
        ctx.env.resolve(wire).ok_or(ProtocolError::Malformed("unknown key"))
    }
}

impl<P: ClassicalProver> CanonicalAdversary for ClassicalForwardAttack<P> {
    fn name(&self) -> &str {
        "classical_forward"
    }

    fn class(&self) -> AdversaryClass {
        AdversaryClass::R0
    }

    fn setup(&self, seed: StageSeed) -> Result<Setup, ProtocolError> {
        Ok(Setup {
            memory: QuantumMemory::new(),
            tape: seed.tape().to_le_bytes().to_vec(),
        })
    }

    fn on_key(&self, ctx: &Context, _: &ScopedView, key: &KeyMaterial, tape: &[u8]) -> Result<LeftStep, ProtocolError> {
        let y0 = self.prover.commit(key, self.tape(ctx, tape, LEFT_TAPE)?)?;
        Ok(LeftStep {
            y0,
            to_right: key.wire.clone(),
            keep: key.wire.clone(),
        })
    }

    fn on_challenge(&self, _: &Context, _: &ScopedView, challenge: &[u8], _: &[u8]) -> Result<RightStep, ProtocolError> {
        Ok(RightStep {
            to_left: challenge.to_vec(),
            keep: challenge.to_vec(),
        })
    }

    fn right_output(
        &self,
        ctx: &Context,
        _: &ScopedView,
        from_left: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<(Obligation, AnswerVector), ProtocolError> {
        let key = self.resolve(ctx, from_left)?;
        let challenge = ctx.env.challenge_for(&key, keep)?;
        let tape = self.tape(ctx, tape, RIGHT_TAPE)?;
        Ok((self.prover.commit(&key, tape)?, self.prover.respond(&key, &challenge, tape)?))
    }

    fn left_output(
        &self,
        ctx: &Context,
        _: &ScopedView,
        from_right: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<AnswerVector, ProtocolError> {
        let key = self.resolve(ctx, keep)?;
        let challenge = ctx.env.challenge_for(&key, from_right)?;
        self.prover.respond(&key, &challenge, self.tape(ctx, tape, LEFT_TAPE)?)
    }
}
