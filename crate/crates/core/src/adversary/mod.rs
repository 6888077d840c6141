//! Two-adversary attacks on the position verification protocol.
//!
//! Every attack has the canonical shape: A0 at position 0 and A1 at
//! position 3, sharing a state prepared before the protocol starts.
//!
//! | handler | where | when | input                | output                  |
//! |---------|-------|------|----------------------|-------------------------|
//! | U0      | both  | -    | -                    | shared state and tape   |
//! | U1      | A0    | 0    | key message          | `y0` to V0, `M` to A1   |
//! | U2      | A1    | 1    | challenge message    | `M'` to A0              |
//! | U3      | A1    | 3    | `M`                  | `y1` and `ans1` to V1   |
//! | U4      | A0    | 4    | `M'`                 | `ans0` to V0            |
//!
//! A0 only ever sees registers it holds, and likewise A1. Each handler
//! draws randomness from its own stage stream, so a handler run early by
//! the forwarding compiler makes exactly the draws it would have made on
//! time.

mod attacks;
mod compiler;

pub use attacks::{
    attack_by_name, classical_forward_attack, guessing_attack, teleport_attack, teleport_attack_with_budget,
    ClassicalForwardAttack, GuessingAttack, TapeSharing, TeleportAttack, ATTACK_NAMES,
};
pub use compiler::{forwarding_compiler, ForwardingCompiled, MAX_FORWARD_K};

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::protocol::{
    answers_message, obligation_message, ErrorSlot, KeyMaterial, Payload, ProtocolError, TrialEnv, TAG_CHALLENGE,
    TAG_KEY, TAG_NONCE, TAG_PRIVATE,
};
use crate::puzzle::{AnswerVector, Obligation};
use crate::qsim::{Holder, QuantumMemory, ScopedView};
use crate::rng::{derived_rng, stream, TrialRng};
use crate::spacetime::{Action, Coordinate, PartyBehavior, PartyId, Simulation, SpacetimeMessage};

pub const LEFT: Holder = "A0";
pub const RIGHT: Holder = "A1";
pub const LEFT_POSITION: i64 = 0;
pub const RIGHT_POSITION: i64 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("the right adversary holds quantum registers; only classical tapes can be forwarded")]
    NotClassicalTape,
    #[error("challenge width {0} is too large to enumerate (at most {MAX_FORWARD_K})")]
    KTooLarge(usize),
    #[error("attack needs {needed} EPR qubits but the budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("attack needs a {0}-qubit state, above the simulator cap")]
    CapacityExceeded(usize),
    #[error("register {0:?} is held by neither adversary")]
    UnassignedRegister(String),
    #[error("class {class} does not allow {shared} shared qubits")]
    ClassViolation { class: AdversaryClass, shared: usize },
}

/// Adversary classes, from most to least restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversaryClass {
    /// No pre-shared entanglement.
    R0,
    /// U2 only forwards the challenge.
    RF,
    /// At most `L` qubits of pre-shared entanglement.
    RL(usize),
    /// Any efficient strategy.
    RP,
}

impl fmt::Display for AdversaryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryClass::R0 => write!(f, "R0"),
            AdversaryClass::RF => write!(f, "RF"),
            AdversaryClass::RL(l) => write!(f, "RL({l})"),
            AdversaryClass::RP => write!(f, "RP"),
        }
    }
}

/// Pre-shared entanglement allowance, counted in EPR qubits on A1's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EntanglementBudget {
    pub qubits: usize,
}

impl EntanglementBudget {
    pub const NONE: EntanglementBudget = EntanglementBudget { qubits: 0 };

    pub fn new(qubits: usize) -> Self {
        Self { qubits }
    }

    pub fn check(&self, needed: usize) -> Result<(), AdversaryError> {
        if needed > self.qubits {
            Err(AdversaryError::BudgetExceeded {
                needed,
                budget: self.qubits,
            })
        } else {
            Ok(())
        }
    }
}

/// Handler stages. Each has its own random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Setup = 0,
    U1 = 1,
    U2 = 2,
    U3 = 3,
    U4 = 4,
}

/// The participant seed of a trial, from which stage streams derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeed(pub u64);

impl StageSeed {
    pub fn rng(&self, stage: Stage) -> TrialRng {
        derived_rng(self.0, &[stream::STAGE, stage as u64])
    }

    /// Same derivation as [`crate::protocol::classical_tape`].
    pub fn tape(&self) -> u64 {
        crate::protocol::classical_tape(self.0)
    }
}

/// What a handler can see besides its inputs.
pub struct Context<'a> {
    pub env: &'a TrialEnv,
    pub seed: StageSeed,
}

/// Output of U0: registers held by [`LEFT`] or [`RIGHT`] plus a classical
/// tape both adversaries get a copy of.
#[derive(Debug, Default)]
pub struct Setup {
    pub memory: QuantumMemory,
    pub tape: Vec<u8>,
}

/// Output of U1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftStep {
    pub y0: Obligation,
    pub to_right: Vec<u8>,
    pub keep: Vec<u8>,
}

/// Output of U2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RightStep {
    pub to_left: Vec<u8>,
    pub keep: Vec<u8>,
}

pub trait CanonicalAdversary: Send + Sync {
    fn name(&self) -> &str;
    fn class(&self) -> AdversaryClass;

    fn budget(&self) -> EntanglementBudget {
        EntanglementBudget::NONE
    }

    /// U0.
    fn setup(&self, seed: StageSeed) -> Result<Setup, ProtocolError>;

    /// U1, at A0 on the key message.
    fn on_key(&self, ctx: &Context, view: &ScopedView, key: &KeyMaterial, tape: &[u8]) -> Result<LeftStep, ProtocolError>;

    /// U2, at A1 on V1's message.
    fn on_challenge(&self, ctx: &Context, view: &ScopedView, challenge: &[u8], tape: &[u8]) -> Result<RightStep, ProtocolError>;

    /// U3, at A1 on `M`.
    fn right_output(
        &self,
        ctx: &Context,
        view: &ScopedView,
        from_left: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<(Obligation, AnswerVector), ProtocolError>;

    /// U4, at A0 on `M'`.
    fn left_output(
        &self,
        ctx: &Context,
        view: &ScopedView,
        from_right: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<AnswerVector, ProtocolError>;
}

/// Length-prefixed concatenation (`u32` LE per part).
pub fn frame(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(&(p.len() as u32).to_le_bytes());
        out.extend_from_slice(p);
    }
    out
}

pub fn unframe(mut bytes: &[u8]) -> Result<Vec<&[u8]>, ProtocolError> {
    let mut parts = Vec::new();
    while !bytes.is_empty() {
        let (len, rest) = bytes
            .split_first_chunk::<4>()
            .ok_or(ProtocolError::Malformed("frame header"))?;
        let len = u32::from_le_bytes(*len) as usize;
        if rest.len() < len {
            return Err(ProtocolError::Malformed("frame body"));
        }
        parts.push(&rest[..len]);
        bytes = &rest[len..];
    }
    Ok(parts)
}

/// Runs U0, checks it against the adversary's class and budget, and places
/// A0 and A1 in the simulation. Returns the shared memory so the caller
/// can read the EPR consumption afterwards.
pub(crate) fn install<'a>(
    sim: &mut Simulation<'a>,
    adv: &'a dyn CanonicalAdversary,
    env: &'a TrialEnv,
    seed: u64,
    v0: PartyId,
    v1: PartyId,
    errors: ErrorSlot,
) -> Result<Rc<RefCell<QuantumMemory>>, ProtocolError> {
    let seed = StageSeed(seed);
    let setup = adv.setup(seed)?;
    if let Some((name, _)) = setup.memory.assignments().find(|(_, h)| *h != LEFT && *h != RIGHT) {
        return Err(AdversaryError::UnassignedRegister(name.to_string()).into());
    }
    let shared = setup.memory.shared_qubits(LEFT, RIGHT);
    if shared > 0 && matches!(adv.class(), AdversaryClass::R0 | AdversaryClass::RF) {
        return Err(AdversaryError::ClassViolation {
            class: adv.class(),
            shared,
        }
        .into());
    }
    adv.budget().check(shared)?;
    let memory = setup.memory.into_shared();
    let a0 = sim.next_party_id();
    let a1 = PartyId(a0.0 + 1);
    sim.add_party(
        Coordinate::integer(LEFT_POSITION),
        LeftAdversary {
            adv,
            ctx: Context { env, seed },
            view: ScopedView::new(memory.clone(), LEFT),
            tape: setup.tape.clone(),
            v0,
            me: a0,
            peer: a1,
            keep: None,
            done: false,
            errors: errors.clone(),
        },
    )?;
    sim.add_party(
        Coordinate::integer(RIGHT_POSITION),
        RightAdversary {
            adv,
            ctx: Context { env, seed },
            view: ScopedView::new(memory.clone(), RIGHT),
            tape: setup.tape,
            v1,
            me: a1,
            peer: a0,
            keep: None,
            done: false,
            errors,
        },
    )?;
    Ok(memory)
}

fn private_body(message: &SpacetimeMessage) -> Option<Vec<u8>> {
    match Payload::decode(&message.payload) {
        Ok(Payload::Private(body)) => Some(body),
        _ => None,
    }
}

struct LeftAdversary<'a> {
    adv: &'a dyn CanonicalAdversary,
    ctx: Context<'a>,
    view: ScopedView,
    tape: Vec<u8>,
    v0: PartyId,
    me: PartyId,
    peer: PartyId,
    keep: Option<Vec<u8>>,
    done: bool,
    errors: ErrorSlot,
}

impl LeftAdversary<'_> {
    fn handle(&mut self, message: &SpacetimeMessage) -> Result<Vec<Action>, ProtocolError> {
        let tag = message.payload.first().copied();
        if tag == Some(TAG_KEY) && message.sender == self.v0 && self.keep.is_none() {
            let Some(key) = self.ctx.env.resolve(&message.payload) else {
                return Ok(Vec::new());
            };
            let step = self.adv.on_key(&self.ctx, &self.view, &key, &self.tape)?;
            self.keep = Some(step.keep);
            return Ok(vec![
                Action::directed(obligation_message(&step.y0), self.v0),
                Action::private(Payload::Private(step.to_right).encode(), self.peer, [self.me, self.peer]),
            ]);
        }
        if tag == Some(TAG_PRIVATE) && message.sender == self.peer && !self.done {
            let (Some(keep), Some(body)) = (&self.keep, private_body(message)) else {
                return Ok(Vec::new());
            };
            let answers = self.adv.left_output(&self.ctx, &self.view, &body, keep, &self.tape)?;
            self.done = true;
            return Ok(vec![Action::directed(answers_message(&answers), self.v0)]);
        }
        Ok(Vec::new())
    }
}

impl PartyBehavior for LeftAdversary<'_> {
    fn on_receive(&mut self, _: Coordinate, message: &SpacetimeMessage) -> Vec<Action> {
        self.handle(message).unwrap_or_else(|e| {
            self.errors.record(e);
            Vec::new()
        })
    }
}

struct RightAdversary<'a> {
    adv: &'a dyn CanonicalAdversary,
    ctx: Context<'a>,
    view: ScopedView,
    tape: Vec<u8>,
    v1: PartyId,
    me: PartyId,
    peer: PartyId,
    keep: Option<Vec<u8>>,
    done: bool,
    errors: ErrorSlot,
}

impl RightAdversary<'_> {
    fn handle(&mut self, message: &SpacetimeMessage) -> Result<Vec<Action>, ProtocolError> {
        let tag = message.payload.first().copied();
        let from_v1 = message.sender == self.v1;
        if matches!(tag, Some(TAG_CHALLENGE | TAG_NONCE)) && from_v1 && self.keep.is_none() {
            let step = self.adv.on_challenge(&self.ctx, &self.view, &message.payload, &self.tape)?;
            self.keep = Some(step.keep);
            return Ok(vec![Action::private(
                Payload::Private(step.to_left).encode(),
                self.peer,
                [self.me, self.peer],
            )]);
        }
        if tag == Some(TAG_PRIVATE) && message.sender == self.peer && !self.done {
            let (Some(keep), Some(body)) = (&self.keep, private_body(message)) else {
                return Ok(Vec::new());
            };
            let (y1, answers) = self.adv.right_output(&self.ctx, &self.view, &body, keep, &self.tape)?;
            self.done = true;
            return Ok(vec![
                Action::directed(obligation_message(&y1), self.v1),
                Action::directed(answers_message(&answers), self.v1),
            ]);
        }
        Ok(Vec::new())
    }
}

impl PartyBehavior for RightAdversary<'_> {
    fn on_receive(&mut self, _: Coordinate, message: &SpacetimeMessage) -> Vec<Action> {
        self.handle(message).unwrap_or_else(|e| {
            self.errors.record(e);
            Vec::new()
        })
    }
}
