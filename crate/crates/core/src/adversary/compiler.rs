//! Turns an adversary with a classical right-hand tape into one whose U2
//! only forwards the challenge.
//!
//! The compiled U1 runs the original U1, then the original U2 once for
//! every possible challenge, on a copy of A1's (purely classical) inputs.
//! It sends A1 the table of U2's local results and keeps the table of U2's
//! messages to A0. Once the real challenge is known, U3 and U4 pick the
//! matching row and run the original handlers on it.

use super::{
    frame, unframe, AdversaryClass, AdversaryError, CanonicalAdversary, Context, LeftStep, RightStep, Setup,
    StageSeed, RIGHT,
};
use crate::bits::Bits;
use crate::protocol::{KeyMaterial, Payload, ProtocolError};
use crate::puzzle::{AnswerVector, Challenge, Obligation};
use crate::qsim::{QuantumMemory, ScopedView};

/// Largest challenge width the compiler enumerates.
pub const MAX_FORWARD_K: usize = 8;

#[derive(Debug, Clone)]
pub struct ForwardingCompiled<A> {
    inner: A,
    name: String,
}

pub fn forwarding_compiler<A: CanonicalAdversary>(adv: A) -> Result<ForwardingCompiled<A>, AdversaryError> {
    if adv.budget().qubits > 0 || matches!(adv.class(), AdversaryClass::RL(_)) {
        return Err(AdversaryError::NotClassicalTape);
    }
    Ok(ForwardingCompiled {
        name: format!("forward_compiled_{}", adv.name()),
        inner: adv,
    })
}

impl<A> ForwardingCompiled<A> {
    pub fn inner(&self) -> &A {
        &self.inner
    }
}

fn challenge_index(payload: &[u8]) -> Result<usize, ProtocolError> {
    match Payload::decode(payload)? {
        Payload::Challenge(c) => Ok(c.bits.value() as usize),
        _ => Err(ProtocolError::Malformed("expected a challenge message")),
    }
}

fn row<'b>(table: &'b [u8], payload: &[u8]) -> Result<&'b [u8], ProtocolError> {
    let rows = unframe(table)?;
    rows.get(challenge_index(payload)?)
        .copied()
        .ok_or(ProtocolError::Malformed("challenge outside the table"))
}

impl<A: CanonicalAdversary> CanonicalAdversary for ForwardingCompiled<A> {
    fn name(&self) -> &str {
        &self.name
    }

    fn class(&self) -> AdversaryClass {
        AdversaryClass::RF
    }

    fn setup(&self, seed: StageSeed) -> Result<Setup, ProtocolError> {
        let setup = self.inner.setup(seed)?;
        if !setup.memory.registers_of(RIGHT).is_empty() {
            return Err(AdversaryError::NotClassicalTape.into());
        }
        Ok(setup)
    }

    fn on_key(&self, ctx: &Context, view: &ScopedView, key: &KeyMaterial, tape: &[u8]) -> Result<LeftStep, ProtocolError> {
        if key.nonce.is_some() {
            return Err(ProtocolError::Malformed("forwarding needs an enumerable challenge"));
        }
        let width = key.puzzle.challenge_width();
        if width > MAX_FORWARD_K {
            return Err(AdversaryError::KTooLarge(width).into());
        }
        let step = self.inner.on_key(ctx, view, key, tape)?;
        let right_view = ScopedView::new(QuantumMemory::new().into_shared(), RIGHT);
        let mut to_left = Vec::with_capacity(1 << width);
        let mut right_keep = Vec::with_capacity(1 << width);
        for c in 0..1u64 << width {
            let payload = Payload::Challenge(Challenge::new(Bits::new(width, c))).encode();
            let copy = self.inner.on_challenge(ctx, &right_view, &payload, tape)?;
            to_left.push(copy.to_left);
            right_keep.push(copy.keep);
        }
        let table = |rows: &[Vec<u8>]| frame(&rows.iter().map(Vec::as_slice).collect::<Vec<_>>());
        Ok(LeftStep {
            y0: step.y0,
            to_right: frame(&[&step.to_right, &table(&right_keep)]),
            keep: frame(&[&step.keep, &table(&to_left)]),
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
        view: &ScopedView,
        from_left: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<(Obligation, AnswerVector), ProtocolError> {
        let [inner_msg, table] = unframe(from_left)?[..] else {
            return Err(ProtocolError::Malformed("compiled message"));
        };
        self.inner.right_output(ctx, view, inner_msg, row(table, keep)?, tape)
    }

    fn left_output(
        &self,
        ctx: &Context,
        view: &ScopedView,
        from_right: &[u8],
        keep: &[u8],
        tape: &[u8],
    ) -> Result<AnswerVector, ProtocolError> {
        let [inner_keep, table] = unframe(keep)?[..] else {
            return Err(ProtocolError::Malformed("compiled message"));
        };
        self.inner.left_output(ctx, view, row(table, from_right)?, inner_keep, tape)
    }
}
