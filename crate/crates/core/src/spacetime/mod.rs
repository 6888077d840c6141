//! One-dimensional discrete-event simulator.
//!
//! Parties sit at fixed rational positions. Every message travels at speed 1,
//! so a message emitted at `(t, p)` reaches a party at `q` at exactly
//! `t + |q - p|`. Handlers run instantaneously at delivery or alarm time and
//! their emissions are stamped with that time. Events are processed in
//! `(time, sequence)` order, which makes runs reproducible.

mod coordinate;

pub use coordinate::Coordinate;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpacetimeError {
    #[error("rational arithmetic overflowed")]
    Overflow,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse {0:?} as a rational")]
    Parse(String),
    #[error("parties cannot be added once the simulation has run")]
    SimulationStarted,
    #[error("horizon must be nonnegative")]
    NegativeHorizon,
    #[error("no party {0}")]
    UnknownParty(PartyId),
    #[error("alarm at {at} is earlier than the current time {now}")]
    AlarmInPast { at: Coordinate, now: Coordinate },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PartyId(pub usize);

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Every party that can see the channel.
    Broadcast,
    /// Only the given party.
    Directed(PartyId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Channel {
    Public,
    /// Visible to members only.
    Private(BTreeSet<PartyId>),
}

impl Channel {
    pub fn private(members: impl IntoIterator<Item = PartyId>) -> Self {
        Channel::Private(members.into_iter().collect())
    }

    fn admits(&self, party: PartyId) -> bool {
        match self {
            Channel::Public => true,
            Channel::Private(members) => members.contains(&party),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacetimeMessage {
    pub payload: Vec<u8>,
    pub sender: PartyId,
    pub emit_time: Coordinate,
    pub emit_pos: Coordinate,
    pub mode: Mode,
    pub channel: Channel,
}

/// What a handler asks the simulator to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send {
        payload: Vec<u8>,
        mode: Mode,
        channel: Channel,
    },
    /// Wake the same party at an absolute time with a tag.
    Alarm { at: Coordinate, tag: u64 },
}

impl Action {
    pub fn broadcast(payload: Vec<u8>) -> Self {
        Action::Send {
            payload,
            mode: Mode::Broadcast,
            channel: Channel::Public,
        }
    }

    pub fn directed(payload: Vec<u8>, to: PartyId) -> Self {
        Action::Send {
            payload,
            mode: Mode::Directed(to),
            channel: Channel::Public,
        }
    }

    pub fn private(payload: Vec<u8>, to: PartyId, members: impl IntoIterator<Item = PartyId>) -> Self {
        Action::Send {
            payload,
            mode: Mode::Directed(to),
            channel: Channel::private(members),
        }
    }
}

pub trait PartyBehavior {
    fn on_receive(&mut self, time: Coordinate, message: &SpacetimeMessage) -> Vec<Action>;

    fn on_alarm(&mut self, _time: Coordinate, _tag: u64) -> Vec<Action> {
        Vec::new()
    }
}

/// A party that never reacts; used for passive observers.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl PartyBehavior for Silent {
    fn on_receive(&mut self, _: Coordinate, _: &SpacetimeMessage) -> Vec<Action> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Emit,
    Deliver,
    Alarm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Coordinate,
    pub kind: EventKind,
    pub party: PartyId,
    /// Empty for alarms.
    pub payload: Vec<u8>,
    pub sender: Option<PartyId>,
}

impl TraceEvent {
    /// First 16 hex digits of the payload's SHA-256.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(&self.payload);
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    time: Coordinate,
    kind: EventKind,
    party: PartyId,
    digest: &'a str,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Messages delivered to `party`, in delivery order.
    pub fn deliveries_to(&self, party: PartyId) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(move |e| e.kind == EventKind::Deliver && e.party == party)
    }

    pub fn write_json_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            let digest = e.digest();
            let line = TraceLine {
                time: e.time,
                kind: e.kind,
                party: e.party,
                digest: &digest,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_json_lines(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// A time window with exact comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deadline {
    /// `t < bound`.
    Before(Coordinate),
    /// `t = bound`.
    At(Coordinate),
    /// `t <= bound`.
    AtOrBefore(Coordinate),
}

impl Deadline {
    pub fn admits(&self, t: Coordinate) -> bool {
        match self {
            Deadline::Before(b) => t < *b,
            Deadline::At(b) => t == *b,
            Deadline::AtOrBefore(b) => t <= *b,
        }
    }
}

/// Whether some delivery to `party` satisfies `predicate(payload, time)`.
pub fn assert_deadline(trace: &Trace, party: PartyId, predicate: impl Fn(&[u8], Coordinate) -> bool) -> bool {
    trace.deliveries_to(party).any(|e| predicate(&e.payload, e.time))
}

enum Pending {
    Deliver { to: PartyId, message: SpacetimeMessage },
    Alarm { party: PartyId, tag: u64 },
}

struct Scheduled {
    time: Coordinate,
    seq: u64,
    pending: Pending,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Party<'a> {
    position: Coordinate,
    behavior: Box<dyn PartyBehavior + 'a>,
}

pub struct Simulation<'a> {
    parties: Vec<Party<'a>>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: Coordinate,
    started: bool,
    trace: Trace,
}

impl Default for Simulation<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> Simulation<'a> {
    pub fn new() -> Self {
        Self {
            parties: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            now: Coordinate::ZERO,
            started: false,
            trace: Trace::default(),
        }
    }

    /// The id the next [`add_party`](Self::add_party) call will return.
    pub fn next_party_id(&self) -> PartyId {
        PartyId(self.parties.len())
    }

    pub fn add_party(
        &mut self,
        position: Coordinate,
        behavior: impl PartyBehavior + 'a,
    ) -> Result<PartyId, SpacetimeError> {
        if self.started {
            return Err(SpacetimeError::SimulationStarted);
        }
        self.parties.push(Party {
            position,
            behavior: Box::new(behavior),
        });
        Ok(PartyId(self.parties.len() - 1))
    }

    pub fn position(&self, party: PartyId) -> Option<Coordinate> {
        self.parties.get(party.0).map(|p| p.position)
    }

    pub fn schedule_alarm(&mut self, party: PartyId, at: Coordinate, tag: u64) -> Result<(), SpacetimeError> {
        if party.0 >= self.parties.len() {
            return Err(SpacetimeError::UnknownParty(party));
        }
        if at < self.now {
            return Err(SpacetimeError::AlarmInPast { at, now: self.now });
        }
        self.push(at, Pending::Alarm { party, tag });
        Ok(())
    }

    fn push(&mut self, time: Coordinate, pending: Pending) {
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            pending,
        });
        self.seq += 1;
    }

    fn emit(&mut self, from: PartyId, actions: Vec<Action>) -> Result<(), SpacetimeError> {
        let pos = self.parties[from.0].position;
        for action in actions {
            match action {
                Action::Alarm { at, tag } => self.schedule_alarm(from, at, tag)?,
                Action::Send { payload, mode, channel } => {
                    if let Mode::Directed(to) = mode {
                        if to.0 >= self.parties.len() {
                            return Err(SpacetimeError::UnknownParty(to));
                        }
                    }
                    let message = SpacetimeMessage {
                        payload,
                        sender: from,
                        emit_time: self.now,
                        emit_pos: pos,
                        mode,
                        channel,
                    };
                    self.trace.events.push(TraceEvent {
                        time: self.now,
                        kind: EventKind::Emit,
                        party: from,
                        payload: message.payload.clone(),
                        sender: Some(from),
                    });
                    for idx in 0..self.parties.len() {
                        let to = PartyId(idx);
                        let targeted = match message.mode {
                            Mode::Broadcast => true,
                            Mode::Directed(t) => t == to,
                        };
                        if !targeted || !message.channel.admits(to) {
                            continue;
                        }
                        let arrival = self
                            .now
                            .checked_add(&self.parties[idx].position.distance(&pos)?)?;
                        self.push(
                            arrival,
                            Pending::Deliver {
                                to,
                                message: message.clone(),
                            },
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// Processes every event at or before `until` and returns the trace so
    /// far. Later events stay queued.
    pub fn run(&mut self, until: Coordinate) -> Result<Trace, SpacetimeError> {
        if until.is_negative() {
            return Err(SpacetimeError::NegativeHorizon);
        }
        self.started = true;
        while let Some(next) = self.queue.peek() {
            if next.time > until {
                break;
            }
            let event = self.queue.pop().expect("peeked");
            self.now = event.time;
            match event.pending {
                Pending::Deliver { to, message } => {
                    self.trace.events.push(TraceEvent {
                        time: self.now,
                        kind: EventKind::Deliver,
                        party: to,
                        payload: message.payload.clone(),
                        sender: Some(message.sender),
                    });
                    let actions = self.parties[to.0].behavior.on_receive(self.now, &message);
                    self.emit(to, actions)?;
                }
                Pending::Alarm { party, tag } => {
                    self.trace.events.push(TraceEvent {
                        time: self.now,
                        kind: EventKind::Alarm,
                        party,
                        payload: Vec::new(),
                        sender: None,
                    });
                    let actions = self.parties[party.0].behavior.on_alarm(self.now, tag);
                    self.emit(party, actions)?;
                }
            }
        }
        Ok(self.trace.clone())
    }
}
