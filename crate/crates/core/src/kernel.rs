//! Deterministic discrete-event machinery: simulation time, the event queue
//! and per-agent random streams.
//!
//! Events are totally ordered by `(time, seq)` where `seq` is the insertion
//! counter, so simultaneous events dispatch in the order they were scheduled.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::book::AgentId;

/// Nanoseconds since session start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const NANOS_PER_SEC: u64 = 1_000_000_000;

    pub fn from_secs(secs: u64) -> Self {
        SimTime(secs * Self::NANOS_PER_SEC)
    }

    /// Rounds to the nearest nanosecond; negative input saturates to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        SimTime((secs * Self::NANOS_PER_SEC as f64).round().max(0.0) as u64)
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::NANOS_PER_SEC as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Wakeup,
    /// Stops the dispatch loop when reached.
    SessionEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub agent: AgentId,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (SimTime, u64) {
        (self.time, self.seq)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("event at t={event} is before the current time t={now}")]
    PastEvent { event: SimTime, now: SimTime },
    #[error("arrival rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("oracle-driven agents need an oracle series")]
    MissingOracle,
    #[error("DAR(p) market agents need darp parameters")]
    MissingDarpParams,
}

/// Min-queue of events keyed by `(time, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    now: SimTime,
    next_seq: u64,
    dispatched: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Enqueues an event and returns its sequence number.
    pub fn schedule(&mut self, time: SimTime, agent: AgentId, kind: EventKind) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::PastEvent {
                event: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            time,
            seq,
            agent,
            kind,
        }));
        Ok(seq)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|r| &r.0)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<Event> {
        let Reverse(ev) = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        self.dispatched += 1;
        Some(ev)
    }

    /// Moves the clock forward without dispatching anything.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}

/// Exponential inter-arrival time for a Poisson process of `rate` events per
/// second, rounded to the nanosecond and never shorter than 1 ns.
pub fn next_poisson_wakeup<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<SimTime, SimError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(SimError::InvalidRate(rate));
    }
    let exp = Exp::new(rate).map_err(|_| SimError::InvalidRate(rate))?;
    let secs: f64 = exp.sample(rng);
    Ok(SimTime(SimTime::from_secs_f64(secs).0.max(1)))
}

pub type AgentRng = ChaCha8Rng;

/// Independent generator for one agent: the master seed selects the key and
/// the agent id selects the ChaCha stream.
pub fn agent_rng(master_seed: u64, agent: AgentId) -> AgentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(agent.0 as u64);
    rng
}

/// Stream for simulation-level draws that belong to no agent.
pub fn aux_rng(master_seed: u64, stream: u64) -> AgentRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((1u64 << 40) + stream);
    rng
}
