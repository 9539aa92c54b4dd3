//! Discrete-event engine: virtual clock and a pending set ordered by
//! `(time, seq)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    ExternalArrival { stream: usize },
    /// `epoch` identifies the occupancy of the server when the completion
    /// was scheduled; a preemption bumps it and orphans the event.
    ServiceCompletion { node: usize, server: usize, epoch: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn is_arrival(&self) -> bool {
        matches!(self.kind, EventKind::ExternalArrival { .. })
    }
}

// BinaryHeap is a max-heap; order so the smallest (time, seq) is greatest.
#[derive(Debug)]
struct Pending(Event);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once this many external arrivals have been dispatched.
    Arrivals(u64),
    /// Never dispatch an event later than this time.
    Horizon(f64),
}

pub trait EventHandler {
    fn handle(&mut self, event: Event, engine: &mut Engine) -> Result<()>;
}

impl<F> EventHandler for F
where
    F: FnMut(Event, &mut Engine) -> Result<()>,
{
    fn handle(&mut self, event: Event, engine: &mut Engine) -> Result<()> {
        self(event, engine)
    }
}

#[derive(Debug, Default)]
pub struct Engine {
    clock: f64,
    pending: BinaryHeap<Pending>,
    next_seq: u64,
    dispatched: u64,
    arrivals_dispatched: u64,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn arrivals_dispatched(&self) -> u64 {
        self.arrivals_dispatched
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Insert an event and return its sequence number. Scheduling before the
    /// current clock is a simulator bug and is reported as an error.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<u64> {
        if !(time >= self.clock) {
            return Err(Error::EventInPast {
                time,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.push(Pending(Event { time, seq, kind }));
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.pending.peek().map(|p| p.0.time)
    }

    /// Pop the minimum `(time, seq)` event and advance the clock to it.
    pub fn next_event(&mut self) -> Option<Event> {
        let Pending(event) = self.pending.pop()?;
        self.clock = event.time;
        self.dispatched += 1;
        if event.is_arrival() {
            self.arrivals_dispatched += 1;
        }
        Some(event)
    }

    /// Dispatch events until `stop` fires or nothing is pending. Arrival
    /// limits count arrivals dispatched during this call.
    pub fn run<H: EventHandler + ?Sized>(&mut self, handler: &mut H, stop: StopRule) -> Result<()> {
        let arrivals_at_start = self.arrivals_dispatched;
        loop {
            match stop {
                StopRule::Arrivals(limit) => {
                    if self.arrivals_dispatched - arrivals_at_start >= limit {
                        return Ok(());
                    }
                }
                StopRule::Horizon(horizon) => match self.peek_time() {
                    Some(t) if t > horizon => return Ok(()),
                    _ => {}
                },
            }
            let Some(event) = self.next_event() else {
                return Ok(());
            };
            handler.handle(event, self)?;
        }
    }
}
