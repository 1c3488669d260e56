//! Deterministic discrete-event loop.
//!
//! Events are popped in `(time, sequence)` order where the sequence number is
//! assigned at enqueue, so equal-time events keep their enqueue order and two
//! runs with identical inputs produce identical transcripts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{deliver, Geometry, Message, Payload, Seconds, SpacetimeError, StationId};
use super::transcript::{EventRecord, Transcript, TranscriptEntry};
use super::SpacetimePoint;

pub type HandlerError = Box<dyn std::error::Error + Send + Sync>;

const EVENT_BUDGET: usize = 1 << 20;

/// What a station is reacting to.
#[derive(Debug, Clone, Copy)]
pub enum Stimulus<'a> {
    Wake(&'a str),
    Receive(&'a Message),
}

/// Station behaviour plugged into the event loop.
pub trait Handler {
    fn handle(
        &mut self,
        station: StationId,
        stimulus: Stimulus<'_>,
        out: &mut Outbox,
    ) -> Result<(), HandlerError>;
}

/// A wake-up scheduled before the loop starts.
#[derive(Debug, Clone)]
pub struct InitialEvent {
    pub station: StationId,
    pub time: Seconds,
    pub note: String,
}

impl InitialEvent {
    pub fn wake(station: StationId, time: Seconds, note: impl Into<String>) -> Self {
        InitialEvent {
            station,
            time,
            note: note.into(),
        }
    }
}

enum Action {
    Send {
        to: StationId,
        payload: Payload,
        at: Seconds,
    },
    Wake {
        at: Seconds,
        note: String,
    },
    Note {
        at: Seconds,
        text: String,
    },
}

/// Collects what a handler wants to do; the loop validates and enqueues it.
pub struct Outbox {
    station: StationId,
    now: Seconds,
    ready: Seconds,
    actions: Vec<Action>,
}

impl Outbox {
    pub fn station(&self) -> StationId {
        self.station
    }

    pub fn now(&self) -> Seconds {
        self.now
    }

    /// `now` plus the station's processing delay.
    pub fn ready(&self) -> Seconds {
        self.ready
    }

    /// Sends once the station's processing delay has elapsed.
    pub fn send(&mut self, to: StationId, payload: Payload) {
        let at = self.ready;
        self.send_at(to, payload, at);
    }

    pub fn send_at(&mut self, to: StationId, payload: Payload, at: Seconds) {
        self.actions.push(Action::Send { to, payload, at });
    }

    pub fn wake_at(&mut self, at: Seconds, note: impl Into<String>) {
        self.actions.push(Action::Wake {
            at,
            note: note.into(),
        });
    }

    /// Records a local event (a verdict, an interception) at the ready time.
    pub fn note(&mut self, text: impl Into<String>) {
        self.actions.push(Action::Note {
            at: self.ready,
            text: text.into(),
        });
    }
}

enum Item {
    Wake { station: StationId, note: String },
    Note { station: StationId, text: String },
    Sent(Message),
    Arrival(Message),
}

struct Queued {
    time: Seconds,
    seq: u64,
    item: Item,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Queue {
    heap: BinaryHeap<Queued>,
    next_seq: u64,
}

impl Queue {
    fn push(&mut self, time: Seconds, item: Item) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Queued { time, seq, item });
    }
}

/// Runs the event loop to quiescence and returns the full transcript.
pub fn run_schedule<H: Handler + ?Sized>(
    initial: Vec<InitialEvent>,
    geometry: &Geometry,
    handler: &mut H,
) -> Result<Transcript, SpacetimeError> {
    let mut queue = Queue {
        heap: BinaryHeap::new(),
        next_seq: 0,
    };
    for event in initial {
        if event.time.0.is_negative() {
            return Err(SpacetimeError::NegativeTime(event.time));
        }
        geometry.position(event.station)?;
        queue.push(
            event.time,
            Item::Wake {
                station: event.station,
                note: event.note,
            },
        );
    }

    let mut entries = Vec::new();
    let mut processed = 0usize;
    while let Some(Queued { time, seq, item }) = queue.heap.pop() {
        processed += 1;
        if processed > EVENT_BUDGET {
            return Err(SpacetimeError::EventBudget(EVENT_BUDGET));
        }
        let (station, record, stimulus_msg) = match item {
            Item::Wake { station, note } => (station, EventRecord::Wake { note }, None),
            Item::Note { station, text } => (station, EventRecord::Note { text }, None),
            Item::Sent(msg) => (
                msg.sender,
                EventRecord::Sent {
                    to: msg.receiver,
                    arrival: msg.arrival_time,
                    payload: msg.payload,
                },
                None,
            ),
            Item::Arrival(msg) => (
                msg.receiver,
                EventRecord::Received {
                    from: msg.sender,
                    sent: msg.send_time,
                    payload: msg.payload.clone(),
                },
                Some(msg),
            ),
        };
        let point = SpacetimePoint::new(geometry.position(station)?, time);
        let wake_note = match &record {
            EventRecord::Wake { note } => Some(note.clone()),
            _ => None,
        };
        entries.push(TranscriptEntry {
            seq,
            point,
            station,
            record,
        });

        let stimulus = match (&stimulus_msg, &wake_note) {
            (Some(msg), _) => Stimulus::Receive(msg),
            (None, Some(note)) => Stimulus::Wake(note),
            (None, None) => continue,
        };
        let mut out = Outbox {
            station,
            now: time,
            ready: time.add(geometry.processing_delay(station))?,
            actions: Vec::new(),
        };
        handler
            .handle(station, stimulus, &mut out)
            .map_err(|source| SpacetimeError::Handler { station, source })?;

        for action in out.actions {
            let at = match &action {
                Action::Send { at, .. } | Action::Wake { at, .. } | Action::Note { at, .. } => *at,
            };
            if at < time {
                return Err(SpacetimeError::CausalityViolation {
                    station,
                    now: time,
                    attempted: at,
                });
            }
            match action {
                Action::Send { to, payload, at } => {
                    let msg = deliver(payload, station, to, at, geometry)?;
                    let arrival = msg.arrival_time;
                    queue.push(at, Item::Sent(msg.clone()));
                    queue.push(arrival, Item::Arrival(msg));
                }
                Action::Wake { at, note } => queue.push(at, Item::Wake { station, note }),
                Action::Note { at, text } => queue.push(at, Item::Note { station, text }),
            }
        }
    }
    Ok(Transcript::new(entries))
}
