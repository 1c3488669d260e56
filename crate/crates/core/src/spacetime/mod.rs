//! One-dimensional stations, light-speed message timing and the
//! deterministic event loop that orders every protocol event.

mod knowledge;
mod quantity;
mod scheduler;
mod transcript;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitchain::BitChain;

pub use knowledge::earliest_knowledge_time;
pub use quantity::{Exact, Meters, QuantityError, Seconds, Speed};
pub use scheduler::{run_schedule, Handler, HandlerError, InitialEvent, Outbox, Stimulus};
pub use transcript::{EventRecord, Transcript, TranscriptEntry};

#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("unknown station {0}")]
    UnknownStation(StationId),
    #[error("negative time {0}")]
    NegativeTime(Seconds),
    #[error("{station} tried to act at t={attempted} while handling t={now}")]
    CausalityViolation {
        station: StationId,
        now: Seconds,
        attempted: Seconds,
    },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Quantity(#[from] QuantityError),
    #[error("handler at {station} failed: {source}")]
    Handler {
        station: StationId,
        #[source]
        source: HandlerError,
    },
    #[error("event budget of {0} exhausted")]
    EventBudget(usize),
    #[error("the committed bit is never determined by the observers' view")]
    NeverKnown,
    #[error("transcript audit failed: {0}")]
    Audit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StationId {
    A1,
    A2,
    B1,
    B2,
    /// Bob's hidden interception station.
    B3,
}

impl StationId {
    pub const ALL: [StationId; 5] = [
        StationId::A1,
        StationId::A2,
        StationId::B1,
        StationId::B2,
        StationId::B3,
    ];

    pub fn is_alice(self) -> bool {
        matches!(self, StationId::A1 | StationId::A2)
    }

    pub fn is_bob(self) -> bool {
        !self.is_alice()
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for StationId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StationId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown station {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub position: Meters,
    pub time: Seconds,
}

impl SpacetimePoint {
    pub fn new(position: Meters, time: Seconds) -> Self {
        SpacetimePoint { position, time }
    }
}

/// True iff no signal at speed `c` or slower connects the two events.
/// Lightlike pairs are not spacelike.
pub fn spacelike_separated(e1: &SpacetimePoint, e2: &SpacetimePoint, c: Speed) -> bool {
    // exact in arbitrary precision; no overflow path
    let dx = (e1.position.0.to_big() - e2.position.0.to_big()).abs();
    let dt = (e1.time.0.to_big() - e2.time.0.to_big()).abs();
    dx > c.0.to_big() * dt
}

/// Station layout on a line: A1 and B1 at 0, A2 and B2 at `d`, and an
/// optional B3 anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    c: Speed,
    d: Meters,
    positions: BTreeMap<StationId, Meters>,
    processing_delay: BTreeMap<StationId, Seconds>,
}

impl Geometry {
    pub fn line(d: Meters, c: Speed) -> Result<Self, SpacetimeError> {
        if !d.0.is_positive() {
            return Err(SpacetimeError::Geometry(format!("d must be positive, got {d}")));
        }
        if !c.0.is_positive() {
            return Err(SpacetimeError::Geometry(format!("c must be positive, got {c}")));
        }
        let positions = BTreeMap::from([
            (StationId::A1, Meters::ZERO),
            (StationId::B1, Meters::ZERO),
            (StationId::A2, d),
            (StationId::B2, d),
        ]);
        Ok(Geometry {
            c,
            d,
            positions,
            processing_delay: BTreeMap::new(),
        })
    }

    pub fn with_b3(mut self, position: Meters) -> Self {
        self.positions.insert(StationId::B3, position);
        self
    }

    pub fn with_b3_midpoint(self) -> Result<Self, SpacetimeError> {
        let mid = self.d.half()?;
        Ok(self.with_b3(mid))
    }

    pub fn with_processing_delay(
        mut self,
        station: StationId,
        delay: Seconds,
    ) -> Result<Self, SpacetimeError> {
        if delay.0.is_negative() {
            return Err(SpacetimeError::NegativeTime(delay));
        }
        self.position(station)?;
        self.processing_delay.insert(station, delay);
        Ok(self)
    }

    pub fn c(&self) -> Speed {
        self.c
    }

    pub fn d(&self) -> Meters {
        self.d
    }

    pub fn has(&self, station: StationId) -> bool {
        self.positions.contains_key(&station)
    }

    pub fn stations(&self) -> impl Iterator<Item = StationId> + '_ {
        self.positions.keys().copied()
    }

    pub fn position(&self, station: StationId) -> Result<Meters, SpacetimeError> {
        self.positions
            .get(&station)
            .copied()
            .ok_or(SpacetimeError::UnknownStation(station))
    }

    pub fn processing_delay(&self, station: StationId) -> Seconds {
        self.processing_delay
            .get(&station)
            .copied()
            .unwrap_or(Seconds::ZERO)
    }

    pub fn travel_time(&self, from: StationId, to: StationId) -> Result<Seconds, SpacetimeError> {
        let distance = self.position(from)?.distance(self.position(to)?)?;
        Ok(distance.over(self.c)?)
    }

    /// Signal time between the two far ends, `d/c`.
    pub fn span_time(&self) -> Result<Seconds, SpacetimeError> {
        Ok(self.d.over(self.c)?)
    }
}

/// Which protocol step a message belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepTag {
    /// A pair of distinct random chains issued by B1 or B2.
    Challenge,
    /// The one-time-pad encryption returned by A1 or A2.
    Commitment,
    /// The pair of XOR cross values exchanged between Bob's stations.
    Cross,
    /// The encryption key, relayed in the subordinate variant.
    Key,
    /// B1's challenge and commitment, forwarded to B3.
    Evidence,
}

impl fmt::Display for StepTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepTag::Challenge => "challenge",
            StepTag::Commitment => "commitment",
            StepTag::Cross => "cross",
            StepTag::Key => "key",
            StepTag::Evidence => "evidence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub tag: StepTag,
    pub chains: Vec<BitChain>,
}

impl Payload {
    pub fn new(tag: StepTag, chains: Vec<BitChain>) -> Self {
        Payload { tag, chains }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: StationId,
    pub receiver: StationId,
    pub payload: Payload,
    pub send_time: Seconds,
    pub arrival_time: Seconds,
}

/// Stamps a message with its light-speed arrival time.
pub fn deliver(
    payload: Payload,
    sender: StationId,
    receiver: StationId,
    send_time: Seconds,
    geometry: &Geometry,
) -> Result<Message, SpacetimeError> {
    if send_time.0.is_negative() {
        return Err(SpacetimeError::NegativeTime(send_time));
    }
    let arrival_time = send_time.add(geometry.travel_time(sender, receiver)?)?;
    Ok(Message {
        sender,
        receiver,
        payload,
        send_time,
        arrival_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: &str) -> Seconds {
        s.parse().unwrap()
    }

    fn geometry() -> Geometry {
        Geometry::line("3e8".parse().unwrap(), "3e8".parse().unwrap()).unwrap()
    }

    fn empty() -> Payload {
        Payload::new(StepTag::Cross, vec![])
    }

    #[test]
    fn delivery_across_the_line_takes_d_over_c() {
        let g = geometry();
        let msg = deliver(empty(), StationId::B1, StationId::B2, Seconds::ZERO, &g).unwrap();
        assert_eq!(msg.arrival_time, secs("1"));
    }

    #[test]
    fn co_located_delivery_is_instant() {
        let g = geometry();
        let msg = deliver(empty(), StationId::A1, StationId::B1, Seconds::ZERO, &g).unwrap();
        assert_eq!(msg.arrival_time, Seconds::ZERO);
    }

    #[test]
    fn midpoint_delivery_takes_half() {
        let g = geometry().with_b3_midpoint().unwrap();
        let msg = deliver(empty(), StationId::B1, StationId::B3, Seconds::ZERO, &g).unwrap();
        assert_eq!(msg.arrival_time, secs("1/2"));
    }

    #[test]
    fn delivery_errors() {
        let g = geometry();
        assert!(matches!(
            deliver(empty(), StationId::B1, StationId::B3, Seconds::ZERO, &g),
            Err(SpacetimeError::UnknownStation(StationId::B3))
        ));
        assert!(matches!(
            deliver(empty(), StationId::B1, StationId::B2, secs("-1"), &g),
            Err(SpacetimeError::NegativeTime(_))
        ));
    }

    #[test]
    fn geometry_rejects_degenerate_parameters() {
        assert!(Geometry::line(Meters::ZERO, Speed::LIGHT).is_err());
        assert!(Geometry::line("1".parse().unwrap(), Speed::ZERO).is_err());
        assert!(geometry()
            .with_processing_delay(StationId::B1, secs("-1"))
            .is_err());
    }

    #[test]
    fn spacelike_predicate() {
        let c: Speed = "3e8".parse().unwrap();
        let d: Meters = "3e8".parse().unwrap();
        let origin = SpacetimePoint::new(Meters::ZERO, Seconds::ZERO);
        assert!(spacelike_separated(&origin, &SpacetimePoint::new(d, Seconds::ZERO), c));
        assert!(!spacelike_separated(&origin, &SpacetimePoint::new(Meters::ZERO, secs("1")), c));
        // lightlike boundary
        assert!(!spacelike_separated(&origin, &SpacetimePoint::new(d, secs("1")), c));
        assert!(spacelike_separated(&origin, &SpacetimePoint::new(d, secs("999999/1000000")), c));
    }

    #[test]
    fn station_names_parse() {
        assert_eq!("b3".parse::<StationId>().unwrap(), StationId::B3);
        assert!("C1".parse::<StationId>().is_err());
    }
}
