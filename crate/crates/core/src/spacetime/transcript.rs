use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Geometry, Payload, Seconds, SpacetimeError, SpacetimePoint, StationId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventRecord {
    Wake {
        note: String,
    },
    Note {
        text: String,
    },
    Sent {
        to: StationId,
        arrival: Seconds,
        payload: Payload,
    },
    Received {
        from: StationId,
        sent: Seconds,
        payload: Payload,
    },
}

impl EventRecord {
    pub fn payload(&self) -> Option<&Payload> {
        match self {
            EventRecord::Sent { payload, .. } | EventRecord::Received { payload, .. } => {
                Some(payload)
            }
            _ => None,
        }
    }

    fn step_tag(&self) -> String {
        match self {
            EventRecord::Wake { note } => format!("wake:{note}"),
            EventRecord::Note { text } => text.clone(),
            EventRecord::Sent { to, payload, .. } => format!("send:{}>{to}", payload.tag),
            EventRecord::Received { from, payload, .. } => format!("recv:{}<{from}", payload.tag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub point: SpacetimePoint,
    pub station: StationId,
    pub record: EventRecord,
}

impl TranscriptEntry {
    pub fn time(&self) -> Seconds {
        self.point.time
    }

    /// `time | station | step-tag | payload`
    pub fn to_line(&self) -> String {
        let payload = match self.record.payload() {
            Some(p) if !p.chains.is_empty() => p
                .chains
                .iter()
                .map(|c| c.to_hex())
                .collect::<Vec<_>>()
                .join(","),
            _ => "-".to_string(),
        };
        format!(
            "{} | {} | {} | {}",
            self.point.time.decimal(),
            self.station,
            self.record.step_tag(),
            payload
        )
    }
}

/// Totally ordered event log of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub(crate) fn new(entries: Vec<TranscriptEntry>) -> Self {
        Transcript { entries }
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn final_time(&self) -> Option<Seconds> {
        self.entries.last().map(|e| e.time())
    }

    /// The prefix of events strictly earlier than `t`.
    pub fn truncated_before(&self, t: Seconds) -> Transcript {
        Transcript {
            entries: self
                .entries
                .iter()
                .take_while(|e| e.time() < t)
                .cloned()
                .collect(),
        }
    }

    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            writeln!(out, "{}", entry.to_line()).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    /// Checks event order, non-negative times, and that every receipt
    /// happens exactly at its light-speed arrival time after a matching send.
    pub fn audit(&self, geometry: &Geometry) -> Result<(), SpacetimeError> {
        let fail = |msg: String| Err(SpacetimeError::Audit(msg));
        for pair in self.entries.windows(2) {
            if (pair[0].time(), pair[0].seq) >= (pair[1].time(), pair[1].seq) {
                return fail(format!("events {} and {} out of order", pair[0].seq, pair[1].seq));
            }
        }
        let mut pending: Vec<(StationId, StationId, Seconds, Seconds, &Payload)> = Vec::new();
        for entry in &self.entries {
            if entry.time().0.is_negative() {
                return fail(format!("event {} at negative time", entry.seq));
            }
            if entry.point.position != geometry.position(entry.station)? {
                return fail(format!("event {} at the wrong position", entry.seq));
            }
            match &entry.record {
                EventRecord::Sent { to, arrival, payload } => {
                    let expected = entry.time().add(geometry.travel_time(entry.station, *to)?)?;
                    if *arrival != expected {
                        return fail(format!("event {} has arrival {arrival}, expected {expected}", entry.seq));
                    }
                    pending.push((entry.station, *to, entry.time(), *arrival, payload));
                }
                EventRecord::Received { from, sent, payload } => {
                    let found = pending.iter().position(|(s, r, st, arr, p)| {
                        s == from && *r == entry.station && st == sent && *arr == entry.time() && *p == payload
                    });
                    match found {
                        Some(i) => {
                            pending.swap_remove(i);
                        }
                        None => {
                            return fail(format!(
                                "event {}: {} read a message before its arrival or without a send",
                                entry.seq, entry.station
                            ))
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
