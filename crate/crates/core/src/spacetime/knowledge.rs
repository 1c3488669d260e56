use crate::adversary::{Decision, KnowledgeView};

use super::{Seconds, SpacetimeError, StationId, Transcript};

/// First time at which everything the observers have sent or received pins
/// down the committed bit.
pub fn earliest_knowledge_time(
    transcript: &Transcript,
    observers: &[StationId],
) -> Result<Seconds, SpacetimeError> {
    let mut view = KnowledgeView::default();
    for entry in transcript.entries() {
        if !observers.contains(&entry.station) {
            continue;
        }
        if !view.absorb(entry.station, &entry.record) {
            continue;
        }
        if let Decision::Determined(_) = view.decide() {
            return Ok(entry.time());
        }
    }
    Err(SpacetimeError::NeverKnown)
}
