//! Binomial z-scores of observed outcome counts against exact probabilities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::protocol::OutcomeKind;

use super::distribution::{ratio_f64, Distribution};
use super::TrialReport;

/// |z| above this marks a count as inconsistent.
pub const Z_THRESHOLD: f64 = 4.0;

/// A z-score; infinite when the expected variance is zero and the observed
/// count still misses the expectation. JSON has no infinities, so those
/// serialize as the strings `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ZScore(pub f64);

impl ZScore {
    pub fn within(self, threshold: f64) -> bool {
        self.0.abs() <= threshold
    }
}

impl fmt::Display for ZScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{:.4}", self.0)
        } else if self.0 > 0.0 {
            f.write_str("inf")
        } else {
            f.write_str("-inf")
        }
    }
}

impl Serialize for ZScore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

/// `(observed - n p) / sqrt(n p (1 - p))`.
pub fn binomial_z(observed: u64, trials: u64, p: f64) -> ZScore {
    let n = trials as f64;
    let mean = n * p;
    let sigma = (n * p * (1.0 - p)).sqrt();
    let diff = observed as f64 - mean;
    if sigma > 0.0 {
        ZScore(diff / sigma)
    } else if diff == 0.0 {
        ZScore(0.0)
    } else {
        ZScore(diff.signum() * f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub consistent: bool,
    pub z_scores: BTreeMap<OutcomeKind, ZScore>,
}

impl Comparison {
    pub fn worst(&self) -> Option<(OutcomeKind, ZScore)> {
        self.z_scores
            .iter()
            .rev()
            .map(|(k, z)| (*k, *z))
            .max_by(|a, b| a.1 .0.abs().total_cmp(&b.1 .0.abs()))
    }
}

/// Per-outcome z-scores of `counts` against `expected`.
///
/// Probability-0 and probability-1 outcomes have zero variance and are
/// checked exactly: a single stray count makes them inconsistent.
pub fn compare_counts(counts: &BTreeMap<OutcomeKind, u64>, expected: &Distribution) -> Comparison {
    let trials: u64 = counts.values().sum();
    let z_scores: BTreeMap<OutcomeKind, ZScore> = OutcomeKind::ALL
        .into_iter()
        .map(|k| {
            let observed = counts.get(&k).copied().unwrap_or(0);
            (k, binomial_z(observed, trials, ratio_f64(expected.probability(k))))
        })
        .collect();
    let consistent = z_scores.values().all(|z| z.within(Z_THRESHOLD));
    Comparison { consistent, z_scores }
}

pub fn compare(report: &TrialReport, expected: &Distribution) -> Comparison {
    compare_counts(&report.outcome_counts, expected)
}
