//! Scenario configuration.
//!
//! The on-disk form is flat `key=value` text, one setting per line, `#`
//! comments allowed. The same keys are used for command-line overrides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::adversary::AdversaryStrategy;
use crate::protocol::{CommitmentBit, RunConfig, Variant};
use crate::spacetime::{Geometry, Meters, Seconds, Speed};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Which bit honest Alice commits to in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitChoice {
    /// Drawn uniformly per trial from Alice's substream.
    #[default]
    Random,
    Fixed(CommitmentBit),
}

impl BitChoice {
    pub fn fixed(self) -> Option<CommitmentBit> {
        match self {
            BitChoice::Random => None,
            BitChoice::Fixed(b) => Some(b),
        }
    }

    /// The bits an exhaustive enumeration has to cover.
    pub fn support(self) -> Vec<CommitmentBit> {
        match self {
            BitChoice::Random => CommitmentBit::BOTH.to_vec(),
            BitChoice::Fixed(b) => vec![b],
        }
    }
}

impl fmt::Display for BitChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitChoice::Random => f.write_str("random"),
            BitChoice::Fixed(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BitChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(BitChoice::Random),
            other => other.parse().map(BitChoice::Fixed),
        }
    }
}

impl Serialize for BitChoice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitChoice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown output format {other:?}")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OutputFormat::Text => "text",
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub variant: Variant,
    pub l: usize,
    pub d: Meters,
    pub c: Speed,
    pub delta: Seconds,
    pub adversary: AdversaryStrategy,
    pub bit: BitChoice,
    pub seed: u64,
    pub trials: u64,
    pub output: OutputFormat,
    pub emit_transcript: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            variant: Variant::Symmetric,
            l: 16,
            d: Meters(crate::spacetime::Exact::int(300_000_000)),
            c: Speed::LIGHT,
            delta: Seconds::ZERO,
            adversary: AdversaryStrategy::Honest,
            bit: BitChoice::Random,
            seed: 0,
            trials: 1,
            output: OutputFormat::Text,
            emit_transcript: false,
        }
    }
}

pub const KEYS: [&str; 11] = [
    "variant",
    "l",
    "d",
    "c",
    "delta",
    "adversary",
    "bit",
    "seed",
    "trials",
    "output",
    "emit_transcript",
];

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let err = |e: String| ConfigError(format!("{key}: {e}"));
        let value = value.trim();
        match key.trim() {
            "variant" => self.variant = value.parse().map_err(err)?,
            "l" => self.l = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            "d" => self.d = value.parse().map_err(|e: crate::spacetime::QuantityError| err(e.to_string()))?,
            "c" => self.c = value.parse().map_err(|e: crate::spacetime::QuantityError| err(e.to_string()))?,
            "delta" => self.delta = value.parse().map_err(|e: crate::spacetime::QuantityError| err(e.to_string()))?,
            "adversary" => self.adversary = value.parse().map_err(err)?,
            "bit" => self.bit = value.parse().map_err(err)?,
            "seed" => self.seed = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            "trials" => self.trials = value.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            "output" => self.output = value.parse().map_err(err)?,
            "emit_transcript" => {
                self.emit_transcript = value.parse().map_err(|e: std::str::ParseBoolError| err(e.to_string()))?
            }
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "variant" => self.variant.to_string(),
            "l" => self.l.to_string(),
            "d" => self.d.to_string(),
            "c" => self.c.to_string(),
            "delta" => self.delta.to_string(),
            "adversary" => self.adversary.to_string(),
            "bit" => self.bit.to_string(),
            "seed" => self.seed.to_string(),
            "trials" => self.trials.to_string(),
            "output" => self.output.to_string(),
            "emit_transcript" => self.emit_transcript.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn merge_kv(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        cfg.merge_kv(text)?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn geometry(&self) -> Result<Geometry, ConfigError> {
        Geometry::line(self.d, self.c).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let cfg = RunConfig::new(self.variant, self.l, self.geometry()?)
            .with_delta(self.delta)
            .with_adversary(self.adversary);
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError("trials must be at least 1".into()));
        }
        self.run_config().map(|_| ())
    }
}
