//! Commit and unveil logic for the two-station relativistic bit commitment,
//! in its symmetric form and in the variant where A2 only relays the key.
//!
//! The pure functions here compute every value that crosses a channel; the
//! station state machines in [`engine`] call them from scheduler callbacks.

mod engine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitchain::{BitChain, BitChainError};
use crate::spacetime::SpacetimeError;

pub use engine::{
    run_protocol, run_protocol_with, Fault, Intercept, ProtocolRun, RunConfig, RunInputs,
    StationVerdict,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    BitChain(#[from] BitChainError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error("challenge chains must be distinct")]
    NotDistinct,
    #[error("configuration error: {0}")]
    Config(String),
}

/// The committed bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CommitmentBit {
    Zero,
    One,
}

impl CommitmentBit {
    pub const BOTH: [CommitmentBit; 2] = [CommitmentBit::Zero, CommitmentBit::One];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> CommitmentBit {
        match self {
            CommitmentBit::Zero => CommitmentBit::One,
            CommitmentBit::One => CommitmentBit::Zero,
        }
    }
}

impl From<CommitmentBit> for u8 {
    fn from(b: CommitmentBit) -> u8 {
        b as u8
    }
}

impl TryFrom<u8> for CommitmentBit {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(CommitmentBit::Zero),
            1 => Ok(CommitmentBit::One),
            _ => Err(format!("bit must be 0 or 1, got {v}")),
        }
    }
}

impl fmt::Display for CommitmentBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

impl FromStr for CommitmentBit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(CommitmentBit::Zero),
            "1" => Ok(CommitmentBit::One),
            other => Err(format!("bit must be 0 or 1, got {other:?}")),
        }
    }
}

/// Two distinct chains of equal length, indexed by the committed bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[BitChain; 2]", into = "[BitChain; 2]")]
pub struct ChallengePair([BitChain; 2]);

impl ChallengePair {
    pub fn new(first: BitChain, second: BitChain) -> Result<Self, ProtocolError> {
        if !first.checked_eq(&second)? {
            Ok(ChallengePair([first, second]))
        } else {
            Err(ProtocolError::NotDistinct)
        }
    }

    pub fn get(&self, b: CommitmentBit) -> &BitChain {
        &self.0[b.index()]
    }

    pub fn chains(&self) -> &[BitChain; 2] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<[BitChain; 2]> for ChallengePair {
    type Error = ProtocolError;
    fn try_from([a, b]: [BitChain; 2]) -> Result<Self, Self::Error> {
        ChallengePair::new(a, b)
    }
}

impl From<ChallengePair> for [BitChain; 2] {
    fn from(pair: ChallengePair) -> Self {
        pair.0
    }
}

/// Verdict of the unveil phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnveilOutcome {
    Revealed(CommitmentBit),
    CheatDetected,
    /// Both candidate bits satisfy the equality test.
    Ambiguous,
}

impl UnveilOutcome {
    pub fn kind(self) -> OutcomeKind {
        match self {
            UnveilOutcome::Revealed(CommitmentBit::Zero) => OutcomeKind::Revealed0,
            UnveilOutcome::Revealed(CommitmentBit::One) => OutcomeKind::Revealed1,
            UnveilOutcome::CheatDetected => OutcomeKind::CheatDetected,
            UnveilOutcome::Ambiguous => OutcomeKind::Ambiguous,
        }
    }
}

impl fmt::Display for UnveilOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnveilOutcome::Revealed(b) => write!(f, "revealed({b})"),
            UnveilOutcome::CheatDetected => f.write_str("cheat-detected"),
            UnveilOutcome::Ambiguous => f.write_str("ambiguous"),
        }
    }
}

/// Flat outcome label used for counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    #[serde(rename = "revealed_0")]
    Revealed0,
    #[serde(rename = "revealed_1")]
    Revealed1,
    #[serde(rename = "ambiguous")]
    Ambiguous,
    #[serde(rename = "cheat_detected")]
    CheatDetected,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 4] = [
        OutcomeKind::Revealed0,
        OutcomeKind::Revealed1,
        OutcomeKind::Ambiguous,
        OutcomeKind::CheatDetected,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OutcomeKind::Revealed0 => "revealed_0",
            OutcomeKind::Revealed1 => "revealed_1",
            OutcomeKind::Ambiguous => "ambiguous",
            OutcomeKind::CheatDetected => "cheat_detected",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which protocol is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Both Alice stations commit; Bob's stations cross-check.
    Symmetric,
    /// A1 commits; A2 only hands the key to B2.
    Subordinate,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Symmetric, Variant::Subordinate];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Symmetric => f.write_str("symmetric"),
            Variant::Subordinate => f.write_str("subordinate"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "symmetric" => Ok(Variant::Symmetric),
            "subordinate" => Ok(Variant::Subordinate),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// Alice's answer to a challenge: the challenge entry selected by `b`,
/// one-time-padded with `eta`.
pub fn commit_response(
    eta: &BitChain,
    b: CommitmentBit,
    challenge: &ChallengePair,
) -> Result<BitChain, BitChainError> {
    eta.xor(challenge.get(b))
}

/// The cross values a Bob station forwards to its partner: the received
/// commitment XORed with each of its own challenge entries.
pub fn derive_cross(
    commitment: &BitChain,
    challenge: &ChallengePair,
) -> Result<[BitChain; 2], BitChainError> {
    let [c0, c1] = challenge.chains();
    Ok([commitment.xor(c0)?, commitment.xor(c1)?])
}

/// Symmetric-variant verdict from B1's cross pair `lambda` and B2's `zeta`.
pub fn unveil_verdict(
    lambda: &[BitChain; 2],
    zeta: &[BitChain; 2],
) -> Result<UnveilOutcome, BitChainError> {
    let eq0 = lambda[0].checked_eq(&zeta[0])?;
    let eq1 = lambda[1].checked_eq(&zeta[1])?;
    Ok(match (eq0, eq1) {
        (true, false) => UnveilOutcome::Revealed(CommitmentBit::Zero),
        (false, true) => UnveilOutcome::Revealed(CommitmentBit::One),
        (true, true) => UnveilOutcome::Ambiguous,
        (false, false) => UnveilOutcome::CheatDetected,
    })
}

/// Subordinate-variant verdict: decrypt the commitment with the relayed key
/// and look the plaintext up in the challenge.
pub fn subordinate_unveil(
    eta: &BitChain,
    commitment: &BitChain,
    challenge: &ChallengePair,
) -> Result<UnveilOutcome, BitChainError> {
    let plain = eta.xor(commitment)?;
    let [n0, n1] = challenge.chains();
    Ok(match (n0.checked_eq(&plain)?, n1.checked_eq(&plain)?) {
        (true, false) => UnveilOutcome::Revealed(CommitmentBit::Zero),
        (false, true) => UnveilOutcome::Revealed(CommitmentBit::One),
        (false, false) => UnveilOutcome::CheatDetected,
        // excluded by ChallengePair
        (true, true) => UnveilOutcome::Ambiguous,
    })
}
