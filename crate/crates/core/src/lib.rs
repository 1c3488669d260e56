//! Simulator and verification harness for a relativistic classical bit
//! commitment between two pairs of co-located stations.
//!
//! Alice's stations A1 and A2 answer challenges from Bob's adjacent stations
//! B1 and B2 with one-time-pad encryptions under a shared key. Bob's stations
//! then exchange XOR cross values over a distance `d`; the bit is revealed
//! when those arrive, at `d/c`, and a hidden Bob station half way between
//! them can learn it no earlier than `d/2c`.
//!
//! - [`bitchain`]: fixed-length bit strings and XOR
//! - [`spacetime`]: positions, exact times, the event loop and transcripts
//! - [`protocol`]: station state machines and unveil verdicts
//! - [`adversary`]: cheating strategies and the decidability oracle
//! - [`harness`]: Monte Carlo trials, exhaustive oracles and z-score checks
//! - [`config`]: scenario configuration shared with the command-line tool

pub mod adversary;
pub mod bitchain;
pub mod config;
pub mod harness;
pub mod protocol;
pub mod seed;
pub mod spacetime;

pub use bitchain::{BitChain, BitChainError};
pub use protocol::{CommitmentBit, UnveilOutcome, Variant};
pub use seed::Seed;
