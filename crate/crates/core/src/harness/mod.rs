//! Monte Carlo trials, exhaustive small-`l` oracles and the statistics that
//! compare the two.

mod distribution;
mod stats;
mod suite;
mod trials;

use thiserror::Error;

use crate::bitchain::BitChainError;
use crate::config::ConfigError;
use crate::protocol::ProtocolError;

pub use distribution::{
    analytic_distribution, engine_exhaustive, exhaustive_oracle, standard_strategies, unit_geometry,
    Distribution, EngineTally, ORACLE_BOUND,
};
pub use stats::{binomial_z, compare, compare_counts, Comparison, ZScore, Z_THRESHOLD};
pub use suite::{run_suite, CheckResult, SuiteOptions};
pub use trials::{
    observers, run_trials, run_trials_with, ExpectedRate, InterceptSummary, KnowledgeSummary, TrialReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    BitChain(#[from] BitChainError),
    #[error("enumeration of {} tuples exceeds the bound of {bound}", tuples.map_or("more than 2^128".to_string(), |n| n.to_string()))]
    TooLarge { tuples: Option<u128>, bound: u128 },
    #[error("{0}")]
    Unsupported(String),
}
