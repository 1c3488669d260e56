//! The one-shot verification suite: exhaustive engine/oracle equivalence
//! for small `l`, then Monte Carlo consistency at larger `l`.

use crate::config::{BitChoice, ScenarioConfig};
use crate::protocol::Fault;
use crate::protocol::{CommitmentBit, Variant};

use super::distribution::{analytic_distribution, engine_exhaustive, exhaustive_oracle, standard_strategies};
use super::trials::run_trials_with;
use super::HarnessError;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Exhaustive checks cover `1..=max_l`.
    pub max_l: usize,
    pub mc_lengths: Vec<usize>,
    pub mc_seeds: Vec<u64>,
    pub mc_trials: u64,
    pub fault: Option<Fault>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            max_l: 3,
            mc_lengths: vec![8, 16],
            mc_seeds: vec![1, 2, 3],
            mc_trials: 20_000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

const FIXED_BITS: [BitChoice; 2] = [
    BitChoice::Fixed(CommitmentBit::Zero),
    BitChoice::Fixed(CommitmentBit::One),
];

/// Runs every check and returns one row per check. The committed bit is
/// fixed per check, so a verdict that swaps the two bits cannot hide
/// behind a symmetric mixture.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckResult>, HarnessError> {
    let mut rows = Vec::new();
    for l in 1..=opts.max_l {
        for variant in Variant::ALL {
            for strategy in standard_strategies() {
                for bit in FIXED_BITS {
                    let oracle = exhaustive_oracle(variant, &strategy, l, bit)?;
                    let formula = analytic_distribution(variant, &strategy, l, bit)?;
                    let tally = engine_exhaustive(variant, &strategy, l, bit, opts.fault)?;
                    let engine = tally.distribution();
                    let passed = engine == oracle && oracle == formula && tally.disagreements == 0;
                    let detail = if passed {
                        format!("{} tuples", tally.runs)
                    } else {
                        let show = |d: &super::Distribution| {
                            d.iter().map(|(k, p)| format!("{k}={p}")).collect::<Vec<_>>().join(" ")
                        };
                        format!(
                            "engine [{}] oracle [{}] formula [{}] disagreements {}",
                            show(&engine),
                            show(&oracle),
                            show(&formula),
                            tally.disagreements
                        )
                    };
                    rows.push(CheckResult {
                        name: format!("exhaustive {variant} {strategy} l={l} b={bit}"),
                        passed,
                        detail,
                    });
                }
            }
        }
    }

    for &l in &opts.mc_lengths {
        for variant in Variant::ALL {
            for strategy in standard_strategies() {
                for (i, &seed) in opts.mc_seeds.iter().enumerate() {
                    let cfg = ScenarioConfig {
                        variant,
                        l,
                        adversary: strategy,
                        bit: FIXED_BITS[i % 2],
                        seed,
                        ..ScenarioConfig::default()
                    };
                    let report = run_trials_with(&cfg, opts.mc_trials, opts.fault)?;
                    let (kind, z) = report.comparison.worst().expect("four outcome kinds");
                    rows.push(CheckResult {
                        name: format!("monte-carlo {variant} {strategy} l={l} b={} seed={seed}", cfg.bit),
                        passed: report.consistent,
                        detail: format!("{} trials, worst |z| {z} ({kind})", report.trials),
                    });
                }
            }
        }
    }
    Ok(rows)
}
