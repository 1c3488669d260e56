//! Exact outcome distributions: the brute-force oracle, the closed forms it
//! confirms, and the protocol engine driven over every input tuple.
//!
//! The oracle deliberately recomputes the commitment and unveil conditions
//! on its own; only `BitChain` and the outcome labels are shared with the
//! engine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::adversary::{AdversaryStrategy, AliceSecrets};
use crate::bitchain::BitChain;
use crate::config::BitChoice;
use crate::protocol::{run_protocol, Fault, RunConfig, RunInputs};
use crate::protocol::{ChallengePair, CommitmentBit, OutcomeKind, Variant};
use crate::spacetime::{Exact, Geometry, Meters, Speed};

use super::HarnessError;

/// Largest tuple count the oracle agrees to enumerate.
pub const ORACLE_BOUND: u128 = 50_000_000;

/// Exact probabilities per outcome kind. Kinds with probability zero are
/// kept so every distribution lists all four.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution(BTreeMap<OutcomeKind, BigRational>);

impl Distribution {
    pub fn from_counts(counts: &BTreeMap<OutcomeKind, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let map = OutcomeKind::ALL
            .into_iter()
            .map(|k| {
                let c = counts.get(&k).copied().unwrap_or(0);
                let p = if total == 0 {
                    BigRational::zero()
                } else {
                    BigRational::new(BigInt::from(c), BigInt::from(total))
                };
                (k, p)
            })
            .collect();
        Distribution(map)
    }

    fn from_pairs(pairs: impl IntoIterator<Item = (OutcomeKind, BigRational)>) -> Self {
        let mut map: BTreeMap<OutcomeKind, BigRational> =
            OutcomeKind::ALL.into_iter().map(|k| (k, BigRational::zero())).collect();
        for (k, p) in pairs {
            *map.get_mut(&k).expect("all kinds present") += p;
        }
        Distribution(map)
    }

    pub fn probability(&self, kind: OutcomeKind) -> &BigRational {
        &self.0[&kind]
    }

    pub fn probability_f64(&self, kind: OutcomeKind) -> f64 {
        ratio_f64(self.probability(kind))
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeKind, &BigRational)> {
        self.0.iter().map(|(k, p)| (*k, p))
    }

    pub fn total(&self) -> BigRational {
        self.0.values().cloned().sum()
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let as_text: BTreeMap<OutcomeKind, String> =
            self.0.iter().map(|(k, p)| (*k, p.to_string())).collect();
        as_text.serialize(serializer)
    }
}

pub(crate) fn ratio_f64(p: &BigRational) -> f64 {
    // exact enough: every probability here is a ratio of modest integers
    let n = p.numer().to_f64().unwrap_or(f64::NAN);
    let d = p.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

fn ratio(n: u128, d: u128) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ordered_distinct_pairs(l: usize) -> Result<Vec<[BitChain; 2]>, HarnessError> {
    let all: Vec<BitChain> = BitChain::enumerate(l)?.collect();
    let mut out = Vec::with_capacity(all.len() * all.len().saturating_sub(1));
    for a in &all {
        for b in &all {
            if a != b {
                out.push([*a, *b]);
            }
        }
    }
    Ok(out)
}

/// Alice's key material to enumerate: one entry per `(eta_a1, eta_a2)`.
fn key_pairs(strategy: &AdversaryStrategy, l: usize) -> Result<Vec<(BitChain, BitChain)>, HarnessError> {
    Ok(match strategy {
        AdversaryStrategy::AliceDifferentKeys { keys: Some(k) } => vec![*k],
        AdversaryStrategy::AliceDifferentKeys { keys: None } => ordered_distinct_pairs(l)?
            .into_iter()
            .map(|[a, b]| (a, b))
            .collect(),
        _ => BitChain::enumerate(l)?.map(|k| (k, k)).collect(),
    })
}

fn tuple_count(variant: Variant, strategy: &AdversaryStrategy, l: usize, bits: usize) -> Option<u128> {
    if l >= 64 {
        return None;
    }
    let size = 1u128 << l;
    let pairs = size * (size - 1);
    let keys = match strategy {
        AdversaryStrategy::AliceDifferentKeys { keys: Some(_) } => 1,
        AdversaryStrategy::AliceDifferentKeys { keys: None } => pairs,
        _ => size,
    };
    let m_pairs = match variant {
        Variant::Symmetric => pairs,
        Variant::Subordinate => 1,
    };
    (bits as u128)
        .checked_mul(keys)?
        .checked_mul(pairs)?
        .checked_mul(m_pairs)
}

fn check_size(
    variant: Variant,
    strategy: &AdversaryStrategy,
    l: usize,
    bits: usize,
) -> Result<u128, HarnessError> {
    if l == 0 {
        return Err(HarnessError::Unsupported("l must be at least 1".into()));
    }
    match tuple_count(variant, strategy, l, bits) {
        Some(n) if n <= ORACLE_BOUND => Ok(n),
        n => Err(HarnessError::TooLarge {
            tuples: n,
            bound: ORACLE_BOUND,
        }),
    }
}

fn oracle_bits(strategy: &AdversaryStrategy, b: CommitmentBit) -> (CommitmentBit, CommitmentBit) {
    match strategy {
        AdversaryStrategy::AliceDifferentBit { a1, a2 } => (*a1, *a2),
        _ => (b, b),
    }
}

fn pick(pair: &[BitChain; 2], b: CommitmentBit) -> BitChain {
    match b {
        CommitmentBit::Zero => pair[0],
        CommitmentBit::One => pair[1],
    }
}

fn x(a: &BitChain, b: &BitChain) -> BitChain {
    a.xor(b).expect("enumerated chains share a length")
}

/// Exact outcome distribution by full enumeration of keys, challenges and
/// (for a random bit) both committed bits, each tuple equally likely.
pub fn exhaustive_oracle(
    variant: Variant,
    strategy: &AdversaryStrategy,
    l: usize,
    bit: BitChoice,
) -> Result<Distribution, HarnessError> {
    let bits = bit.support();
    check_size(variant, strategy, l, bits.len())?;
    strategy.validate(l)?;
    let keys = key_pairs(strategy, l)?;
    let pairs = ordered_distinct_pairs(l)?;

    let mut counts: BTreeMap<OutcomeKind, u64> = BTreeMap::new();
    for &b in &bits {
        let (b1, b2) = oracle_bits(strategy, b);
        for (k1, k2) in &keys {
            for n in &pairs {
                let big_n = x(k1, &pick(n, b1));
                match variant {
                    Variant::Symmetric => {
                        let lambda = [x(&big_n, &n[0]), x(&big_n, &n[1])];
                        for m in &pairs {
                            let big_m = x(k2, &pick(m, b2));
                            let same0 = lambda[0] == x(&big_m, &m[0]);
                            let same1 = lambda[1] == x(&big_m, &m[1]);
                            let kind = match (same0, same1) {
                                (true, true) => OutcomeKind::Ambiguous,
                                (true, false) => OutcomeKind::Revealed0,
                                (false, true) => OutcomeKind::Revealed1,
                                (false, false) => OutcomeKind::CheatDetected,
                            };
                            *counts.entry(kind).or_default() += 1;
                        }
                    }
                    Variant::Subordinate => {
                        // B1 decrypts with the key A2 handed over
                        let plain = x(&big_n, k2);
                        let kind = if plain == n[0] {
                            OutcomeKind::Revealed0
                        } else if plain == n[1] {
                            OutcomeKind::Revealed1
                        } else {
                            OutcomeKind::CheatDetected
                        };
                        *counts.entry(kind).or_default() += 1;
                    }
                }
            }
        }
    }
    Ok(Distribution::from_counts(&counts))
}

fn revealed(b: CommitmentBit) -> OutcomeKind {
    match b {
        CommitmentBit::Zero => OutcomeKind::Revealed0,
        CommitmentBit::One => OutcomeKind::Revealed1,
    }
}

/// Closed-form distribution for any `l` up to 127.
///
/// With `q = 1/(2^l - 1)`: honest symmetric runs are Ambiguous with
/// probability `q`; different keys reveal the wrong bit with probability
/// `(2^l - 2) q^2` (symmetric) or `q` (subordinate) and are otherwise
/// caught; different bits are always caught in the symmetric variant and
/// reveal A1's bit in the subordinate one.
pub fn analytic_distribution(
    variant: Variant,
    strategy: &AdversaryStrategy,
    l: usize,
    bit: BitChoice,
) -> Result<Distribution, HarnessError> {
    if l == 0 || l > 127 {
        return Err(HarnessError::Unsupported(format!("closed forms need 1 <= l <= 127, got {l}")));
    }
    strategy.validate(l)?;
    let size = 1u128 << l;
    let q = ratio(1, size - 1);
    let bits = bit.support();
    let weight = ratio(1, bits.len() as u128);
    let one = BigRational::one();

    let mut pairs = Vec::new();
    for b in bits {
        let conditional: Vec<(OutcomeKind, BigRational)> = match (variant, strategy) {
            (Variant::Symmetric, AdversaryStrategy::Honest | AdversaryStrategy::BobMidpointStation { .. }) => {
                vec![(OutcomeKind::Ambiguous, q.clone()), (revealed(b), &one - &q)]
            }
            (Variant::Subordinate, AdversaryStrategy::Honest | AdversaryStrategy::BobMidpointStation { .. }) => {
                vec![(revealed(b), one.clone())]
            }
            (Variant::Symmetric, AdversaryStrategy::AliceDifferentBit { .. }) => {
                vec![(OutcomeKind::CheatDetected, one.clone())]
            }
            (Variant::Subordinate, AdversaryStrategy::AliceDifferentBit { a1, .. }) => {
                vec![(revealed(*a1), one.clone())]
            }
            (Variant::Symmetric, AdversaryStrategy::AliceDifferentKeys { .. }) => {
                let wrong = ratio(size - 2, 1) * &q * &q;
                vec![(revealed(b.flip()), wrong.clone()), (OutcomeKind::CheatDetected, &one - wrong)]
            }
            (Variant::Subordinate, AdversaryStrategy::AliceDifferentKeys { .. }) => {
                vec![(revealed(b.flip()), q.clone()), (OutcomeKind::CheatDetected, &one - &q)]
            }
        };
        pairs.extend(conditional.into_iter().map(|(k, p)| (k, p * &weight)));
    }
    Ok(Distribution::from_pairs(pairs))
}

/// Engine results over every input tuple the oracle enumerates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineTally {
    pub runs: u64,
    pub counts: BTreeMap<OutcomeKind, u64>,
    /// Runs where B1 and B2 reached different verdicts.
    pub disagreements: u64,
}

impl EngineTally {
    pub fn distribution(&self) -> Distribution {
        Distribution::from_counts(&self.counts)
    }

    fn merge(mut self, other: EngineTally) -> EngineTally {
        self.runs += other.runs;
        self.disagreements += other.disagreements;
        for (k, c) in other.counts {
            *self.counts.entry(k).or_default() += c;
        }
        self
    }
}

/// Geometry used for exhaustive engine runs: `d/c` = 1 s.
pub fn unit_geometry() -> Geometry {
    let d = Meters(Exact::int(300_000_000));
    Geometry::line(d, Speed(Exact::int(300_000_000))).expect("positive constants")
}

/// Runs the full protocol engine once per input tuple and tallies B1's
/// verdicts.
pub fn engine_exhaustive(
    variant: Variant,
    strategy: &AdversaryStrategy,
    l: usize,
    bit: BitChoice,
    fault: Option<Fault>,
) -> Result<EngineTally, HarnessError> {
    let bits = bit.support();
    check_size(variant, strategy, l, bits.len())?;
    let mut cfg = RunConfig::new(variant, l, unit_geometry()).with_adversary(*strategy);
    cfg.fault = fault;
    cfg.validate()?;

    let pairs: Vec<ChallengePair> = ordered_distinct_pairs(l)?
        .into_iter()
        .map(|[a, b]| ChallengePair::new(a, b))
        .collect::<Result<_, _>>()?;
    let m_choices: Vec<Option<ChallengePair>> = match variant {
        Variant::Symmetric => pairs.iter().copied().map(Some).collect(),
        Variant::Subordinate => vec![None],
    };
    let outer: Vec<(CommitmentBit, BitChain, BitChain)> = bits
        .iter()
        .flat_map(|&b| {
            key_pairs(strategy, l)
                .into_iter()
                .flatten()
                .map(move |(k1, k2)| (b, k1, k2))
        })
        .collect();

    outer
        .par_iter()
        .map(|&(b, eta, eta_second)| -> Result<EngineTally, HarnessError> {
            let mut tally = EngineTally::default();
            let alice = AliceSecrets { b, eta, eta_second };
            for n in &pairs {
                for m in &m_choices {
                    let inputs = RunInputs { alice, n: *n, m: *m };
                    let run = run_protocol(&cfg, &inputs)?;
                    tally.runs += 1;
                    if !run.verdicts_agree() {
                        tally.disagreements += 1;
                    }
                    *tally.counts.entry(run.outcome().kind()).or_default() += 1;
                }
            }
            Ok(tally)
        })
        .try_reduce(EngineTally::default, |a, b| Ok(a.merge(b)))
}

/// The strategies every exhaustive suite covers.
pub fn standard_strategies() -> Vec<AdversaryStrategy> {
    vec![
        AdversaryStrategy::Honest,
        AdversaryStrategy::AliceDifferentBit {
            a1: CommitmentBit::Zero,
            a2: CommitmentBit::One,
        },
        AdversaryStrategy::AliceDifferentBit {
            a1: CommitmentBit::One,
            a2: CommitmentBit::Zero,
        },
        AdversaryStrategy::AliceDifferentKeys { keys: None },
        AdversaryStrategy::BobMidpointStation { position: None },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    const RANDOM: BitChoice = BitChoice::Random;

    #[test]
    fn honest_l2_is_ambiguous_one_third_of_the_time() {
        let dist = exhaustive_oracle(Variant::Symmetric, &AdversaryStrategy::Honest, 2, RANDOM).unwrap();
        assert_eq!(dist.probability(OutcomeKind::Ambiguous), &r(1, 3));
        assert_eq!(dist.probability(OutcomeKind::CheatDetected), &r(0, 1));
        assert_eq!(dist.total(), r(1, 1));
    }

    #[test]
    fn honest_l1_is_always_ambiguous() {
        let dist = exhaustive_oracle(Variant::Symmetric, &AdversaryStrategy::Honest, 1, RANDOM).unwrap();
        assert_eq!(dist.probability(OutcomeKind::Ambiguous), &r(1, 1));
    }

    #[test]
    fn different_bits_l2_always_caught() {
        let s = AdversaryStrategy::AliceDifferentBit {
            a1: CommitmentBit::Zero,
            a2: CommitmentBit::One,
        };
        let dist = exhaustive_oracle(Variant::Symmetric, &s, 2, RANDOM).unwrap();
        assert_eq!(dist.probability(OutcomeKind::CheatDetected), &r(1, 1));
    }

    #[test]
    fn closed_forms_match_oracle_up_to_l4() {
        for l in 1..=4 {
            for variant in Variant::ALL {
                for s in standard_strategies() {
                    for bit in [
                        BitChoice::Random,
                        BitChoice::Fixed(CommitmentBit::Zero),
                        BitChoice::Fixed(CommitmentBit::One),
                    ] {
                        let oracle = exhaustive_oracle(variant, &s, l, bit).unwrap();
                        let formula = analytic_distribution(variant, &s, l, bit).unwrap();
                        assert_eq!(oracle, formula, "{variant} {s} l={l} bit={bit}");
                    }
                }
            }
        }
    }

    #[test]
    fn explicit_keys_share_the_random_key_law() {
        let s = AdversaryStrategy::AliceDifferentKeys {
            keys: Some(("010".parse().unwrap(), "111".parse().unwrap())),
        };
        for variant in Variant::ALL {
            let oracle = exhaustive_oracle(variant, &s, 3, RANDOM).unwrap();
            assert_eq!(oracle, analytic_distribution(variant, &s, 3, RANDOM).unwrap());
        }
    }

    #[test]
    fn engine_matches_oracle_at_l2() {
        for variant in Variant::ALL {
            for s in standard_strategies() {
                let tally = engine_exhaustive(variant, &s, 2, RANDOM, None).unwrap();
                assert_eq!(tally.disagreements, 0);
                assert_eq!(tally.distribution(), exhaustive_oracle(variant, &s, 2, RANDOM).unwrap());
            }
        }
    }

    #[test]
    fn corrupted_engine_disagrees_with_oracle() {
        let bit = BitChoice::Fixed(CommitmentBit::Zero);
        let s = AdversaryStrategy::Honest;
        let tally = engine_exhaustive(Variant::Symmetric, &s, 2, bit, Some(Fault::InvertRevealed)).unwrap();
        assert_ne!(tally.distribution(), exhaustive_oracle(Variant::Symmetric, &s, 2, bit).unwrap());
    }

    #[test]
    fn oversized_enumeration_is_refused() {
        let err = exhaustive_oracle(Variant::Symmetric, &AdversaryStrategy::Honest, 12, RANDOM).unwrap_err();
        assert!(matches!(err, HarnessError::TooLarge { .. }));
        let err = exhaustive_oracle(Variant::Symmetric, &AdversaryStrategy::Honest, 80, RANDOM).unwrap_err();
        assert!(matches!(err, HarnessError::TooLarge { tuples: None, .. }));
    }

    #[test]
    fn paper_approximation_is_close_but_not_exact() {
        let dist = analytic_distribution(Variant::Symmetric, &AdversaryStrategy::Honest, 8, RANDOM).unwrap();
        assert_eq!(dist.probability(OutcomeKind::Ambiguous), &r(1, 255));
        assert_ne!(dist.probability(OutcomeKind::Ambiguous), &r(1, 256));
    }
}
