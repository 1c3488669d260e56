//! Distribution checks for the random draws the protocol depends on.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use relbc_core::bitchain::{random_distinct, BitChain};
use relbc_core::protocol::{RunConfig, RunInputs, Variant};
use relbc_core::harness::unit_geometry;
use relbc_core::Seed;

const SAMPLES: u64 = 100_000;
const MIN_P_VALUE: f64 = 1e-4;

fn pair_key(v: &[BitChain]) -> (u64, u64) {
    (v[0].to_u64().unwrap(), v[1].to_u64().unwrap())
}

/// Pearson statistic over all 240 ordered distinct pairs of 4-bit chains.
fn chi_squared_p(counts: &HashMap<(u64, u64), u64>) -> f64 {
    let cells = 16 * 15;
    assert!(counts.keys().all(|(a, b)| a != b && *a < 16 && *b < 16));
    let expected = SAMPLES as f64 / cells as f64;
    let mut stat = 0.0;
    for a in 0..16 {
        for b in (0..16).filter(|&b| b != a) {
            let o = counts.get(&(a, b)).copied().unwrap_or(0) as f64;
            stat += (o - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn distinct_pairs_are_uniform_over_seeds() {
    let mut counts = HashMap::new();
    for seed in 0..SAMPLES {
        let v = random_distinct(2, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        *counts.entry(pair_key(&v)).or_insert(0u64) += 1;
    }
    let p = chi_squared_p(&counts);
    assert!(p > MIN_P_VALUE, "p = {p}");
}

#[test]
fn challenges_drawn_per_trial_are_uniform() {
    let cfg = RunConfig::new(Variant::Symmetric, 4, unit_geometry());
    let mut n_counts = HashMap::new();
    let mut m_counts = HashMap::new();
    for i in 0..SAMPLES {
        let inputs = RunInputs::sample(&cfg, None, Seed(17).trial(i)).unwrap();
        *n_counts.entry(pair_key(inputs.n.chains())).or_insert(0u64) += 1;
        *m_counts.entry(pair_key(inputs.m.unwrap().chains())).or_insert(0u64) += 1;
    }
    assert!(chi_squared_p(&n_counts) > MIN_P_VALUE);
    assert!(chi_squared_p(&m_counts) > MIN_P_VALUE);
}

#[test]
fn distinct_draws_never_repeat() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..SAMPLES {
        let len = 1 + (i % 12) as usize;
        let count = if len == 1 { 2 } else { 2 + (i % 3) as usize };
        let v = random_distinct(count, len, &mut rng).unwrap();
        assert_eq!(v.len(), count);
        for a in 0..count {
            assert_eq!(v[a].len(), len);
            for b in a + 1..count {
                assert_ne!(v[a], v[b], "draw {i}: {v:?}");
            }
        }
    }
}
