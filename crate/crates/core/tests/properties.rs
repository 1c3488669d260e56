//! Cross-module properties over randomly drawn scenarios.

use proptest::prelude::*;

use relbc_core::adversary::{AdversaryStrategy, Decision, KnowledgeView};
use relbc_core::protocol::{run_protocol, CommitmentBit, RunConfig, RunInputs, UnveilOutcome, Variant};
use relbc_core::spacetime::{
    earliest_knowledge_time, spacelike_separated, Exact, Geometry, Meters, Seconds, Speed, StationId,
};
use relbc_core::Seed;

fn geometry(d: i64, c: i64) -> Geometry {
    Geometry::line(Meters(Exact::int(d as i128)), Speed(Exact::int(c as i128))).unwrap()
}

fn arb_variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Symmetric), Just(Variant::Subordinate)]
}

fn arb_strategy() -> impl Strategy<Value = AdversaryStrategy> {
    prop_oneof![
        Just(AdversaryStrategy::Honest),
        Just(AdversaryStrategy::AliceDifferentBit {
            a1: CommitmentBit::Zero,
            a2: CommitmentBit::One
        }),
        Just(AdversaryStrategy::AliceDifferentKeys { keys: None }),
        Just(AdversaryStrategy::BobMidpointStation { position: None }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_transcript_passes_the_audit(
        variant in arb_variant(),
        strategy in arb_strategy(),
        l in 1usize..40,
        d in 1i64..1_000_000_000,
        c in 1i64..1_000_000_000,
        delta_num in 0i64..99,
        seed in any::<u64>(),
    ) {
        let g = geometry(d, c);
        // delta strictly below d/(10c)
        let delta = Seconds(Exact::new(delta_num as i128 * d as i128, 1000 * c as i128).unwrap());
        let cfg = RunConfig::new(variant, l, g).with_adversary(strategy).with_delta(delta);
        let inputs = RunInputs::sample(&cfg, None, Seed(seed)).unwrap();
        let run = run_protocol(&cfg, &inputs).unwrap();
        run.transcript.audit(&run.geometry).unwrap();
        prop_assert!(run.verdicts_agree());
        let times: Vec<Seconds> = run.transcript.entries().iter().map(|e| e.time()).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn honest_runs_never_detect_cheating(
        variant in arb_variant(),
        l in 1usize..64,
        seed in any::<u64>(),
        bit in prop_oneof![Just(CommitmentBit::Zero), Just(CommitmentBit::One)],
    ) {
        let cfg = RunConfig::new(variant, l, geometry(300_000_000, 299_792_458));
        let inputs = RunInputs::sample(&cfg, Some(bit), Seed(seed)).unwrap();
        let out = run_protocol(&cfg, &inputs).unwrap().outcome();
        prop_assert!(out == UnveilOutcome::Revealed(bit) || (variant == Variant::Symmetric && out == UnveilOutcome::Ambiguous));
    }

    #[test]
    fn nothing_is_known_before_the_signals_meet(
        l in 2usize..32,
        d in 1i64..1_000_000,
        c in 1i64..1_000_000,
        seed in any::<u64>(),
    ) {
        let cfg = RunConfig::new(Variant::Symmetric, l, geometry(d, c));
        let inputs = RunInputs::sample(&cfg, None, Seed(seed)).unwrap();
        let run = run_protocol(&cfg, &inputs).unwrap();
        let span = run.geometry.span_time().unwrap();
        // what each official Bob station holds strictly before d/c
        let early = run.transcript.truncated_before(span);
        for station in [StationId::B1, StationId::B2] {
            let mut view = KnowledgeView::default();
            for e in early.entries().iter().filter(|e| e.station == station) {
                view.absorb(e.station, &e.record);
            }
            prop_assert_eq!(view.decide(), Decision::Undetermined);
        }
        if run.outcome() != UnveilOutcome::Ambiguous {
            prop_assert_eq!(earliest_knowledge_time(&run.transcript, &[StationId::B1]).unwrap(), span);
        }
    }

    #[test]
    fn commits_before_the_deadline_are_spacelike(
        d in 1i64..1_000_000_000,
        c in 1i64..1_000_000_000,
        frac in 0i64..1000,
    ) {
        let g = geometry(d, c);
        let span = g.span_time().unwrap();
        let t = Seconds(span.0.mul(Exact::new(frac as i128, 1000).unwrap()).unwrap());
        let a1 = relbc_core::spacetime::SpacetimePoint::new(Meters::ZERO, Seconds::ZERO);
        let a2 = relbc_core::spacetime::SpacetimePoint::new(g.d(), t);
        prop_assert!(spacelike_separated(&a1, &a2, g.c()));
        let late = relbc_core::spacetime::SpacetimePoint::new(g.d(), span);
        prop_assert!(!spacelike_separated(&a1, &late, g.c()));
    }
}
