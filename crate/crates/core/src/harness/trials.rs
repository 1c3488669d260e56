//! Seeded Monte Carlo trials and their aggregate report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::CommitBehavior;
use crate::config::ScenarioConfig;
use crate::protocol::{run_protocol, Fault, RunInputs};
use crate::protocol::{OutcomeKind, Variant};
use crate::seed::Seed;
use crate::spacetime::{earliest_knowledge_time, Seconds, SpacetimeError, StationId};

use super::distribution::{analytic_distribution, ratio_f64, Distribution};
use super::stats::{compare_counts, Comparison, ZScore};
use super::HarnessError;

/// When an observer first pinned down the committed bit, across trials.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct KnowledgeSummary {
    pub earliest: Option<Seconds>,
    pub latest: Option<Seconds>,
    /// Trials in which the observer never learned the bit.
    pub never: u64,
}

impl KnowledgeSummary {
    fn observe(&mut self, t: Option<Seconds>) {
        match t {
            None => self.never += 1,
            Some(t) => {
                self.earliest = Some(self.earliest.map_or(t, |e| e.min(t)));
                self.latest = Some(self.latest.map_or(t, |e| e.max(t)));
            }
        }
    }

    fn merge(&mut self, other: &KnowledgeSummary) {
        self.never += other.never;
        for t in [other.earliest, other.latest].into_iter().flatten() {
            self.observe(Some(t));
        }
    }
}

/// How B3's early reading compared with A1's actual bit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InterceptSummary {
    pub agree: u64,
    pub disagree: u64,
    pub indeterminate: u64,
    pub earliest: Option<Seconds>,
    pub latest: Option<Seconds>,
}

impl InterceptSummary {
    fn merge(&mut self, other: &InterceptSummary) {
        self.agree += other.agree;
        self.disagree += other.disagree;
        self.indeterminate += other.indeterminate;
        for t in [other.earliest, other.latest].into_iter().flatten() {
            self.earliest = Some(self.earliest.map_or(t, |e| e.min(t)));
            self.latest = Some(self.latest.map_or(t, |e| e.max(t)));
        }
    }
}

/// Expected ambiguity rate: the exact value for the scenario and the
/// `1/2^l` approximation quoted for honest runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedRate {
    pub exact: f64,
    pub exact_fraction: String,
    pub derivation: &'static str,
    pub paper_approximation: f64,
    pub paper_approximation_fraction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub config: ScenarioConfig,
    pub trials: u64,
    pub seed: u64,
    /// B1's verdicts, all four kinds listed.
    pub outcome_counts: BTreeMap<OutcomeKind, u64>,
    /// Trials where B1 and B2 reached different verdicts.
    pub verdict_disagreements: u64,
    pub ambiguity_rate: f64,
    pub expected_rate: ExpectedRate,
    /// Ambiguity count against the exact expected rate.
    pub z_score: ZScore,
    pub expected_distribution: Distribution,
    pub comparison: Comparison,
    pub knowledge_times: BTreeMap<StationId, KnowledgeSummary>,
    pub intercept: Option<InterceptSummary>,
    /// Comparison consistent, B1 and B2 always agree, and B3 never misreads.
    pub consistent: bool,
}

#[derive(Default)]
struct Tally {
    counts: BTreeMap<OutcomeKind, u64>,
    disagreements: u64,
    knowledge: BTreeMap<StationId, KnowledgeSummary>,
    intercept: Option<InterceptSummary>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_default() += c;
        }
        self.disagreements += other.disagreements;
        for (s, k) in &other.knowledge {
            self.knowledge.entry(*s).or_default().merge(k);
        }
        if let Some(o) = &other.intercept {
            self.intercept.get_or_insert_with(Default::default).merge(o);
        }
        self
    }
}

/// Bob-side stations whose knowledge time is tracked.
pub fn observers(variant: Variant, with_b3: bool) -> Vec<StationId> {
    let mut out = vec![StationId::B1];
    if variant == Variant::Symmetric {
        out.push(StationId::B2);
    }
    if with_b3 {
        out.push(StationId::B3);
    }
    out
}

/// Runs `trials` independent seeded protocol instances of `cfg`.
pub fn run_trials(cfg: &ScenarioConfig, trials: u64) -> Result<TrialReport, HarnessError> {
    run_trials_with(cfg, trials, None)
}

/// As [`run_trials`], optionally with a deliberately broken engine.
pub fn run_trials_with(
    cfg: &ScenarioConfig,
    trials: u64,
    fault: Option<Fault>,
) -> Result<TrialReport, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.trials = trials;
    cfg.validate()?;
    let mut run_cfg = cfg.run_config()?;
    run_cfg.fault = fault;
    let with_b3 = run_cfg.effective_geometry()?.has(StationId::B3);
    let watch = observers(cfg.variant, with_b3);
    let master = Seed(cfg.seed);

    let tally = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Tally, HarnessError> {
            let inputs = RunInputs::sample(&run_cfg, cfg.bit.fixed(), master.trial(i))?;
            let run = run_protocol(&run_cfg, &inputs)?;
            let mut t = Tally::default();
            t.counts.insert(run.outcome().kind(), 1);
            t.disagreements = u64::from(!run.verdicts_agree());
            for &station in &watch {
                let when = match earliest_knowledge_time(&run.transcript, &[station]) {
                    Ok(when) => Some(when),
                    Err(SpacetimeError::NeverKnown) => None,
                    Err(e) => return Err(crate::protocol::ProtocolError::from(e).into()),
                };
                t.knowledge.entry(station).or_default().observe(when);
            }
            if let Some(ic) = run.intercept {
                let truth = run_cfg.adversary.bit_for(StationId::A1, &inputs.alice);
                let mut s = InterceptSummary {
                    earliest: Some(ic.time),
                    latest: Some(ic.time),
                    ..Default::default()
                };
                match ic.bit {
                    None => s.indeterminate = 1,
                    Some(b) if b == truth => s.agree = 1,
                    Some(_) => s.disagree = 1,
                }
                t.intercept = Some(s);
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let mut counts = tally.counts;
    for k in OutcomeKind::ALL {
        counts.entry(k).or_insert(0);
    }
    let expected = analytic_distribution(cfg.variant, &cfg.adversary, cfg.l, cfg.bit)?;
    let comparison = compare_counts(&counts, &expected);
    let ambiguous = counts[&OutcomeKind::Ambiguous];
    let exact = expected.probability(OutcomeKind::Ambiguous);
    let expected_rate = ExpectedRate {
        exact: ratio_f64(exact),
        exact_fraction: exact.to_string(),
        derivation: "exact",
        paper_approximation: 0.5f64.powi(cfg.l as i32),
        paper_approximation_fraction: format!("1/2^{}", cfg.l),
    };
    let intercept_ok = tally.intercept.as_ref().is_none_or(|s| s.disagree == 0);
    Ok(TrialReport {
        trials,
        seed: cfg.seed,
        ambiguity_rate: ambiguous as f64 / trials as f64,
        z_score: comparison.z_scores[&OutcomeKind::Ambiguous],
        consistent: comparison.consistent && tally.disagreements == 0 && intercept_ok,
        outcome_counts: counts,
        verdict_disagreements: tally.disagreements,
        expected_rate,
        expected_distribution: expected,
        comparison,
        knowledge_times: tally.knowledge,
        intercept: tally.intercept,
        config: cfg,
    })
}

const CSV_HEADER: [&str; 21] = [
    "variant",
    "l",
    "d",
    "c",
    "delta",
    "adversary",
    "bit",
    "seed",
    "trials",
    "revealed_0",
    "revealed_1",
    "ambiguous",
    "cheat_detected",
    "verdict_disagreements",
    "ambiguity_rate",
    "expected_exact",
    "paper_approximation",
    "z_score",
    "b1_earliest",
    "b1_never",
    "consistent",
];

fn seconds_or_dash(t: Option<Seconds>) -> String {
    t.map_or_else(|| "-".to_string(), |t| t.to_string())
}

impl TrialReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn csv_header() -> String {
        CSV_HEADER.join(",")
    }

    /// One CSV record, without the header.
    pub fn to_csv_row(&self) -> String {
        let c = &self.config;
        let b1 = self.knowledge_times.get(&StationId::B1).cloned().unwrap_or_default();
        let fields = [
            c.variant.to_string(),
            c.l.to_string(),
            c.d.to_string(),
            c.c.to_string(),
            c.delta.to_string(),
            c.adversary.to_string(),
            c.bit.to_string(),
            self.seed.to_string(),
            self.trials.to_string(),
            self.outcome_counts[&OutcomeKind::Revealed0].to_string(),
            self.outcome_counts[&OutcomeKind::Revealed1].to_string(),
            self.outcome_counts[&OutcomeKind::Ambiguous].to_string(),
            self.outcome_counts[&OutcomeKind::CheatDetected].to_string(),
            self.verdict_disagreements.to_string(),
            self.ambiguity_rate.to_string(),
            self.expected_rate.exact.to_string(),
            self.expected_rate.paper_approximation.to_string(),
            self.z_score.to_string(),
            seconds_or_dash(b1.earliest),
            b1.never.to_string(),
            self.consistent.to_string(),
        ];
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&fields).expect("in-memory write");
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf-8 fields").trim_end().to_string()
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.to_csv_row())
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!(
            "scenario: {} l={} d={} c={} delta={} adversary={} bit={}",
            c.variant, c.l, c.d, c.c, c.delta, c.adversary, c.bit
        ));
        line(format!("trials: {}  seed: {}", self.trials, self.seed));
        for (k, n) in &self.outcome_counts {
            line(format!(
                "  {:<15} {:>10}  expected p = {}  z = {}",
                k.label(),
                n,
                self.expected_distribution.probability(*k),
                self.comparison.z_scores[k]
            ));
        }
        line(format!(
            "ambiguity rate: {:.6e}  exact {} = {:.6e}  paper approximation {} = {:.6e}",
            self.ambiguity_rate,
            self.expected_rate.exact_fraction,
            self.expected_rate.exact,
            self.expected_rate.paper_approximation_fraction,
            self.expected_rate.paper_approximation
        ));
        line(format!("verdict disagreements (B1 vs B2): {}", self.verdict_disagreements));
        for (station, k) in &self.knowledge_times {
            let show = |t: Option<Seconds>| t.map_or("-".to_string(), |t| format!("{t} s (~{})", t.decimal()));
            line(format!(
                "knowledge time {station}: earliest {}  latest {}  never {}",
                show(k.earliest),
                show(k.latest),
                k.never
            ));
        }
        if let Some(ic) = &self.intercept {
            line(format!(
                "B3 intercept: agree {}  disagree {}  indeterminate {}  at {}",
                ic.agree,
                ic.disagree,
                ic.indeterminate,
                seconds_or_dash(ic.earliest)
            ));
        }
        line(format!("consistent: {}", self.consistent));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryStrategy;
    use crate::config::BitChoice;
    use crate::protocol::CommitmentBit;

    fn scenario(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_kv(text).unwrap()
    }

    #[test]
    fn counts_sum_to_trials() {
        let r = run_trials(&scenario("l=6\nseed=11"), 2000).unwrap();
        assert_eq!(r.outcome_counts.values().sum::<u64>(), 2000);
        assert!((0.0..=1.0).contains(&r.ambiguity_rate));
        assert!(r.consistent, "{}", r.to_text());
        assert_eq!(r.verdict_disagreements, 0);
    }

    #[test]
    fn single_honest_trial_reveals_or_is_ambiguous() {
        for bit in CommitmentBit::BOTH {
            let mut cfg = scenario("l=16");
            cfg.bit = BitChoice::Fixed(bit);
            let r = run_trials(&cfg, 1).unwrap();
            let ok = r.outcome_counts[&OutcomeKind::Ambiguous]
                + r.outcome_counts[&crate::protocol::UnveilOutcome::Revealed(bit).kind()];
            assert_eq!(ok, 1);
        }
    }

    #[test]
    fn different_bits_always_caught() {
        let r = run_trials(&scenario("l=16\nadversary=alice-diff-bit:0,1"), 5000).unwrap();
        assert_eq!(r.outcome_counts[&OutcomeKind::CheatDetected], 5000);
        assert!(r.consistent);
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        assert!(matches!(run_trials(&scenario("l=4"), 0), Err(HarnessError::Config(_))));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let cfg = scenario("l=5\nseed=3\nadversary=bob-b3");
        let a = run_trials(&cfg, 500).unwrap().to_json();
        let b = run_trials(&cfg, 500).unwrap().to_json();
        assert_eq!(a, b);
        let other = run_trials(&scenario("l=5\nseed=4\nadversary=bob-b3"), 500).unwrap().to_json();
        assert_ne!(a, other);
    }

    #[test]
    fn b3_reads_the_bit_at_half_time() {
        let r = run_trials(&scenario("l=8\nd=3e8\nc=3e8\nadversary=bob-b3:mid"), 300).unwrap();
        let ic = r.intercept.as_ref().unwrap();
        assert_eq!(ic.disagree, 0);
        assert_eq!(ic.agree + ic.indeterminate, 300);
        let half: Seconds = "1/2".parse().unwrap();
        assert_eq!(ic.earliest, Some(half));
        assert_eq!(r.knowledge_times[&StationId::B3].earliest, Some(half));
        assert_eq!(r.knowledge_times[&StationId::B1].earliest, Some("1".parse().unwrap()));
    }

    #[test]
    fn inverted_verdicts_are_flagged() {
        let mut cfg = scenario("l=8");
        cfg.bit = BitChoice::Fixed(CommitmentBit::One);
        let r = run_trials_with(&cfg, 1000, Some(Fault::InvertRevealed)).unwrap();
        assert!(!r.consistent);
        assert!(r.comparison.z_scores[&OutcomeKind::Revealed0].0.is_infinite());
    }

    #[test]
    fn csv_row_matches_header_and_quotes_commas() {
        let cfg = scenario("l=4\nadversary=alice-diff-bit:1,0");
        let r = run_trials(&cfg, 50).unwrap();
        let csv = r.to_csv();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let headers = reader.headers().unwrap().clone();
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(headers.len(), rows[0].len());
        assert_eq!(&rows[0][5], "alice-diff-bit:1,0");
        assert_eq!(&rows[0][12], "50");
    }

    #[test]
    fn report_embeds_config() {
        let cfg = scenario("l=4\nvariant=subordinate\nadversary=alice-diff-key\nseed=9");
        let r = run_trials(&cfg, 10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let back: ScenarioConfig = serde_json::from_value(v["config"].clone()).unwrap();
        let mut expect = cfg.clone();
        expect.trials = 10;
        assert_eq!(back, expect);
        assert_eq!(back.adversary, AdversaryStrategy::AliceDifferentKeys { keys: None });
    }
}
