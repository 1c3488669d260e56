//! Cheating strategies and the decidability oracle.
//!
//! Alice's only meaningful classical choices are made before she commits:
//! whether her two stations use the same bit and whether they use the same
//! key. Bob's only deviation is an extra station placed between his two
//! official ones. [`KnowledgeView`] decides, from the payloads a set of Bob
//! stations hold, whether the committed bit is already pinned down.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bitchain::{BitChain, BitChainError};
use crate::protocol::{commit_response, ChallengePair, CommitmentBit, ProtocolError};
use crate::spacetime::{EventRecord, Geometry, Meters, StationId, StepTag};

/// Alice's private inputs: the bit she means to commit and her key(s).
/// `eta_second` equals `eta` unless the stations use different keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliceSecrets {
    pub b: CommitmentBit,
    pub eta: BitChain,
    pub eta_second: BitChain,
}

impl AliceSecrets {
    pub fn honest(b: CommitmentBit, eta: BitChain) -> Self {
        AliceSecrets {
            b,
            eta,
            eta_second: eta,
        }
    }
}

/// Extension point for Alice-side behaviour and Bob-side topology.
pub trait CommitBehavior: Sync {
    fn bit_for(&self, station: StationId, secrets: &AliceSecrets) -> CommitmentBit;

    fn key_for(&self, station: StationId, secrets: &AliceSecrets) -> BitChain;

    /// The chain `station` sends back at commit time.
    fn commitment(
        &self,
        station: StationId,
        secrets: &AliceSecrets,
        challenge: &ChallengePair,
    ) -> Result<BitChain, BitChainError> {
        commit_response(
            &self.key_for(station, secrets),
            self.bit_for(station, secrets),
            challenge,
        )
    }

    /// Where Bob hides an extra station, if anywhere.
    fn interception_point(&self, _geometry: &Geometry) -> Result<Option<Meters>, ProtocolError> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryStrategy {
    Honest,
    /// A1 commits `a1`, A2 commits `a2`.
    AliceDifferentBit { a1: CommitmentBit, a2: CommitmentBit },
    /// A1 and A2 pad with different keys. `None` draws them at random.
    AliceDifferentKeys { keys: Option<(BitChain, BitChain)> },
    /// Bob adds B3; `None` places it half way between B1 and B2.
    BobMidpointStation { position: Option<Meters> },
}

impl AdversaryStrategy {
    pub fn validate(&self, l: usize) -> Result<(), ProtocolError> {
        match self {
            AdversaryStrategy::AliceDifferentBit { a1, a2 } if a1 == a2 => Err(ProtocolError::Config(
                "alice-diff-bit needs two different bits".into(),
            )),
            AdversaryStrategy::AliceDifferentKeys { keys: Some((k1, k2)) } => {
                if k1.len() != l || k2.len() != l {
                    return Err(ProtocolError::Config(format!("alice-diff-key keys must have length {l}")));
                }
                if k1 == k2 {
                    return Err(ProtocolError::Config("alice-diff-key needs two different keys".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Short name without parameters.
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::Honest => "honest",
            AdversaryStrategy::AliceDifferentBit { .. } => "alice-diff-bit",
            AdversaryStrategy::AliceDifferentKeys { .. } => "alice-diff-key",
            AdversaryStrategy::BobMidpointStation { .. } => "bob-b3",
        }
    }
}

impl CommitBehavior for AdversaryStrategy {
    fn bit_for(&self, station: StationId, secrets: &AliceSecrets) -> CommitmentBit {
        match (self, station) {
            (AdversaryStrategy::AliceDifferentBit { a1, .. }, StationId::A1) => *a1,
            (AdversaryStrategy::AliceDifferentBit { a2, .. }, _) => *a2,
            _ => secrets.b,
        }
    }

    fn key_for(&self, station: StationId, secrets: &AliceSecrets) -> BitChain {
        match (self, station) {
            (AdversaryStrategy::AliceDifferentKeys { keys: Some((k1, _)) }, StationId::A1) => *k1,
            (AdversaryStrategy::AliceDifferentKeys { keys: Some((_, k2)) }, _) => *k2,
            (AdversaryStrategy::AliceDifferentKeys { keys: None }, StationId::A2) => secrets.eta_second,
            _ => secrets.eta,
        }
    }

    fn interception_point(&self, geometry: &Geometry) -> Result<Option<Meters>, ProtocolError> {
        match self {
            AdversaryStrategy::BobMidpointStation { position: Some(p) } => Ok(Some(*p)),
            AdversaryStrategy::BobMidpointStation { position: None } => {
                Ok(Some(geometry.d().half().map_err(crate::spacetime::SpacetimeError::from)?))
            }
            _ => Ok(None),
        }
    }
}

/// The chain `station` emits at commit time under `strategy`.
pub fn apply_alice_strategy(
    strategy: &AdversaryStrategy,
    station: StationId,
    secrets: &AliceSecrets,
    challenge: &ChallengePair,
) -> Result<BitChain, BitChainError> {
    strategy.commitment(station, secrets, challenge)
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryStrategy::Honest => f.write_str("honest"),
            AdversaryStrategy::AliceDifferentBit { a1, a2 } => write!(f, "alice-diff-bit:{a1},{a2}"),
            AdversaryStrategy::AliceDifferentKeys { keys: None } => f.write_str("alice-diff-key"),
            AdversaryStrategy::AliceDifferentKeys { keys: Some((k1, k2)) } => {
                write!(f, "alice-diff-key:{},{}", k1.to_hex(), k2.to_hex())
            }
            AdversaryStrategy::BobMidpointStation { position: None } => f.write_str("bob-b3:mid"),
            AdversaryStrategy::BobMidpointStation { position: Some(p) } => write!(f, "bob-b3:{p}"),
        }
    }
}

impl FromStr for AdversaryStrategy {
    type Err = String;

    /// `honest`, `alice-diff-bit:b1,b2`, `alice-diff-key[:k1,k2]`,
    /// `bob-b3[:mid|position]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let two = |p: &str| -> Result<(String, String), String> {
            p.split_once(',')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| format!("{name} expects two comma-separated parameters"))
        };
        match (name, params) {
            ("honest", None) => Ok(AdversaryStrategy::Honest),
            ("alice-diff-bit", Some(p)) => {
                let (a, b) = two(p)?;
                let strategy = AdversaryStrategy::AliceDifferentBit {
                    a1: a.parse()?,
                    a2: b.parse()?,
                };
                strategy.validate(0).map_err(|e| e.to_string())?;
                Ok(strategy)
            }
            ("alice-diff-key", None) => Ok(AdversaryStrategy::AliceDifferentKeys { keys: None }),
            ("alice-diff-key", Some(p)) => {
                let (a, b) = two(p)?;
                let k1: BitChain = a.parse().map_err(|e: BitChainError| e.to_string())?;
                let k2: BitChain = b.parse().map_err(|e: BitChainError| e.to_string())?;
                Ok(AdversaryStrategy::AliceDifferentKeys { keys: Some((k1, k2)) })
            }
            ("bob-b3", None) | ("bob-b3", Some("mid")) => {
                Ok(AdversaryStrategy::BobMidpointStation { position: None })
            }
            ("bob-b3", Some(p)) => Ok(AdversaryStrategy::BobMidpointStation {
                position: Some(p.parse().map_err(|e| format!("bad B3 position: {e}"))?),
            }),
            _ => Err(format!("unknown adversary strategy {s:?}")),
        }
    }
}

impl Serialize for AdversaryStrategy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AdversaryStrategy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// What B3 reads from the two cross pairs: the bit whose entries match, if
/// exactly one does.
pub fn b3_intercept(
    lambda: &[BitChain; 2],
    zeta: &[BitChain; 2],
) -> Result<Option<CommitmentBit>, BitChainError> {
    let eq0 = lambda[0].checked_eq(&zeta[0])?;
    let eq1 = lambda[1].checked_eq(&zeta[1])?;
    Ok(match (eq0, eq1) {
        (true, false) => Some(CommitmentBit::Zero),
        (false, true) => Some(CommitmentBit::One),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Determined(CommitmentBit),
    Undetermined,
}

/// Protocol values held by one or more Bob-side stations.
///
/// Each field is what the protocol calls it: `n` and `m` are the challenges
/// of B1 and B2, `commitment_a1`/`commitment_a2` Alice's replies, `lambda`
/// and `zeta` the cross pairs of B1 and B2, `eta` the key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KnowledgeView {
    pub n: Option<[BitChain; 2]>,
    pub m: Option<[BitChain; 2]>,
    pub commitment_a1: Option<BitChain>,
    pub commitment_a2: Option<BitChain>,
    pub lambda: Option<[BitChain; 2]>,
    pub zeta: Option<[BitChain; 2]>,
    pub eta: Option<BitChain>,
}

fn learn<T: PartialEq + Copy>(slot: &mut Option<T>, value: T) -> bool {
    if *slot == Some(value) {
        false
    } else {
        *slot = Some(value);
        true
    }
}

impl KnowledgeView {
    /// Folds in the payload of a transcript event seen by `station`.
    /// Returns whether the view changed.
    pub fn absorb(&mut self, station: StationId, record: &EventRecord) -> bool {
        let (origin, payload) = match record {
            EventRecord::Sent { payload, .. } => (station, payload),
            EventRecord::Received { from, payload, .. } => (*from, payload),
            _ => return false,
        };
        match (payload.tag, origin, payload.chains.as_slice()) {
            (StepTag::Challenge, StationId::B1, [a, b]) => learn(&mut self.n, [*a, *b]),
            (StepTag::Challenge, StationId::B2, [a, b]) => learn(&mut self.m, [*a, *b]),
            (StepTag::Commitment, StationId::A1, [c]) => learn(&mut self.commitment_a1, *c),
            (StepTag::Commitment, StationId::A2, [c]) => learn(&mut self.commitment_a2, *c),
            (StepTag::Cross, StationId::B1, [a, b]) => learn(&mut self.lambda, [*a, *b]),
            (StepTag::Cross, StationId::B2, [a, b]) => learn(&mut self.zeta, [*a, *b]),
            (StepTag::Key, _, [k]) => learn(&mut self.eta, *k),
            (StepTag::Evidence, _, [n0, n1, c]) => {
                let a = learn(&mut self.n, [*n0, *n1]);
                let b = learn(&mut self.commitment_a1, *c);
                a || b
            }
            _ => false,
        }
    }

    /// Whether some honest world with committed bit `b` produces this view.
    ///
    /// Given `b`, an honest world is fixed by the key and the two challenge
    /// pairs; the B1-side values and the B2-side values share only the key.
    /// So `b` is consistent iff each side is internally consistent and every
    /// value that pins the key agrees on it.
    pub fn consistent_with(&self, b: CommitmentBit) -> bool {
        let i = b.index();
        let distinct = |p: &Option<[BitChain; 2]>| p.is_none_or(|[x, y]| x != y);
        if !(distinct(&self.n) && distinct(&self.m) && distinct(&self.lambda) && distinct(&self.zeta)) {
            return false;
        }
        let side_ok = |ch: &Option<[BitChain; 2]>, c: &Option<BitChain>, cross: &Option<[BitChain; 2]>| {
            match (ch, c, cross) {
                (Some(ch), Some(c), Some(cross)) => cross[0] == xor(c, &ch[0]) && cross[1] == xor(c, &ch[1]),
                (Some(ch), None, Some(cross)) => xor(&cross[0], &cross[1]) == xor(&ch[0], &ch[1]),
                _ => true,
            }
        };
        if !side_ok(&self.n, &self.commitment_a1, &self.lambda) || !side_ok(&self.m, &self.commitment_a2, &self.zeta) {
            return false;
        }
        let mut key_candidates = Vec::with_capacity(5);
        key_candidates.extend(self.eta);
        if let (Some(n), Some(c)) = (self.n, self.commitment_a1) {
            key_candidates.push(xor(&c, &n[i]));
        }
        if let (Some(m), Some(c)) = (self.m, self.commitment_a2) {
            key_candidates.push(xor(&c, &m[i]));
        }
        key_candidates.extend(self.lambda.map(|p| p[i]));
        key_candidates.extend(self.zeta.map(|p| p[i]));
        key_candidates.windows(2).all(|w| w[0] == w[1])
    }

    pub fn decide(&self) -> Decision {
        match (
            self.consistent_with(CommitmentBit::Zero),
            self.consistent_with(CommitmentBit::One),
        ) {
            (true, false) => Decision::Determined(CommitmentBit::Zero),
            (false, true) => Decision::Determined(CommitmentBit::One),
            _ => Decision::Undetermined,
        }
    }
}

fn xor(a: &BitChain, b: &BitChain) -> BitChain {
    // views are built from one run, so lengths agree
    a.xor(b).expect("chains within one view share a length")
}

/// Whether one station's pre-unveil view pins the committed bit.
pub fn single_station_decidability(view: &KnowledgeView) -> Decision {
    view.decide()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::bitchain::random_distinct;
    use crate::protocol::derive_cross;

    fn c(s: &str) -> BitChain {
        s.parse().unwrap()
    }

    fn pair(a: &str, b: &str) -> ChallengePair {
        ChallengePair::new(c(a), c(b)).unwrap()
    }

    #[test]
    fn strategy_commitments() {
        let eta = c("1100");
        let n = pair("1010", "0101");
        let m = pair("0011", "1110");
        let secrets = AliceSecrets::honest(CommitmentBit::Zero, eta);
        let honest = AdversaryStrategy::Honest;
        assert_eq!(apply_alice_strategy(&honest, StationId::A1, &secrets, &n).unwrap(), eta.xor(&c("1010")).unwrap());
        assert_eq!(apply_alice_strategy(&honest, StationId::A2, &secrets, &m).unwrap(), eta.xor(&c("0011")).unwrap());

        let diff_bit = AdversaryStrategy::AliceDifferentBit { a1: CommitmentBit::Zero, a2: CommitmentBit::One };
        assert_eq!(apply_alice_strategy(&diff_bit, StationId::A1, &secrets, &n).unwrap(), eta.xor(&c("1010")).unwrap());
        assert_eq!(apply_alice_strategy(&diff_bit, StationId::A2, &secrets, &m).unwrap(), eta.xor(&c("1110")).unwrap());

        let (k1, k2) = (c("0001"), c("1000"));
        let diff_key = AdversaryStrategy::AliceDifferentKeys { keys: Some((k1, k2)) };
        let one = AliceSecrets::honest(CommitmentBit::One, eta);
        assert_eq!(apply_alice_strategy(&diff_key, StationId::A1, &one, &n).unwrap(), k1.xor(&c("0101")).unwrap());
        assert_eq!(apply_alice_strategy(&diff_key, StationId::A2, &one, &m).unwrap(), k2.xor(&c("1110")).unwrap());

        let random_keys = AdversaryStrategy::AliceDifferentKeys { keys: None };
        let secrets = AliceSecrets { b: CommitmentBit::Zero, eta: k1, eta_second: k2 };
        assert_eq!(random_keys.key_for(StationId::A1, &secrets), k1);
        assert_eq!(random_keys.key_for(StationId::A2, &secrets), k2);
    }

    #[test]
    fn strategy_strings_round_trip() {
        for s in ["honest", "alice-diff-bit:0,1", "alice-diff-bit:1,0", "alice-diff-key", "alice-diff-key:5/4,a/4", "bob-b3:mid", "bob-b3:100000000", "bob-b3:1/3"] {
            let parsed: AdversaryStrategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert_eq!("bob-b3".parse::<AdversaryStrategy>().unwrap(), AdversaryStrategy::BobMidpointStation { position: None });
        assert!("alice-diff-bit:1,1".parse::<AdversaryStrategy>().is_err());
        assert!("alice-diff-bit".parse::<AdversaryStrategy>().is_err());
        assert!("mallory".parse::<AdversaryStrategy>().is_err());
        let same_keys = AdversaryStrategy::AliceDifferentKeys { keys: Some((c("01"), c("01"))) };
        assert!(same_keys.validate(2).is_err());
    }

    #[test]
    fn intercept_examples() {
        let eta = c("0110");
        assert_eq!(b3_intercept(&[eta, c("0001")], &[eta, c("1000")]).unwrap(), Some(CommitmentBit::Zero));
        assert_eq!(b3_intercept(&[eta, c("0001")], &[eta, c("0001")]).unwrap(), None);
        assert_eq!(b3_intercept(&[c("1111"), c("0001")], &[eta, c("1000")]).unwrap(), None);
        assert!(b3_intercept(&[eta, eta], &[c("01"), c("10")]).is_err());
    }

    /// Brute-force reference: is there a key for which the view is an
    /// honest run committing `b`?
    fn reference_consistent(view: &KnowledgeView, b: CommitmentBit, l: usize) -> bool {
        BitChain::enumerate(l).unwrap().any(|eta| {
            let n_ok = match (view.n, view.commitment_a1) {
                (Some(n), Some(commitment)) => eta.xor(&n[b.index()]).unwrap() == commitment,
                _ => true,
            };
            let key_ok = view.eta.is_none_or(|k| k == eta);
            n_ok && key_ok
        })
    }

    #[test]
    fn honest_single_station_views_are_undetermined() {
        for l in 1..=10usize {
            let mut rng = ChaCha8Rng::seed_from_u64(l as u64);
            for _ in 0..4 {
                let v = random_distinct(2, l, &mut rng).unwrap();
                let n = ChallengePair::new(v[0], v[1]).unwrap();
                let eta = BitChain::random(l, &mut rng).unwrap();
                let b = if rng.random::<bool>() { CommitmentBit::One } else { CommitmentBit::Zero };
                let commitment = commit_response(&eta, b, &n).unwrap();
                let view = KnowledgeView { n: Some(*n.chains()), commitment_a1: Some(commitment), ..Default::default() };
                for bit in CommitmentBit::BOTH {
                    assert!(reference_consistent(&view, bit, l));
                    assert!(view.consistent_with(bit));
                }
                assert_eq!(single_station_decidability(&view), Decision::Undetermined);

                let with_key = KnowledgeView { eta: Some(eta), ..view };
                assert_eq!(single_station_decidability(&with_key), Decision::Determined(b));
                for bit in CommitmentBit::BOTH {
                    assert_eq!(reference_consistent(&with_key, bit, l), bit == b);
                }
            }
        }
    }

    #[test]
    fn commitment_never_repeats_a_pad_across_entries() {
        // xor(N, n0) == xor(N, n1) would need n0 == n1
        let n = pair("0110", "0111");
        for commitment in BitChain::enumerate(4).unwrap() {
            let [x, y] = derive_cross(&commitment, &n).unwrap();
            assert_ne!(x, y);
        }
    }

    #[test]
    fn cross_pairs_determine_the_bit() {
        let eta = c("1011");
        let n = pair("0001", "0110");
        let m = pair("1100", "0100");
        let b = CommitmentBit::One;
        let lambda = derive_cross(&commit_response(&eta, b, &n).unwrap(), &n).unwrap();
        let zeta = derive_cross(&commit_response(&eta, b, &m).unwrap(), &m).unwrap();
        let b3 = KnowledgeView { lambda: Some(lambda), zeta: Some(zeta), ..Default::default() };
        assert_eq!(b3.decide(), Decision::Determined(b));
        let b3_half = KnowledgeView { lambda: Some(lambda), ..Default::default() };
        assert_eq!(b3_half.decide(), Decision::Undetermined);
    }
}
