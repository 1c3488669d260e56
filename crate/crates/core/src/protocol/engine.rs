//! Station state machines driven by the spacetime scheduler.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{b3_intercept, AdversaryStrategy, AliceSecrets, CommitBehavior};
use crate::bitchain::{random_distinct, BitChain, MAX_BITS};
use crate::seed::Seed;
use crate::spacetime::{
    run_schedule, Exact, Geometry, Handler, HandlerError, InitialEvent, Outbox, Payload, Seconds,
    StationId, StepTag, Stimulus, Transcript,
};

use super::{
    derive_cross, subordinate_unveil, unveil_verdict, ChallengePair,
    CommitmentBit, ProtocolError, UnveilOutcome, Variant,
};

/// Deliberate verdict corruption, used only as a negative control for the
/// verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Bob reports the opposite bit whenever he would reveal one.
    InvertRevealed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub variant: Variant,
    pub l: usize,
    pub geometry: Geometry,
    /// Commit deadline; zero is the idealized protocol.
    pub delta: Seconds,
    pub adversary: AdversaryStrategy,
    pub fault: Option<Fault>,
}

impl RunConfig {
    pub fn new(variant: Variant, l: usize, geometry: Geometry) -> Self {
        RunConfig {
            variant,
            l,
            geometry,
            delta: Seconds::ZERO,
            adversary: AdversaryStrategy::Honest,
            fault: None,
        }
    }

    pub fn with_adversary(mut self, adversary: AdversaryStrategy) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn with_delta(mut self, delta: Seconds) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.l == 0 || self.l > MAX_BITS {
            return Err(ProtocolError::Config(format!(
                "l must be in 1..={MAX_BITS}, got {}",
                self.l
            )));
        }
        if self.delta.0.is_negative() {
            return Err(ProtocolError::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        let limit = self.geometry.span_time()?.0.div(Exact::int(10)).map_err(crate::spacetime::SpacetimeError::from)?;
        if self.delta.0 >= limit {
            return Err(ProtocolError::Config(format!(
                "delta {} must be well below d/c (limit d/(10c) = {limit})",
                self.delta
            )));
        }
        self.adversary.validate(self.l)
    }

    /// Geometry with B3 placed when the strategy asks for one.
    pub fn effective_geometry(&self) -> Result<Geometry, ProtocolError> {
        effective_geometry(&self.geometry, &self.adversary)
    }
}

fn effective_geometry(
    geometry: &Geometry,
    behavior: &dyn CommitBehavior,
) -> Result<Geometry, ProtocolError> {
    Ok(match behavior.interception_point(geometry)? {
        Some(p) => geometry.clone().with_b3(p),
        None => geometry.clone(),
    })
}

/// Everything the stations draw locally: Alice's bit and keys, B1's and
/// B2's challenges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInputs {
    pub alice: AliceSecrets,
    pub n: ChallengePair,
    /// Absent in the subordinate variant, where B2 issues no challenge.
    pub m: Option<ChallengePair>,
}

impl RunInputs {
    /// Draws inputs from per-station substreams of `seed`. `bit` fixes the
    /// committed bit; `None` lets Alice pick it uniformly.
    pub fn sample(
        cfg: &RunConfig,
        bit: Option<CommitmentBit>,
        seed: Seed,
    ) -> Result<Self, ProtocolError> {
        let l = cfg.l;
        let mut alice_rng = seed.derive("alice").rng();
        let b = match bit {
            Some(b) => b,
            None if alice_rng.random::<bool>() => CommitmentBit::One,
            None => CommitmentBit::Zero,
        };
        let (eta, eta_second) = match cfg.adversary {
            AdversaryStrategy::AliceDifferentKeys { keys: None } => {
                let keys = random_distinct(2, l, &mut alice_rng)?;
                (keys[0], keys[1])
            }
            _ => {
                let eta = BitChain::random(l, &mut alice_rng)?;
                (eta, eta)
            }
        };
        let pair = |label: &str| -> Result<ChallengePair, ProtocolError> {
            let v = random_distinct(2, l, &mut seed.derive(label).rng())?;
            ChallengePair::new(v[0], v[1])
        };
        let n = pair("B1")?;
        let m = match cfg.variant {
            Variant::Symmetric => Some(pair("B2")?),
            Variant::Subordinate => None,
        };
        Ok(RunInputs {
            alice: AliceSecrets { b, eta, eta_second },
            n,
            m,
        })
    }

    fn validate(&self, cfg: &RunConfig) -> Result<(), ProtocolError> {
        let l = cfg.l;
        let lens = [
            self.alice.eta.len(),
            self.alice.eta_second.len(),
            self.n.len(),
            self.m.map_or(l, |m| m.len()),
        ];
        if lens.iter().any(|&x| x != l) {
            return Err(ProtocolError::Config(format!("inputs must all have length {l}")));
        }
        if cfg.variant == Variant::Symmetric && self.m.is_none() {
            return Err(ProtocolError::Config("symmetric variant needs B2's challenge".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationVerdict {
    pub station: StationId,
    pub outcome: UnveilOutcome,
    pub time: Seconds,
}

/// What B3 learned, and when.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intercept {
    pub time: Seconds,
    pub bit: Option<CommitmentBit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolRun {
    pub transcript: Transcript,
    pub geometry: Geometry,
    /// B1 first, then B2 in the symmetric variant.
    pub verdicts: Vec<StationVerdict>,
    pub intercept: Option<Intercept>,
    /// Latest time at which an Alice station committed.
    pub commit_time: Seconds,
}

impl ProtocolRun {
    /// B1's verdict.
    pub fn outcome(&self) -> UnveilOutcome {
        self.verdicts[0].outcome
    }

    pub fn verdicts_agree(&self) -> bool {
        self.verdicts.iter().all(|v| v.outcome == self.verdicts[0].outcome)
    }
}

struct AliceState {
    received_challenge: Option<ChallengePair>,
    committed_at: Option<Seconds>,
}

#[derive(Default)]
struct BobState {
    challenge: Option<ChallengePair>,
    received_commitment: Option<BitChain>,
    own_cross: Option<[BitChain; 2]>,
    received_cross: Option<[BitChain; 2]>,
    key: Option<BitChain>,
    verdict: Option<StationVerdict>,
}

#[derive(Default)]
struct InterceptorState {
    lambda: Option<[BitChain; 2]>,
    zeta: Option<[BitChain; 2]>,
    evidence: Option<(ChallengePair, BitChain)>,
    key: Option<BitChain>,
    result: Option<Intercept>,
}

struct Network<'a> {
    variant: Variant,
    behavior: &'a dyn CommitBehavior,
    secrets: &'a AliceSecrets,
    delta: Seconds,
    has_b3: bool,
    fault: Option<Fault>,
    a1: AliceState,
    a2: AliceState,
    b1: BobState,
    b2: BobState,
    b3: InterceptorState,
}

fn unexpected(station: StationId, what: &str) -> HandlerError {
    format!("{station} did not expect {what}").into()
}

fn pair_of(payload: &Payload) -> Result<[BitChain; 2], HandlerError> {
    match payload.chains.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(format!("{} payload must hold two chains", payload.tag).into()),
    }
}

fn single(payload: &Payload) -> Result<BitChain, HandlerError> {
    match payload.chains.as_slice() {
        [a] => Ok(*a),
        _ => Err(format!("{} payload must hold one chain", payload.tag).into()),
    }
}

impl Network<'_> {
    fn alice_mut(&mut self, station: StationId) -> &mut AliceState {
        match station {
            StationId::A1 => &mut self.a1,
            _ => &mut self.a2,
        }
    }

    fn bob_mut(&mut self, station: StationId) -> &mut BobState {
        match station {
            StationId::B1 => &mut self.b1,
            _ => &mut self.b2,
        }
    }

    fn corrupt(&self, outcome: UnveilOutcome) -> UnveilOutcome {
        match (self.fault, outcome) {
            (Some(Fault::InvertRevealed), UnveilOutcome::Revealed(b)) => UnveilOutcome::Revealed(b.flip()),
            _ => outcome,
        }
    }

    fn alice(&mut self, station: StationId, stimulus: Stimulus<'_>, out: &mut Outbox) -> Result<(), HandlerError> {
        let partner = if station == StationId::A1 { StationId::B1 } else { StationId::B2 };
        match stimulus {
            Stimulus::Receive(msg) if msg.payload.tag == StepTag::Challenge => {
                let challenge = ChallengePair::new(msg.payload.chains[0], msg.payload.chains[1])?;
                let commitment = self.behavior.commitment(station, self.secrets, &challenge)?;
                let at = out.ready().max(self.delta);
                out.send_at(partner, Payload::new(StepTag::Commitment, vec![commitment]), at);
                let state = self.alice_mut(station);
                state.received_challenge = Some(challenge);
                state.committed_at = Some(at);
                Ok(())
            }
            Stimulus::Wake(_) if station == StationId::A2 && self.variant == Variant::Subordinate => {
                let key = self.behavior.key_for(station, self.secrets);
                let at = out.ready().max(self.delta);
                out.send_at(partner, Payload::new(StepTag::Key, vec![key]), at);
                self.a2.committed_at = Some(at);
                Ok(())
            }
            _ => Err(unexpected(station, "this stimulus")),
        }
    }

    fn bob(&mut self, station: StationId, stimulus: Stimulus<'_>, out: &mut Outbox) -> Result<(), HandlerError> {
        let (alice, partner) = match station {
            StationId::B1 => (StationId::A1, StationId::B2),
            _ => (StationId::A2, StationId::B1),
        };
        let msg = match stimulus {
            Stimulus::Wake(_) => {
                let challenge = self.bob_mut(station).challenge.ok_or_else(|| unexpected(station, "a wake-up"))?;
                out.send(alice, Payload::new(StepTag::Challenge, challenge.chains().to_vec()));
                return Ok(());
            }
            Stimulus::Receive(msg) => msg,
        };
        let has_b3 = self.has_b3;
        match (self.variant, msg.payload.tag) {
            (Variant::Symmetric, StepTag::Commitment) => {
                let commitment = single(&msg.payload)?;
                let state = self.bob_mut(station);
                let challenge = state.challenge.ok_or_else(|| unexpected(station, "a commitment"))?;
                let cross = derive_cross(&commitment, &challenge)?;
                state.received_commitment = Some(commitment);
                state.own_cross = Some(cross);
                out.send(partner, Payload::new(StepTag::Cross, cross.to_vec()));
                if has_b3 {
                    out.send(StationId::B3, Payload::new(StepTag::Cross, cross.to_vec()));
                }
            }
            (Variant::Symmetric, StepTag::Cross) => {
                self.bob_mut(station).received_cross = Some(pair_of(&msg.payload)?);
            }
            (Variant::Subordinate, StepTag::Commitment) if station == StationId::B1 => {
                let commitment = single(&msg.payload)?;
                self.b1.received_commitment = Some(commitment);
                if has_b3 {
                    let [n0, n1] = *self.b1.challenge.ok_or_else(|| unexpected(station, "a commitment"))?.chains();
                    out.send(StationId::B3, Payload::new(StepTag::Evidence, vec![n0, n1, commitment]));
                }
            }
            (Variant::Subordinate, StepTag::Key) if station == StationId::B2 => {
                let key = single(&msg.payload)?;
                out.send(StationId::B1, Payload::new(StepTag::Key, vec![key]));
                if has_b3 {
                    out.send(StationId::B3, Payload::new(StepTag::Key, vec![key]));
                }
                return Ok(());
            }
            (Variant::Subordinate, StepTag::Key) if station == StationId::B1 => {
                self.b1.key = Some(single(&msg.payload)?);
            }
            _ => return Err(unexpected(station, &format!("a {} message", msg.payload.tag))),
        }
        self.try_verdict(station, out)?;
        Ok(())
    }

    fn try_verdict(&mut self, station: StationId, out: &mut Outbox) -> Result<(), HandlerError> {
        let variant = self.variant;
        let state = self.bob_mut(station);
        if state.verdict.is_some() {
            return Ok(());
        }
        let outcome = match variant {
            Variant::Symmetric => {
                let (Some(own), Some(received)) = (state.own_cross, state.received_cross) else {
                    return Ok(());
                };
                // lambda comes from B1, zeta from B2
                let (lambda, zeta) = if station == StationId::B1 { (own, received) } else { (received, own) };
                unveil_verdict(&lambda, &zeta)?
            }
            Variant::Subordinate => {
                let (Some(key), Some(commitment), Some(challenge)) =
                    (state.key, state.received_commitment, state.challenge)
                else {
                    return Ok(());
                };
                subordinate_unveil(&key, &commitment, &challenge)?
            }
        };
        let outcome = self.corrupt(outcome);
        out.note(format!("verdict:{outcome}"));
        self.bob_mut(station).verdict = Some(StationVerdict {
            station,
            outcome,
            time: out.ready(),
        });
        Ok(())
    }

    fn interceptor(&mut self, stimulus: Stimulus<'_>, out: &mut Outbox) -> Result<(), HandlerError> {
        let Stimulus::Receive(msg) = stimulus else {
            return Err(unexpected(StationId::B3, "a wake-up"));
        };
        let state = &mut self.b3;
        match (msg.payload.tag, msg.sender) {
            (StepTag::Cross, StationId::B1) => state.lambda = Some(pair_of(&msg.payload)?),
            (StepTag::Cross, StationId::B2) => state.zeta = Some(pair_of(&msg.payload)?),
            (StepTag::Evidence, _) => match msg.payload.chains.as_slice() {
                [n0, n1, commitment] => state.evidence = Some((ChallengePair::new(*n0, *n1)?, *commitment)),
                _ => return Err("evidence payload must hold three chains".into()),
            },
            (StepTag::Key, _) => state.key = Some(single(&msg.payload)?),
            _ => return Err(unexpected(StationId::B3, &format!("a {} message", msg.payload.tag))),
        }
        if state.result.is_some() {
            return Ok(());
        }
        let bit = match (state.lambda, state.zeta, state.evidence, state.key) {
            (Some(lambda), Some(zeta), _, _) => b3_intercept(&lambda, &zeta)?,
            (_, _, Some((challenge, commitment)), Some(key)) => {
                match subordinate_unveil(&key, &commitment, &challenge)? {
                    UnveilOutcome::Revealed(b) => Some(b),
                    _ => None,
                }
            }
            _ => return Ok(()),
        };
        match bit {
            Some(b) => out.note(format!("intercept:{b}")),
            None => out.note("intercept:indeterminate"),
        }
        state.result = Some(Intercept { time: out.ready(), bit });
        Ok(())
    }
}

impl Handler for Network<'_> {
    fn handle(&mut self, station: StationId, stimulus: Stimulus<'_>, out: &mut Outbox) -> Result<(), HandlerError> {
        match station {
            StationId::A1 | StationId::A2 => self.alice(station, stimulus, out),
            StationId::B1 | StationId::B2 => self.bob(station, stimulus, out),
            StationId::B3 => self.interceptor(stimulus, out),
        }
    }
}

/// Runs one protocol instance with the configured adversary.
pub fn run_protocol(cfg: &RunConfig, inputs: &RunInputs) -> Result<ProtocolRun, ProtocolError> {
    run_protocol_with(cfg, inputs, &cfg.adversary)
}

/// Runs one protocol instance with a caller-supplied Alice behaviour in
/// place of the configured strategy.
pub fn run_protocol_with(
    cfg: &RunConfig,
    inputs: &RunInputs,
    behavior: &dyn CommitBehavior,
) -> Result<ProtocolRun, ProtocolError> {
    cfg.validate()?;
    inputs.validate(cfg)?;
    let geometry = effective_geometry(&cfg.geometry, behavior)?;

    let mut initial = vec![InitialEvent::wake(StationId::B1, Seconds::ZERO, "issue-challenge")];
    match cfg.variant {
        Variant::Symmetric => {
            initial.push(InitialEvent::wake(StationId::B2, Seconds::ZERO, "issue-challenge"))
        }
        Variant::Subordinate => {
            initial.push(InitialEvent::wake(StationId::A2, cfg.delta, "release-key"))
        }
    }

    let mut net = Network {
        variant: cfg.variant,
        behavior,
        secrets: &inputs.alice,
        delta: cfg.delta,
        has_b3: geometry.has(StationId::B3),
        fault: cfg.fault,
        a1: AliceState {
            received_challenge: None,
            committed_at: None,
        },
        a2: AliceState {
            received_challenge: None,
            committed_at: None,
        },
        b1: BobState {
            challenge: Some(inputs.n),
            ..Default::default()
        },
        b2: BobState {
            challenge: inputs.m,
            ..Default::default()
        },
        b3: InterceptorState::default(),
    };

    let transcript = run_schedule(initial, &geometry, &mut net)?;

    let mut verdicts = vec![net.b1.verdict];
    if cfg.variant == Variant::Symmetric {
        verdicts.push(net.b2.verdict);
    }
    let verdicts = verdicts
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| ProtocolError::Config("a Bob station never reached a verdict".into()))?;
    if net.a1.received_challenge.is_none() {
        return Err(ProtocolError::Config("A1 never received a challenge".into()));
    }
    let commit_time = [net.a1.committed_at, net.a2.committed_at]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(Seconds::ZERO);
    Ok(ProtocolRun {
        transcript,
        geometry,
        verdicts,
        intercept: net.b3.result,
        commit_time,
    })
}
