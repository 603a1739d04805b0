//! Experiment topologies and the event loop.
//!
//! A [`Topology`] is a wiring description: units, directed edges between
//! ports, the port the source feeds and the terminal ports (detectors and
//! an optional discard). A [`Network`] instantiates fresh unit states from a
//! topology and routes one messenger at a time until it reaches a terminal.
//! Each unit only sees its own state and the arriving message.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dlm::{check_gamma, Channel};
use crate::error::{Error, Result};
use crate::messages::{Message, Source, SourceSpec};
use crate::optics::{
    AdaptiveKind, AdaptiveUnit, Detector, HalfWavePlate, OutputPolicy, PhaseShifter, QuarterWavePlate,
};

pub type UnitId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UnitKind {
    Bs,
    Pbs,
    Hwp { theta_deg: f64 },
    Qwp { theta_deg: f64 },
    Phase { phi_deg: f64 },
}

impl UnitKind {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, UnitKind::Bs | UnitKind::Pbs)
    }

    /// Number of output ports: two for splitters, one for passive units.
    pub fn out_ports(&self) -> usize {
        if self.is_adaptive() {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub name: String,
    pub kind: UnitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Unit { unit: UnitId, port: Channel },
    Detector(usize),
    Discard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    units: Vec<UnitSpec>,
    edges: Vec<[Option<Endpoint>; 2]>,
    source: Endpoint,
    detectors: usize,
}

impl Topology {
    pub fn units(&self) -> &[UnitSpec] {
        &self.units
    }

    pub fn unit(&self, name: &str) -> Option<(UnitId, &UnitSpec)> {
        self.units.iter().enumerate().find(|(_, u)| u.name == name)
    }

    pub fn source(&self) -> Endpoint {
        self.source
    }

    pub fn detectors(&self) -> usize {
        self.detectors
    }

    /// Where out-port `port` of `unit` leads.
    pub fn edge(&self, unit: UnitId, port: Channel) -> Option<Endpoint> {
        self.edges.get(unit).and_then(|e| e[port.index()])
    }

    pub fn adaptive_count(&self) -> usize {
        self.units.iter().filter(|u| u.kind.is_adaptive()).count()
    }
}

/// Incremental construction of a [`Topology`] with wiring checks.
#[derive(Debug, Default)]
pub struct TopologyBuilder {
    units: Vec<UnitSpec>,
    edges: Vec<[Option<Endpoint>; 2]>,
    detectors: usize,
}

impl TopologyBuilder {
    pub fn new(detectors: usize) -> Self {
        TopologyBuilder {
            detectors,
            ..Default::default()
        }
    }

    pub fn add(&mut self, name: &str, kind: UnitKind) -> Result<UnitId> {
        let angle = match kind {
            UnitKind::Hwp { theta_deg } | UnitKind::Qwp { theta_deg } => Some(theta_deg),
            UnitKind::Phase { phi_deg } => Some(phi_deg),
            _ => None,
        };
        if let Some(angle) = angle {
            if !angle.is_finite() {
                return Err(Error::Config(format!("unit {name}: angle must be finite")));
            }
        }
        self.units.push(UnitSpec {
            name: name.to_string(),
            kind,
        });
        self.edges.push([None, None]);
        Ok(self.units.len() - 1)
    }

    pub fn connect(&mut self, from: UnitId, port: Channel, to: Endpoint) -> Result<()> {
        let spec = self
            .units
            .get(from)
            .ok_or_else(|| Error::Wiring(format!("unknown unit {from}")))?;
        if port.index() >= spec.kind.out_ports() {
            return Err(Error::Wiring(format!("{} has no out-port {}", spec.name, port.index())));
        }
        self.check_target(to)?;
        let slot = &mut self.edges[from][port.index()];
        if slot.is_some() {
            return Err(Error::Wiring(format!(
                "out-port {} of {} is already wired",
                port.index(),
                spec.name
            )));
        }
        *slot = Some(to);
        Ok(())
    }

    fn check_target(&self, to: Endpoint) -> Result<()> {
        match to {
            Endpoint::Unit { unit, port } => {
                let spec = self
                    .units
                    .get(unit)
                    .ok_or_else(|| Error::Wiring(format!("unknown unit {unit}")))?;
                if !spec.kind.is_adaptive() && port != Channel::Zero {
                    return Err(Error::Wiring(format!("{} has a single input", spec.name)));
                }
                Ok(())
            }
            Endpoint::Detector(d) if d >= self.detectors => Err(Error::Wiring(format!("unknown detector {d}"))),
            _ => Ok(()),
        }
    }

    pub fn build(self, source: Endpoint) -> Result<Topology> {
        self.check_target(source)?;
        for (spec, edges) in self.units.iter().zip(&self.edges) {
            for (p, e) in edges.iter().take(spec.kind.out_ports()).enumerate() {
                if e.is_none() {
                    return Err(Error::Wiring(format!("out-port {p} of {} is not wired", spec.name)));
                }
            }
        }
        let topo = Topology {
            units: self.units,
            edges: self.edges,
            source,
            detectors: self.detectors,
        };
        check_acyclic(&topo)?;
        if !reaches_detector(&topo) {
            return Err(Error::Wiring("the source does not reach any detector".into()));
        }
        Ok(topo)
    }
}

fn successors(topo: &Topology, unit: UnitId) -> impl Iterator<Item = UnitId> + '_ {
    topo.edges[unit].iter().filter_map(|e| match e {
        Some(Endpoint::Unit { unit, .. }) => Some(*unit),
        _ => None,
    })
}

fn check_acyclic(topo: &Topology) -> Result<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; topo.units.len()];
    fn visit(topo: &Topology, u: UnitId, mark: &mut [u8]) -> Result<()> {
        match mark[u] {
            1 => return Err(Error::Wiring(format!("cycle through {}", topo.units[u].name))),
            2 => return Ok(()),
            _ => {}
        }
        mark[u] = 1;
        for v in successors(topo, u).collect::<Vec<_>>() {
            visit(topo, v, mark)?;
        }
        mark[u] = 2;
        Ok(())
    }
    for u in 0..topo.units.len() {
        visit(topo, u, &mut mark)?;
    }
    Ok(())
}

fn reaches_detector(topo: &Topology) -> bool {
    let mut stack = vec![topo.source];
    let mut seen = vec![false; topo.units.len()];
    while let Some(e) = stack.pop() {
        match e {
            Endpoint::Detector(_) => return true,
            Endpoint::Discard => {}
            Endpoint::Unit { unit, .. } => {
                if !seen[unit] {
                    seen[unit] = true;
                    stack.extend(topo.edges[unit].iter().flatten().copied());
                }
            }
        }
    }
    false
}

/// Apparatus settings recorded with every dataset. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusSettings {
    /// Phase shift in Path1.
    pub phi_deg: f64,
    pub theta_hwp0_deg: f64,
    pub theta_hwp1_deg: f64,
    /// `None` when the quarter-wave plate is removed.
    pub theta_qwp_deg: Option<f64>,
}

impl ApparatusSettings {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.phi_deg, self.theta_hwp0_deg, self.theta_hwp1_deg]
            .into_iter()
            .chain(self.theta_qwp_deg)
            .all(f64::is_finite);
        if finite {
            Ok(())
        } else {
            Err(Error::Config("apparatus angles must be finite".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub total_events: u64,
    pub gamma: f64,
    pub seed: u64,
    /// Independent substream of `seed`; sweeps key it by grid cell.
    pub stream: u64,
    pub source: SourceSpec,
    pub settings: ApparatusSettings,
    /// MZI output port that feeds the analysis chain; the other port is discarded.
    pub analyzed_port: Channel,
    pub policy: OutputPolicy,
    /// Messengers routed before recording starts.
    pub warmup: u64,
}

impl RunConfig {
    pub fn new(total_events: u64, source: SourceSpec, settings: ApparatusSettings) -> Self {
        RunConfig {
            total_events,
            gamma: 0.99,
            seed: 0,
            stream: 0,
            source,
            settings,
            analyzed_port: Channel::One,
            policy: OutputPolicy::Random,
            warmup: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_events == 0 {
            return Err(Error::Config("total events must be at least 1".into()));
        }
        check_gamma(self.gamma)?;
        self.source.validate()?;
        self.settings.validate()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// PBS input port fed by the analysis chain. On this input the reflected
/// (V) component leaves through channel 0, so D0 counts V photons and D1
/// counts H photons.
pub const PBS_ANALYSIS_INPUT: Channel = Channel::One;

/// Full quantum-eraser setup:
/// source → BS1; BS1·0 → HWP0 → BS2·0; BS1·1 → φ → BS2·1;
/// BS2·analyzed → [QWP] → HWP1 → PBS; PBS·0 → D0, PBS·1 → D1;
/// the other BS2 port is discarded.
pub fn build_eraser(cfg: &RunConfig) -> Result<Topology> {
    cfg.validate()?;
    let s = &cfg.settings;
    let mut b = TopologyBuilder::new(2);
    let bs1 = b.add("BS1", UnitKind::Bs)?;
    let hwp0 = b.add("HWP0", UnitKind::Hwp { theta_deg: s.theta_hwp0_deg })?;
    let phase = b.add("phase", UnitKind::Phase { phi_deg: s.phi_deg })?;
    let bs2 = b.add("BS2", UnitKind::Bs)?;
    let qwp = s
        .theta_qwp_deg
        .map(|theta_deg| b.add("QWP", UnitKind::Qwp { theta_deg }))
        .transpose()?;
    let hwp1 = b.add("HWP1", UnitKind::Hwp { theta_deg: s.theta_hwp1_deg })?;
    let pbs = b.add("PBS", UnitKind::Pbs)?;

    let input = |unit| Endpoint::Unit { unit, port: Channel::Zero };
    b.connect(bs1, Channel::Zero, input(hwp0))?;
    b.connect(bs1, Channel::One, input(phase))?;
    b.connect(hwp0, Channel::Zero, Endpoint::Unit { unit: bs2, port: Channel::Zero })?;
    b.connect(phase, Channel::Zero, Endpoint::Unit { unit: bs2, port: Channel::One })?;
    let analyzed = cfg.analyzed_port;
    match qwp {
        Some(q) => {
            b.connect(bs2, analyzed, input(q))?;
            b.connect(q, Channel::Zero, input(hwp1))?;
        }
        None => b.connect(bs2, analyzed, input(hwp1))?,
    }
    b.connect(bs2, analyzed.other(), Endpoint::Discard)?;
    b.connect(hwp1, Channel::Zero, Endpoint::Unit { unit: pbs, port: PBS_ANALYSIS_INPUT })?;
    b.connect(pbs, Channel::Zero, Endpoint::Detector(0))?;
    b.connect(pbs, Channel::One, Endpoint::Detector(1))?;
    b.build(input(bs1))
}

/// Bare Mach-Zehnder interferometer with phase `phi0_deg` on Path0 and
/// `phi1_deg` on Path1; BS2·0 → D0, BS2·1 → D1.
pub fn build_bare_mzi(phi0_deg: f64, phi1_deg: f64) -> Result<Topology> {
    let mut b = TopologyBuilder::new(2);
    let bs1 = b.add("BS1", UnitKind::Bs)?;
    let p0 = b.add("phase0", UnitKind::Phase { phi_deg: phi0_deg })?;
    let p1 = b.add("phase1", UnitKind::Phase { phi_deg: phi1_deg })?;
    let bs2 = b.add("BS2", UnitKind::Bs)?;
    let input = |unit| Endpoint::Unit { unit, port: Channel::Zero };
    b.connect(bs1, Channel::Zero, input(p0))?;
    b.connect(bs1, Channel::One, input(p1))?;
    b.connect(p0, Channel::Zero, Endpoint::Unit { unit: bs2, port: Channel::Zero })?;
    b.connect(p1, Channel::Zero, Endpoint::Unit { unit: bs2, port: Channel::One })?;
    b.connect(bs2, Channel::Zero, Endpoint::Detector(0))?;
    b.connect(bs2, Channel::One, Endpoint::Detector(1))?;
    b.build(input(bs1))
}

/// Named topology presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyPreset {
    Eraser,
    BareMzi,
}

impl TopologyPreset {
    /// Builds the preset. The bare MZI puts `cfg.settings.phi_deg` on Path1
    /// and no phase on Path0.
    pub fn build(self, cfg: &RunConfig) -> Result<Topology> {
        match self {
            TopologyPreset::Eraser => build_eraser(cfg),
            TopologyPreset::BareMzi => {
                cfg.validate()?;
                build_bare_mzi(0.0, cfg.settings.phi_deg)
            }
        }
    }
}

impl FromStr for TopologyPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eraser" => Ok(TopologyPreset::Eraser),
            "bare-mzi" => Ok(TopologyPreset::BareMzi),
            other => Err(Error::Config(format!("unknown topology preset {other:?}"))),
        }
    }
}

impl fmt::Display for TopologyPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyPreset::Eraser => "eraser",
            TopologyPreset::BareMzi => "bare-mzi",
        })
    }
}

/// Where one messenger ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Outcome {
    D0 = 0,
    D1 = 1,
    Discard = 2,
}

impl Outcome {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Outcome::D0),
            1 => Some(Outcome::D1),
            2 => Some(Outcome::Discard),
            _ => None,
        }
    }
}

/// Recorded run: one outcome per messenger in emission order plus the settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub outcomes: Vec<Outcome>,
    pub settings: ApparatusSettings,
    pub n0: u64,
    pub n1: u64,
    pub n_discard: u64,
    /// Messengers routed before recording started.
    pub warmup: u64,
}

impl EventDataset {
    pub fn detected(&self) -> u64 {
        self.n0 + self.n1
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

enum UnitState {
    Adaptive(AdaptiveUnit),
    Hwp(HalfWavePlate),
    Qwp(QuarterWavePlate),
    Phase(PhaseShifter),
}

/// Live network: one state per unit, routing a single messenger at a time.
pub struct Network<'t> {
    topology: &'t Topology,
    units: Vec<UnitState>,
    detectors: Vec<Detector>,
    discarded: u64,
}

impl<'t> Network<'t> {
    pub fn new(topology: &'t Topology, gamma: f64, policy: OutputPolicy) -> Result<Self> {
        let units = topology
            .units
            .iter()
            .map(|u| {
                Ok(match u.kind {
                    UnitKind::Bs => UnitState::Adaptive(AdaptiveUnit::new(AdaptiveKind::Bs, gamma, policy)?),
                    UnitKind::Pbs => UnitState::Adaptive(AdaptiveUnit::new(AdaptiveKind::Pbs, gamma, policy)?),
                    UnitKind::Hwp { theta_deg } => UnitState::Hwp(HalfWavePlate::new(theta_deg)),
                    UnitKind::Qwp { theta_deg } => UnitState::Qwp(QuarterWavePlate::new(theta_deg)),
                    UnitKind::Phase { phi_deg } => UnitState::Phase(PhaseShifter::new(phi_deg)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Network {
            topology,
            units,
            detectors: vec![Detector::default(); topology.detectors],
            discarded: 0,
        })
    }

    pub fn detector_counts(&self) -> Vec<u64> {
        self.detectors.iter().map(|d| d.count).collect()
    }

    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    /// Routes one messenger from the source to a terminal.
    pub fn route<R: Rng + ?Sized>(&mut self, mut msg: Message, rng: &mut R) -> Result<Outcome> {
        let mut at = self.topology.source;
        // An acyclic topology visits each unit at most once.
        for _ in 0..=self.units.len() {
            match at {
                Endpoint::Detector(d) => {
                    self.detectors[d].detect(&msg);
                    return match d {
                        0 => Ok(Outcome::D0),
                        1 => Ok(Outcome::D1),
                        _ => Err(Error::Wiring(format!("detector {d} has no outcome code"))),
                    };
                }
                Endpoint::Discard => {
                    self.discarded += 1;
                    return Ok(Outcome::Discard);
                }
                Endpoint::Unit { unit, port } => {
                    let out_port = match &mut self.units[unit] {
                        UnitState::Adaptive(u) => {
                            let out = u.process(port, &msg, rng);
                            msg = out.message;
                            out.channel
                        }
                        UnitState::Hwp(p) => {
                            msg = p.apply(&msg);
                            Channel::Zero
                        }
                        UnitState::Qwp(p) => {
                            msg = p.apply(&msg);
                            Channel::Zero
                        }
                        UnitState::Phase(p) => {
                            msg = p.apply(&msg);
                            Channel::Zero
                        }
                    };
                    at = self.topology.edge(unit, out_port).ok_or_else(|| {
                        Error::Wiring(format!(
                            "out-port {} of {} is not wired",
                            out_port.index(),
                            self.topology.units[unit].name
                        ))
                    })?;
                }
            }
        }
        Err(Error::Wiring("messenger did not reach a terminal".into()))
    }
}

/// Runs `cfg.total_events` messengers through a fresh network built from `topology`.
pub fn run_events(topology: &Topology, cfg: &RunConfig) -> Result<EventDataset> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut source = Source::new(cfg.source)?;
    let mut net = Network::new(topology, cfg.gamma, cfg.policy)?;
    for _ in 0..cfg.warmup {
        let msg = source.next_message(&mut rng);
        net.route(msg, &mut rng)?;
    }
    let mut outcomes = Vec::with_capacity(cfg.total_events as usize);
    let (mut n0, mut n1, mut n_discard) = (0u64, 0u64, 0u64);
    for _ in 0..cfg.total_events {
        let msg = source.next_message(&mut rng);
        let out = net.route(msg, &mut rng)?;
        match out {
            Outcome::D0 => n0 += 1,
            Outcome::D1 => n1 += 1,
            Outcome::Discard => n_discard += 1,
        }
        outcomes.push(out);
    }
    Ok(EventDataset {
        outcomes,
        settings: cfg.settings,
        n0,
        n1,
        n_discard,
        warmup: cfg.warmup,
    })
}
