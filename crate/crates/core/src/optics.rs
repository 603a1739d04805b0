//! Processing units.
//!
//! Beam splitters (BS) and polarizing beam splitters (PBS) have three
//! stages: a [`DlmState`] input stage, a transformation stage that builds
//! two candidate output messages from the registers and `x`, and an output
//! stage that picks the channel. Wave plates and the phase shifter are
//! passive: they rewrite the message and pass it on.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::unit_from_degrees;
use crate::dlm::{Channel, DlmState};
use crate::error::Result;
use crate::messages::{Message, ZERO_WEIGHT};

/// How an adaptive unit turns output weights into a channel choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputPolicy {
    /// Compare against a uniform pseudo-random threshold drawn from the run's stream.
    #[default]
    Random,
    /// Compare against a per-unit deterministic threshold sequence
    /// `r_n = frac(n·(√5 − 1)/2)` that cycles through (0, 1) evenly.
    RoundRobin,
}

const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptiveKind {
    Bs,
    Pbs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitOutcome {
    pub channel: Channel,
    pub message: Message,
}

/// Result of the transformation stage: the message each output channel
/// would carry and its weight (`s2²` for channel 0, `t2²` for channel 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub messages: [Message; 2],
    pub weights: [f64; 2],
}

impl Split {
    pub fn total(&self) -> f64 {
        self.weights[0] + self.weights[1]
    }

    /// Probability that the messenger leaves through channel 0.
    pub fn p0(&self) -> f64 {
        self.weights[0] / self.total()
    }
}

struct Operands {
    c_h: [f64; 2],
    s_h: [f64; 2],
    c_v: [f64; 2],
    s_v: [f64; 2],
    c_p: [f64; 2],
    s_p: [f64; 2],
    root_x: [f64; 2],
}

impl Operands {
    fn of(state: &DlmState) -> Self {
        let r0 = state.register(Channel::Zero);
        let r1 = state.register(Channel::One);
        let x = state.x();
        Operands {
            c_h: [r0.h_clock[0], r1.h_clock[0]],
            s_h: [r0.h_clock[1], r1.h_clock[1]],
            c_v: [r0.v_clock[0], r1.v_clock[0]],
            s_v: [r0.v_clock[1], r1.v_clock[1]],
            c_p: [r0.pol[0], r1.pol[0]],
            s_p: [r0.pol[1], r1.pol[1]],
            root_x: [x[0].sqrt(), x[1].sqrt()],
        }
    }

    /// Weighted H amplitude parts of channel `k`: `(C^H C^P √x, S^H C^P √x)`.
    fn h(&self, k: usize) -> (f64, f64) {
        let a = self.c_p[k] * self.root_x[k];
        (self.c_h[k] * a, self.s_h[k] * a)
    }

    /// Weighted V amplitude parts of channel `k`: `(C^V S^P √x, S^V S^P √x)`.
    fn v(&self, k: usize) -> (f64, f64) {
        let a = self.s_p[k] * self.root_x[k];
        (self.c_v[k] * a, self.s_v[k] * a)
    }
}

/// Builds the six-number message from a four-vector `w`, with `s0`, `s1`, `s2`
/// the H, V and total norms. Returns the message and `s2²`.
fn assemble(w: [f64; 4]) -> (Message, f64) {
    let s0 = w[0].hypot(w[1]);
    let s1 = w[2].hypot(w[3]);
    let s2_sq = s0 * s0 + s1 * s1;
    let s2 = s2_sq.sqrt();
    if s2 == 0.0 {
        return (Message::default(), 0.0);
    }
    let cutoff = ZERO_WEIGHT * s2;
    let mut msg = Message::default();
    let (mut h_w, mut v_w) = (s0, s1);
    if s0 > cutoff {
        msg.h_clock = [w[0] / s0, w[1] / s0];
    } else {
        h_w = 0.0;
    }
    if s1 > cutoff {
        msg.v_clock = [w[2] / s1, w[3] / s1];
    } else {
        v_w = 0.0;
    }
    let norm = h_w.hypot(v_w);
    msg.pol = [h_w / norm, v_w / norm];
    (msg, s2_sq)
}

/// Beam-splitter transformation stage.
pub fn bs_transform(state: &DlmState) -> Split {
    let op = Operands::of(state);
    let (h0c, h0s) = op.h(0);
    let (h1c, h1s) = op.h(1);
    let (v0c, v0s) = op.v(0);
    let (v1c, v1s) = op.v(1);
    let w = [h0c - h1s, h1c + h0s, v0c - v1s, v1c + v0s];
    let z = [h1c - h0s, h0c + h1s, v1c - v0s, v0c + v1s];
    let (m0, s2) = assemble(w);
    let (m1, t2) = assemble(z);
    Split {
        messages: [m0, m1],
        weights: [s2, t2],
    }
}

/// Polarizing-beam-splitter transformation stage: H is transmitted, V is
/// reflected with a quarter-turn phase.
pub fn pbs_transform(state: &DlmState) -> Split {
    let op = Operands::of(state);
    let (h0c, h0s) = op.h(0);
    let (h1c, h1s) = op.h(1);
    let (v0c, v0s) = op.v(0);
    let (v1c, v1s) = op.v(1);
    let w = [h0c, h0s, -v1s, v1c];
    let z = [h1c, h1s, -v0s, v0c];
    let (m0, s2) = assemble(w);
    let (m1, t2) = assemble(z);
    Split {
        messages: [m0, m1],
        weights: [s2, t2],
    }
}

/// Output stage of an adaptive unit.
#[derive(Debug, Clone)]
pub struct OutputSelector {
    policy: OutputPolicy,
    tick: u64,
}

impl OutputSelector {
    pub fn new(policy: OutputPolicy) -> Self {
        OutputSelector { policy, tick: 0 }
    }

    fn threshold<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match self.policy {
            OutputPolicy::Random => rng.gen::<f64>(),
            OutputPolicy::RoundRobin => {
                self.tick += 1;
                (self.tick as f64 * GOLDEN_FRACTION).fract()
            }
        }
    }

    /// Channel 0 iff `weight0 > scale·r`.
    fn choose<R: Rng + ?Sized>(&mut self, weight0: f64, scale: f64, rng: &mut R) -> Channel {
        if weight0 > scale * self.threshold(rng) {
            Channel::Zero
        } else {
            Channel::One
        }
    }
}

/// A BS or PBS: input stage, transformation stage and output stage.
#[derive(Debug, Clone)]
pub struct AdaptiveUnit {
    kind: AdaptiveKind,
    dlm: DlmState,
    selector: OutputSelector,
}

impl AdaptiveUnit {
    pub fn new(kind: AdaptiveKind, gamma: f64, policy: OutputPolicy) -> Result<Self> {
        Ok(AdaptiveUnit {
            kind,
            dlm: DlmState::new(gamma)?,
            selector: OutputSelector::new(policy),
        })
    }

    pub fn kind(&self) -> AdaptiveKind {
        self.kind
    }

    pub fn dlm(&self) -> &DlmState {
        &self.dlm
    }

    pub fn process<R: Rng + ?Sized>(&mut self, channel: Channel, msg: &Message, rng: &mut R) -> UnitOutcome {
        process_with(self.kind, &mut self.dlm, &mut self.selector, channel, msg, rng)
    }
}

fn process_with<R: Rng + ?Sized>(
    kind: AdaptiveKind,
    dlm: &mut DlmState,
    selector: &mut OutputSelector,
    channel: Channel,
    msg: &Message,
    rng: &mut R,
) -> UnitOutcome {
    dlm.update(channel, msg);
    let (split, scale) = match kind {
        // s2² + t2² = 2 for the BS; the comparison is s2² > 2r.
        AdaptiveKind::Bs => (bs_transform(dlm), 2.0),
        AdaptiveKind::Pbs => {
            let split = pbs_transform(dlm);
            (split, split.total())
        }
    };
    let out = selector.choose(split.weights[0], scale, rng);
    UnitOutcome {
        channel: out,
        message: split.messages[out.index()],
    }
}

/// One BS event with a pseudo-random output stage.
pub fn bs_process<R: Rng + ?Sized>(state: &mut DlmState, channel: Channel, msg: &Message, rng: &mut R) -> UnitOutcome {
    let mut sel = OutputSelector::new(OutputPolicy::Random);
    process_with(AdaptiveKind::Bs, state, &mut sel, channel, msg, rng)
}

/// One PBS event with a pseudo-random output stage.
pub fn pbs_process<R: Rng + ?Sized>(state: &mut DlmState, channel: Channel, msg: &Message, rng: &mut R) -> UnitOutcome {
    let mut sel = OutputSelector::new(OutputPolicy::Random);
    process_with(AdaptiveKind::Pbs, state, &mut sel, channel, msg, rng)
}

/// A 2×2 complex matrix acting on `(aH, aV)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jones2(pub [[Complex64; 2]; 2]);

impl Jones2 {
    pub fn apply(&self, msg: &Message) -> Message {
        let (a_h, a_v) = msg.amplitudes();
        let m = &self.0;
        Message::from_amplitudes(m[0][0] * a_h + m[0][1] * a_v, m[1][0] * a_h + m[1][1] * a_v)
    }
}

/// Half-wave plate with its optical axis at `theta_deg`: `−i·[[c, s], [s, −c]]`,
/// `c = cos 2θ`, `s = sin 2θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWavePlate {
    pub theta_deg: f64,
    jones: Jones2,
}

impl HalfWavePlate {
    pub fn new(theta_deg: f64) -> Self {
        let [c, s] = unit_from_degrees(2.0 * theta_deg);
        let mi = Complex64::new(0.0, -1.0);
        HalfWavePlate {
            theta_deg,
            jones: Jones2([[mi * c, mi * s], [mi * s, -mi * c]]),
        }
    }

    pub fn apply(&self, msg: &Message) -> Message {
        self.jones.apply(msg)
    }
}

/// Quarter-wave plate: `(1/√2)·[[1 − ic, −is], [−is, 1 + ic]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarterWavePlate {
    pub theta_deg: f64,
    jones: Jones2,
}

impl QuarterWavePlate {
    pub fn new(theta_deg: f64) -> Self {
        let [c, s] = unit_from_degrees(2.0 * theta_deg);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        QuarterWavePlate {
            theta_deg,
            jones: Jones2([
                [Complex64::new(r, -r * c), Complex64::new(0.0, -r * s)],
                [Complex64::new(0.0, -r * s), Complex64::new(r, r * c)],
            ]),
        }
    }

    pub fn apply(&self, msg: &Message) -> Message {
        self.jones.apply(msg)
    }
}

/// Rotates both phase clocks by `phi_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShifter {
    pub phi_deg: f64,
    rot: [f64; 2],
}

impl PhaseShifter {
    pub fn new(phi_deg: f64) -> Self {
        PhaseShifter {
            phi_deg,
            rot: unit_from_degrees(phi_deg),
        }
    }

    pub fn apply(&self, msg: &Message) -> Message {
        let [c, s] = self.rot;
        let turn = |v: [f64; 2]| [v[0] * c - v[1] * s, v[0] * s + v[1] * c];
        Message {
            h_clock: turn(msg.h_clock),
            v_clock: turn(msg.v_clock),
            pol: msg.pol,
        }
    }
}

pub fn hwp_apply(msg: &Message, theta_deg: f64) -> Message {
    HalfWavePlate::new(theta_deg).apply(msg)
}

pub fn qwp_apply(msg: &Message, theta_deg: f64) -> Message {
    QuarterWavePlate::new(theta_deg).apply(msg)
}

pub fn phase_apply(msg: &Message, phi_deg: f64) -> Message {
    PhaseShifter::new(phi_deg).apply(msg)
}

/// Ideal detector: every arriving messenger is counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Detector {
    pub count: u64,
}

impl Detector {
    pub fn detect(&mut self, _msg: &Message) {
        self.count += 1;
    }
}
