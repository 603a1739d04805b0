//! Messengers, pure-state sources and the mixed-state group scheduler.
//!
//! A message is three unit 2-vectors: the H phase clock `(cos ψH, sin ψH)`,
//! the V phase clock `(cos ψV, sin ψV)` and the polarization vector
//! `(cos ξ, sin ξ)`. Its complex-amplitude equivalent is
//! `(cos ξ·e^{iψH}, sin ξ·e^{iψV})`.
//!
//! A clock whose polarization weight is zero (e.g. the H clock of a pure V
//! message) is stored as `(1, 0)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{unit_from_degrees, unit_from_radians};
use crate::error::{Error, Result};

/// Below this modulus (relative to the total) a polarization component is treated as absent.
pub const ZERO_WEIGHT: f64 = 1e-14;

const IDLE_CLOCK: [f64; 2] = [1.0, 0.0];

/// The six-number message carried by one messenger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub h_clock: [f64; 2],
    pub v_clock: [f64; 2],
    pub pol: [f64; 2],
}

impl Default for Message {
    fn default() -> Self {
        Message {
            h_clock: IDLE_CLOCK,
            v_clock: IDLE_CLOCK,
            pol: IDLE_CLOCK,
        }
    }
}

impl Message {
    pub fn from_angles_deg(psi_h: f64, psi_v: f64, xi: f64) -> Self {
        Message {
            h_clock: unit_from_degrees(psi_h),
            v_clock: unit_from_degrees(psi_v),
            pol: unit_from_degrees(xi),
        }
    }

    /// Complex amplitudes `(aH, aV)` represented by this message.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let [ch, sh] = self.h_clock;
        let [cv, sv] = self.v_clock;
        let [cp, sp] = self.pol;
        (Complex64::new(cp * ch, cp * sh), Complex64::new(sp * cv, sp * sv))
    }

    /// Re-encodes a pair of complex amplitudes as a message.
    ///
    /// `ξ = atan2(|aV|, |aH|)` lies in `[0°, 90°]`; the clocks are the
    /// amplitude phases. An absent component gets the `(1, 0)` clock.
    pub fn from_amplitudes(a_h: Complex64, a_v: Complex64) -> Self {
        let mod_h = a_h.norm();
        let mod_v = a_v.norm();
        let total = mod_h.hypot(mod_v);
        if total == 0.0 {
            return Message::default();
        }
        let cutoff = ZERO_WEIGHT * total;
        let (h_clock, mod_h) = if mod_h <= cutoff {
            (IDLE_CLOCK, 0.0)
        } else {
            ([a_h.re / mod_h, a_h.im / mod_h], mod_h)
        };
        let (v_clock, mod_v) = if mod_v <= cutoff {
            (IDLE_CLOCK, 0.0)
        } else {
            ([a_v.re / mod_v, a_v.im / mod_v], mod_v)
        };
        let total = mod_h.hypot(mod_v);
        Message {
            h_clock,
            v_clock,
            pol: [mod_h / total, mod_v / total],
        }
    }

    /// Advances both phase clocks by `phi` radians; polarization is unchanged.
    pub fn with_phase(&self, phi: f64) -> Self {
        let rot = unit_from_radians(phi);
        Message {
            h_clock: rotate(self.h_clock, rot),
            v_clock: rotate(self.v_clock, rot),
            pol: self.pol,
        }
    }

    /// Largest deviation of the three pair norms from one.
    pub fn norm_defect(&self) -> f64 {
        [self.h_clock, self.v_clock, self.pol]
            .iter()
            .map(|p| (p[0].hypot(p[1]) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.norm_defect() <= tol
    }
}

fn rotate(v: [f64; 2], by: [f64; 2]) -> [f64; 2] {
    [v[0] * by[0] - v[1] * by[1], v[0] * by[1] + v[1] * by[0]]
}

/// Polarization label of a mixed-state group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolLabel {
    V,
    H,
}

impl PolLabel {
    /// Linear polarization angle of the pure state behind the label.
    pub fn xi_deg(self) -> f64 {
        match self {
            PolLabel::V => 90.0,
            PolLabel::H => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SourceKind {
    /// Every messenger is linearly polarized at `xi_deg`.
    PureLinear { xi_deg: f64 },
    /// Incoherent V/H mixture emitted in groups of `n_v` or `n_h` messengers.
    Mixed {
        p_v: f64,
        p_h: f64,
        n_v: u32,
        n_h: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Initial clock phase in degrees.
    #[serde(default)]
    pub psi0_deg: f64,
}

impl SourceSpec {
    pub fn pure(xi_deg: f64) -> Self {
        SourceSpec {
            kind: SourceKind::PureLinear { xi_deg },
            psi0_deg: 0.0,
        }
    }

    pub fn pure_v() -> Self {
        Self::pure(90.0)
    }

    pub fn mixed(p_v: f64, group: u32) -> Self {
        SourceSpec {
            kind: SourceKind::Mixed {
                p_v,
                p_h: 1.0 - p_v,
                n_v: group,
                n_h: group,
            },
            psi0_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.psi0_deg.is_finite() {
            return Err(Error::InvalidSource("psi0 must be finite".into()));
        }
        match self.kind {
            SourceKind::PureLinear { xi_deg } if !xi_deg.is_finite() => {
                Err(Error::InvalidSource("xi must be finite".into()))
            }
            SourceKind::PureLinear { .. } => Ok(()),
            SourceKind::Mixed { p_v, p_h, n_v, n_h } => {
                if !(p_v >= 0.0 && p_h >= 0.0) {
                    return Err(Error::InvalidSource(format!(
                        "mixture weights must be non-negative, got p_v={p_v}, p_h={p_h}"
                    )));
                }
                if (p_v + p_h - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSource(format!(
                        "mixture weights must sum to 1, got {}",
                        p_v + p_h
                    )));
                }
                if n_v == 0 || n_h == 0 {
                    return Err(Error::InvalidSource("group sizes must be at least 1".into()));
                }
                Ok(())
            }
        }
    }
}

/// Message of a linearly polarized pure source: both clocks at `psi0`, polarization `ξ0`.
pub fn emit_pure(xi_deg: f64, psi0_deg: f64) -> Message {
    let clock = unit_from_degrees(psi0_deg);
    Message {
        h_clock: clock,
        v_clock: clock,
        pol: unit_from_degrees(xi_deg),
    }
}

/// Draws the label of the next mixed-state group: V with probability `p_v`.
pub fn next_group_label<R: Rng + ?Sized>(p_v: f64, rng: &mut R) -> PolLabel {
    if rng.gen::<f64>() < p_v {
        PolLabel::V
    } else {
        PolLabel::H
    }
}

/// Sequence of emitted groups, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupSchedule {
    pub groups: Vec<(PolLabel, u32)>,
}

impl GroupSchedule {
    pub fn total(&self) -> u64 {
        self.groups.iter().map(|&(_, n)| u64::from(n)).sum()
    }
}

/// Emits messages one at a time according to a [`SourceSpec`].
#[derive(Debug, Clone)]
pub struct Source {
    spec: SourceSpec,
    current: Option<(PolLabel, u32)>,
}

impl Source {
    pub fn new(spec: SourceSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Source {
            spec,
            current: None,
        })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    /// Label and remaining length of the group in progress, if any.
    pub fn current_group(&self) -> Option<(PolLabel, u32)> {
        self.current
    }

    /// Next message. Mixed sources draw a new label whenever a group is exhausted.
    pub fn next_message<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Message {
        match self.spec.kind {
            SourceKind::PureLinear { xi_deg } => emit_pure(xi_deg, self.spec.psi0_deg),
            SourceKind::Mixed { .. } => {
                let label = self.next_label(rng);
                emit_pure(label.xi_deg(), self.spec.psi0_deg)
            }
        }
    }

    fn next_label<R: Rng + ?Sized>(&mut self, rng: &mut R) -> PolLabel {
        let SourceKind::Mixed { p_v, n_v, n_h, .. } = self.spec.kind else {
            unreachable!("group labels only exist for mixed sources");
        };
        let (label, remaining) = match self.current {
            Some((label, remaining)) if remaining > 0 => (label, remaining),
            _ => {
                let label = next_group_label(p_v, rng);
                let len = match label {
                    PolLabel::V => n_v,
                    PolLabel::H => n_h,
                };
                (label, len)
            }
        };
        self.current = Some((label, remaining - 1));
        label
    }
}

/// Group schedule a mixed source produces for `total` emissions; the last group may be truncated.
pub fn plan_groups<R: Rng + ?Sized>(spec: &SourceSpec, total: u64, rng: &mut R) -> Result<GroupSchedule> {
    let SourceKind::Mixed { p_v, n_v, n_h, .. } = spec.kind else {
        return Err(Error::InvalidSource("group schedules need a mixed source".into()));
    };
    spec.validate()?;
    let mut schedule = GroupSchedule::default();
    let mut left = total;
    while left > 0 {
        let label = next_group_label(p_v, rng);
        let len = match label {
            PolLabel::V => n_v,
            PolLabel::H => n_h,
        };
        let take = u64::from(len).min(left) as u32;
        schedule.groups.push((label, take));
        left -= u64::from(take);
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_v_message() {
        let m = emit_pure(90.0, 0.0);
        assert_eq!(m.pol, [0.0, 1.0]);
        assert_eq!(m.v_clock, [1.0, 0.0]);
        assert_eq!(m.h_clock, [1.0, 0.0]);
    }

    #[test]
    fn pure_h_message() {
        let m = emit_pure(0.0, 0.0);
        assert_eq!(m.pol, [1.0, 0.0]);
        assert_eq!(m.h_clock, [1.0, 0.0]);
    }

    #[test]
    fn diagonal_message() {
        let m = emit_pure(45.0, 0.0);
        let r = 0.5f64.sqrt();
        assert!((m.pol[0] - r).abs() < 1e-15 && (m.pol[1] - r).abs() < 1e-15);
    }

    #[test]
    fn degenerate_mixture_is_always_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| next_group_label(1.0, &mut rng) == PolLabel::V));
    }

    fn v_fraction(p_v: f64, draws: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..draws)
            .filter(|_| next_group_label(p_v, &mut rng) == PolLabel::V)
            .count();
        v as f64 / draws as f64
    }

    #[test]
    fn balanced_mixture_frequency() {
        let f = v_fraction(0.5, 100_000, 7);
        assert!((0.494..=0.506).contains(&f), "{f}");
    }

    #[test]
    fn two_thirds_mixture_frequency() {
        let f = v_fraction(2.0 / 3.0, 100_000, 11);
        assert!((0.662..=0.671).contains(&f), "{f}");
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(SourceSpec::mixed(1.2, 200).validate().is_err());
        let mut s = SourceSpec::mixed(0.5, 200);
        if let SourceKind::Mixed { ref mut n_h, .. } = s.kind {
            *n_h = 0;
        }
        assert!(s.validate().is_err());
    }

    #[test]
    fn source_groups_have_configured_length() {
        let spec = SourceSpec {
            kind: SourceKind::Mixed {
                p_v: 0.5,
                p_h: 0.5,
                n_v: 3,
                n_h: 5,
            },
            psi0_deg: 0.0,
        };
        let mut src = Source::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<PolLabel> = (0..1000)
            .map(|_| {
                let m = src.next_message(&mut rng);
                if m.pol == [0.0, 1.0] {
                    PolLabel::V
                } else {
                    PolLabel::H
                }
            })
            .collect();
        // Consecutive groups may share a label, so a run is a sum of whole groups.
        let mut i = 0;
        while i < labels.len() {
            let mut j = i;
            while j < labels.len() && labels[j] == labels[i] {
                j += 1;
            }
            let len = j - i;
            let n = if labels[i] == PolLabel::V { 3 } else { 5 };
            if j < labels.len() {
                assert_eq!(len % n, 0, "run of {len} {:?}", labels[i]);
            }
            i = j;
        }
    }

    #[test]
    fn planned_groups_truncate_at_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sched = plan_groups(&SourceSpec::mixed(0.5, 200), 1050, &mut rng).unwrap();
        assert_eq!(sched.total(), 1050);
        let (last, head) = sched.groups.split_last().unwrap();
        assert!(head.iter().all(|&(_, n)| n == 200));
        assert_eq!(last.1, 50);
    }

    #[test]
    fn phase_shift_adds() {
        let m = Message::from_angles_deg(30.0, 0.0, 45.0).with_phase(90f64.to_radians());
        let want = unit_from_degrees(120.0);
        assert!((m.h_clock[0] - want[0]).abs() < 1e-15);
        assert!((m.h_clock[1] - want[1]).abs() < 1e-15);
        let m = emit_pure(45.0, 0.0).with_phase(std::f64::consts::PI);
        assert!((m.h_clock[0] + 1.0).abs() < 1e-15 && m.h_clock[1].abs() < 1e-15);
        assert!((m.v_clock[0] + 1.0).abs() < 1e-15 && m.v_clock[1].abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn emitted_messages_are_unit(xi in -720.0f64..720.0, psi in -720.0f64..720.0) {
            prop_assert!(emit_pure(xi, psi).is_normalized(1e-12));
        }

        #[test]
        fn amplitude_round_trip(
            xi in 0.0f64..90.0, ph in -180.0f64..180.0, pv in -180.0f64..180.0
        ) {
            let m = Message::from_angles_deg(ph, pv, xi);
            let (a, b) = m.amplitudes();
            let back = Message::from_amplitudes(a, b);
            let (a2, b2) = back.amplitudes();
            prop_assert!((a - a2).norm() < 1e-12 && (b - b2).norm() < 1e-12);
            prop_assert!(back.is_normalized(1e-12));
        }
    }
}
