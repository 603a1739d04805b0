//! Quantum-theory reference for the eraser and the bare interferometer.
//!
//! States are four complex amplitudes `(a0H, a0V, a1H, a1V)` (path, then
//! polarization). Every optical component is a 4×4 unitary. Detector
//! probabilities follow from the Born rule; mixtures are probability-weighted
//! sums of pure-state probabilities. The closed-form visibilities here are
//! evaluated independently of the matrix pipeline so the two can be checked
//! against each other.
//!
//! All public angles are in degrees.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3, Vector4};
use num_complex::Complex64;

use crate::angle::unit_from_degrees;
use crate::dlm::Channel;
use crate::error::{Error, Result};
use crate::messages::{SourceKind, SourceSpec};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Below this `max + min`, a fringe is treated as having no flux.
pub const DEGENERATE_FLUX: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleState(pub Vector4<C>);

impl OracleState {
    pub fn new(a0h: C, a0v: C, a1h: C, a1v: C) -> Self {
        OracleState(Vector4::new(a0h, a0v, a1h, a1v))
    }

    /// Linearly polarized photon at `xi_deg` entering on Path0.
    pub fn linear(xi_deg: f64) -> Self {
        let [c, s] = unit_from_degrees(xi_deg);
        Self::new(C::new(c, 0.0), C::new(s, 0.0), ZERO, ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitudes(&self) -> [C; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Bs,
    Pbs,
    /// Half-wave plate acting on Path0.
    Hwp0(f64),
    /// Half-wave plate acting on Path1.
    Hwp1(f64),
    /// Quarter-wave plate acting on Path1.
    Qwp(f64),
    /// Phase shift on Path1.
    Phase1(f64),
    /// Exchanges Path0 and Path1.
    SwapPaths,
}

impl Component {
    pub fn matrix(&self) -> Matrix4<C> {
        let r = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match *self {
            Component::Bs => {
                Matrix4::new(
                    ONE, ZERO, I, ZERO, //
                    ZERO, ONE, ZERO, I, //
                    I, ZERO, ONE, ZERO, //
                    ZERO, I, ZERO, ONE,
                ) * r
            }
            Component::Pbs => Matrix4::new(
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ZERO, ZERO, I, //
                ZERO, ZERO, ONE, ZERO, //
                ZERO, I, ZERO, ZERO,
            ),
            Component::Hwp0(theta) => {
                let [c, s] = unit_from_degrees(2.0 * theta);
                let (c, s) = (C::new(c, 0.0), C::new(s, 0.0));
                Matrix4::new(
                    c, s, ZERO, ZERO, //
                    s, -c, ZERO, ZERO, //
                    ZERO, ZERO, ONE, ZERO, //
                    ZERO, ZERO, ZERO, ONE,
                ) * -I
            }
            Component::Hwp1(theta) => {
                let [c, s] = unit_from_degrees(2.0 * theta);
                let (c, s) = (C::new(c, 0.0), C::new(s, 0.0));
                Matrix4::new(
                    ONE, ZERO, ZERO, ZERO, //
                    ZERO, ONE, ZERO, ZERO, //
                    ZERO, ZERO, c, s, //
                    ZERO, ZERO, s, -c,
                ) * -I
            }
            Component::Qwp(theta) => {
                // The 1/√2 belongs to the QWP block only; Path0 passes untouched.
                let [c, s] = unit_from_degrees(2.0 * theta);
                Matrix4::new(
                    ONE, ZERO, ZERO, ZERO, //
                    ZERO, ONE, ZERO, ZERO, //
                    ZERO, ZERO, r * C::new(1.0, -c), r * C::new(0.0, -s), //
                    ZERO, ZERO, r * C::new(0.0, -s), r * C::new(1.0, c),
                )
            }
            Component::Phase1(phi) => {
                let [c, s] = unit_from_degrees(phi);
                let e = C::new(c, s);
                Matrix4::from_diagonal(&Vector4::new(ONE, ONE, e, e))
            }
            Component::SwapPaths => Matrix4::new(
                ZERO, ZERO, ONE, ZERO, //
                ZERO, ZERO, ZERO, ONE, //
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO,
            ),
        }
    }
}

pub fn apply_component(state: &OracleState, component: Component) -> OracleState {
    OracleState(component.matrix() * state.0)
}

/// Eraser settings seen by the oracle (no φ; that is the sweep variable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EraserAngles {
    pub theta_hwp0_deg: f64,
    pub theta_hwp1_deg: f64,
    pub theta_qwp_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorProbs {
    pub d0: f64,
    pub d1: f64,
    pub discard: f64,
}

/// Component sequence from the source to just before the PBS. The analysed
/// MZI port ends up on Path1 (a path swap is inserted for port 0).
pub fn eraser_components(angles: &EraserAngles, phi_deg: f64, analyzed_port: Channel) -> Vec<Component> {
    let mut seq = vec![
        Component::Bs,
        Component::Hwp0(angles.theta_hwp0_deg),
        Component::Phase1(phi_deg),
        Component::Bs,
    ];
    if analyzed_port == Channel::Zero {
        seq.push(Component::SwapPaths);
    }
    if let Some(q) = angles.theta_qwp_deg {
        seq.push(Component::Qwp(q));
    }
    seq.push(Component::Hwp1(angles.theta_hwp1_deg));
    seq
}

/// Born-rule detector probabilities for the eraser.
///
/// Only the analysed beam (Path1 after [`eraser_components`]) enters the
/// PBS, on its input 1. D0 is PBS output 0 (the reflected V component), D1
/// is output 1 (the transmitted H component). The other MZI port's weight is
/// reported as `discard`.
pub fn detector_probs(input: &OracleState, angles: &EraserAngles, phi_deg: f64, analyzed_port: Channel) -> DetectorProbs {
    let state = eraser_components(angles, phi_deg, analyzed_port)
        .into_iter()
        .fold(*input, |s, c| apply_component(&s, c));
    let [a0h, a0v, a1h, a1v] = state.amplitudes();
    let into_pbs = OracleState::new(ZERO, ZERO, a1h, a1v);
    let [b0h, b0v, b1h, b1v] = apply_component(&into_pbs, Component::Pbs).amplitudes();
    DetectorProbs {
        d0: b0h.norm_sqr() + b0v.norm_sqr(),
        d1: b1h.norm_sqr() + b1v.norm_sqr(),
        discard: a0h.norm_sqr() + a0v.norm_sqr(),
    }
}

/// Bare interferometer click probabilities `(P0, P1)` for a photon entering
/// Path0, from the product `A·B·A` with `A = (1/√2)[[1, i], [i, 1]]` and
/// `B = diag(e^{iφ0}, e^{iφ1})`.
pub fn mzi_probs(phi0_deg: f64, phi1_deg: f64) -> (f64, f64) {
    let r = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let a = Matrix2::new(ONE, I, I, ONE) * r;
    let [c0, s0] = unit_from_degrees(phi0_deg);
    let [c1, s1] = unit_from_degrees(phi1_deg);
    let b = Matrix2::from_diagonal(&Vector2::new(C::new(c0, s0), C::new(c1, s1)));
    let out = a * b * a * Vector2::new(ONE, ZERO);
    (out[0].norm_sqr(), out[1].norm_sqr())
}

/// Fringe visibility with the no-flux convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub value: f64,
    /// True when `max + min` vanished and the value was defined as 0.
    pub degenerate: bool,
}

impl Visibility {
    pub fn from_extremes(max: f64, min: f64) -> Self {
        let sum = max + min;
        if sum <= DEGENERATE_FLUX * max.abs().max(1.0) {
            Visibility {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Visibility {
                value: ((max - min) / sum).clamp(0.0, 1.0),
                degenerate: false,
            }
        }
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den.abs() <= DEGENERATE_FLUX {
        0.0
    } else {
        (num / den).abs().min(1.0)
    }
}

/// Visibility without the QWP for a pure linear input at `xi_deg`.
pub fn visibility_pure_no_qwp(xi_deg: f64, theta0_deg: f64, theta1_deg: f64) -> f64 {
    let (xi, t0, t1) = (xi_deg.to_radians(), theta0_deg.to_radians(), theta1_deg.to_radians());
    let a = (xi - 2.0 * t0 + 2.0 * t1).sin();
    let b = (xi - 2.0 * t1).sin();
    ratio_or_zero(2.0 * a * b, a * a + b * b)
}

/// Visibility without the QWP for a V/H mixture with `p_V/p_H = tan²β`.
///
/// `beta_deg` must lie in `[0°, 90°)`; at 90° the input is pure V and
/// [`visibility_pure_no_qwp`] applies.
pub fn visibility_mixed(beta_deg: f64, theta0_deg: f64, theta1_deg: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&beta_deg) {
        return Err(Error::InvalidArgument(format!(
            "mixing angle must lie in [0, 90) degrees, got {beta_deg}"
        )));
    }
    let tan2 = beta_deg.to_radians().tan().powi(2);
    let a = 2.0 * (theta0_deg - theta1_deg).to_radians();
    let b = 2.0 * theta1_deg.to_radians();
    let num = 2.0 * a.sin() * b.sin() + 2.0 * tan2 * a.cos() * b.cos();
    let den = a.sin().powi(2) + b.sin().powi(2) + tan2 * (a.cos().powi(2) + b.cos().powi(2));
    Ok(ratio_or_zero(num, den))
}

/// Visibility with the QWP at 0° for a pure linear input at `xi_deg`.
pub fn visibility_pure_qwp0(xi_deg: f64, theta0_deg: f64, theta1_deg: f64) -> f64 {
    let (xi, t0, t1) = (xi_deg.to_radians(), theta0_deg.to_radians(), theta1_deg.to_radians());
    let (s2, c2) = (2.0 * t1).sin_cos();
    let (s2, c2) = (s2 * s2, c2 * c2);
    let d = xi - 2.0 * t0;
    let cross = c2 * d.sin() * xi.sin() - s2 * d.cos() * xi.cos();
    let num = ((4.0 * t1).sin().powi(2) * (2.0 * xi - 2.0 * t0).sin().powi(2) + 4.0 * cross * cross).sqrt();
    let den = c2 * d.sin().powi(2) + s2 * d.cos().powi(2) + s2 * xi.cos().powi(2) + c2 * xi.sin().powi(2);
    ratio_or_zero(num, den)
}

/// Convex mixture of pure input states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpec {
    pub components: Vec<(OracleState, f64)>,
}

impl MixedSpec {
    pub fn pure(state: OracleState) -> Self {
        MixedSpec {
            components: vec![(state, 1.0)],
        }
    }

    pub fn linear(xi_deg: f64) -> Self {
        Self::pure(OracleState::linear(xi_deg))
    }

    /// V with probability `p_v`, H with `1 − p_v`.
    pub fn vh(p_v: f64) -> Self {
        MixedSpec {
            components: vec![(OracleState::linear(90.0), p_v), (OracleState::linear(0.0), 1.0 - p_v)],
        }
    }

    pub fn from_source(source: &SourceSpec) -> Self {
        match source.kind {
            SourceKind::PureLinear { xi_deg } => Self::linear(xi_deg),
            SourceKind::Mixed { p_v, .. } => Self::vh(p_v),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("mixture has no components".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.1).sum();
        if self.components.iter().any(|c| !(c.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must be non-negative and sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    /// `P_D0` of the mixture: the weighted sum of pure-state probabilities.
    pub fn p_d0(&self, angles: &EraserAngles, phi_deg: f64, port: Channel) -> f64 {
        self.components
            .iter()
            .map(|(s, p)| p * detector_probs(s, angles, phi_deg, port).d0)
            .sum()
    }
}

/// Oracle sweep over a φ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepVisibility {
    /// From the exact first-harmonic fit of `P_D0(φ)`.
    pub fitted: Visibility,
    /// From the raw grid extremes (same discretization as the simulator).
    pub grid: Visibility,
    pub p_d0: Vec<f64>,
}

/// Least-squares fit of `A + B cos φ + C sin φ`, returning `(A, √(B² + C²))`.
///
/// Detector probabilities are affine in `e^{iφ}` at the amplitude level, so
/// `P_D0(φ)` is exactly of this form and the fit recovers the continuous
/// extremes `A ± √(B² + C²)` from any grid with three distinct phases.
pub fn fit_first_harmonic(phi_deg: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for (&phi, &y) in phi_deg.iter().zip(values) {
        let [c, s] = unit_from_degrees(phi);
        let row = Vector3::new(1.0, c, s);
        normal += row * row.transpose();
        rhs += row * y;
    }
    let coef = normal.lu().solve(&rhs)?;
    Some((coef[0], coef[1].hypot(coef[2])))
}

/// Visibility of `P_D0(φ)` over `phi_grid_deg` for a (possibly mixed) input.
pub fn sweep_visibility(
    input: &MixedSpec,
    angles: &EraserAngles,
    phi_grid_deg: &[f64],
    port: Channel,
) -> Result<SweepVisibility> {
    input.validate()?;
    if phi_grid_deg.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "phase grid needs at least 8 points, got {}",
            phi_grid_deg.len()
        )));
    }
    let p_d0: Vec<f64> = phi_grid_deg.iter().map(|&phi| input.p_d0(angles, phi, port)).collect();
    let (mean, amp) = fit_first_harmonic(phi_grid_deg, &p_d0)
        .ok_or_else(|| Error::InvalidArgument("phase grid needs three distinct phases".into()))?;
    let fitted = Visibility::from_extremes(mean + amp, (mean - amp).max(0.0));
    let max = p_d0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = p_d0.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SweepVisibility {
        fitted,
        grid: Visibility::from_extremes(max, min),
        p_d0,
    })
}

/// Which oracle route applies to a source/QWP combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleRoute {
    PureNoQwp { xi_deg: f64 },
    Mixed { beta_deg: f64 },
    PureQwp0 { xi_deg: f64 },
    /// No closed form: use the matrix pipeline.
    Pipeline,
}

pub fn route_for(source: &SourceSpec, theta_qwp_deg: Option<f64>) -> OracleRoute {
    match (source.kind, theta_qwp_deg) {
        (SourceKind::PureLinear { xi_deg }, None) => OracleRoute::PureNoQwp { xi_deg },
        (SourceKind::PureLinear { xi_deg }, Some(q)) if q.rem_euclid(180.0) == 0.0 => OracleRoute::PureQwp0 { xi_deg },
        (SourceKind::Mixed { p_v, p_h, .. }, None) => {
            if p_h == 0.0 {
                OracleRoute::PureNoQwp { xi_deg: 90.0 }
            } else {
                OracleRoute::Mixed {
                    beta_deg: (p_v / p_h).sqrt().atan().to_degrees(),
                }
            }
        }
        _ => OracleRoute::Pipeline,
    }
}

/// Reference visibility for a source and eraser angles: the closed form when
/// one exists, otherwise the matrix pipeline's fitted value.
pub fn reference_visibility(source: &SourceSpec, angles: &EraserAngles, port: Channel) -> Result<f64> {
    let (t0, t1) = (angles.theta_hwp0_deg, angles.theta_hwp1_deg);
    match route_for(source, angles.theta_qwp_deg) {
        OracleRoute::PureNoQwp { xi_deg } => Ok(visibility_pure_no_qwp(xi_deg, t0, t1)),
        OracleRoute::Mixed { beta_deg } => visibility_mixed(beta_deg, t0, t1),
        OracleRoute::PureQwp0 { xi_deg } => Ok(visibility_pure_qwp0(xi_deg, t0, t1)),
        OracleRoute::Pipeline => {
            let grid = crate::angle::uniform_phi_grid_deg(16);
            Ok(sweep_visibility(&MixedSpec::from_source(source), angles, &grid, port)?
                .fitted
                .value)
        }
    }
}
