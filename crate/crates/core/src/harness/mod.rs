//! Sweep driver, visibility estimation and simulation-vs-oracle reports.
//!
//! A sweep runs one fresh eraser network per `(θ1, φ)` cell. Cells are
//! independent and run in parallel; each draws from its own substream of
//! the sweep seed keyed by the cell's grid indices, so results do not depend
//! on scheduling.

pub mod config;
pub mod output;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::uniform_phi_grid_deg;
use crate::dlm::{check_gamma, Channel};
use crate::error::{Error, Result};
use crate::messages::{SourceKind, SourceSpec};
use crate::network::{build_bare_mzi, build_eraser, run_events, ApparatusSettings, EventDataset, RunConfig};
use crate::optics::OutputPolicy;
use crate::oracle::{self, route_for, EraserAngles, MixedSpec, OracleRoute, Visibility};

/// Default acceptance tolerance on `|vSim − vOracle|`.
pub const DEFAULT_TOLERANCE: f64 = 0.03;
/// Tolerance on per-φ click frequencies of the bare interferometer.
pub const MZI_TOLERANCE: f64 = 0.01;
/// Largest allowed disagreement between the matrix pipeline and a closed form.
pub const WIRING_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_EVENTS: u64 = 1_000_000;
pub const DEFAULT_GAMMA: f64 = 0.99;
pub const DEFAULT_GROUP: u32 = 200;
pub const DEFAULT_PHI_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "fig3a-pureV-45")]
    PureV45,
    #[serde(rename = "fig3a-pureV-10")]
    PureV10,
    #[serde(rename = "fig3b-mixed")]
    Mixed,
    #[serde(rename = "fig3c-partial")]
    PartialMixed,
    #[serde(rename = "fig4a-qwp")]
    QwpPureV,
    #[serde(rename = "fig4b-qwp-xi45")]
    QwpXi45,
    #[serde(rename = "bare-mzi")]
    BareMzi,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::PureV45,
        Preset::PureV10,
        Preset::Mixed,
        Preset::PartialMixed,
        Preset::QwpPureV,
        Preset::QwpXi45,
        Preset::BareMzi,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PureV45 => "fig3a-pureV-45",
            Preset::PureV10 => "fig3a-pureV-10",
            Preset::Mixed => "fig3b-mixed",
            Preset::PartialMixed => "fig3c-partial",
            Preset::QwpPureV => "fig4a-qwp",
            Preset::QwpXi45 => "fig4b-qwp-xi45",
            Preset::BareMzi => "bare-mzi",
            Preset::Custom => "custom",
        }
    }

    /// Source, HWP0 angle and QWP setting the preset stands for.
    fn apparatus(self) -> (SourceSpec, f64, Option<f64>) {
        match self {
            Preset::PureV45 | Preset::Custom | Preset::BareMzi => (SourceSpec::pure_v(), 45.0, None),
            Preset::PureV10 => (SourceSpec::pure_v(), 10.0, None),
            Preset::Mixed => (SourceSpec::mixed(0.5, DEFAULT_GROUP), 45.0, None),
            Preset::PartialMixed => (SourceSpec::mixed(2.0 / 3.0, DEFAULT_GROUP), 22.5, None),
            Preset::QwpPureV => (SourceSpec::pure_v(), 45.0, Some(0.0)),
            Preset::QwpXi45 => (SourceSpec::pure(45.0), 22.5, Some(0.0)),
        }
    }

    /// Default sweep for the preset.
    pub fn spec(self) -> SweepSpec {
        let (source, theta_hwp0_deg, theta_qwp_deg) = self.apparatus();
        let source = match self {
            Preset::BareMzi => SourceSpec::pure(0.0),
            _ => source,
        };
        SweepSpec {
            preset: self,
            two_theta1_grid_deg: default_two_theta1_grid(),
            phi_grid_deg: uniform_phi_grid_deg(DEFAULT_PHI_POINTS),
            events_per_point: DEFAULT_EVENTS,
            gamma: DEFAULT_GAMMA,
            seed: 0,
            source,
            theta_hwp0_deg,
            theta_qwp_deg,
            analyzed_port: Channel::One,
            policy: OutputPolicy::Random,
            warmup: 0,
            tolerance: if self == Preset::BareMzi {
                MZI_TOLERANCE
            } else {
                DEFAULT_TOLERANCE
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `2θ1 ∈ {0°, 5°, …, 90°}`.
pub fn default_two_theta1_grid() -> Vec<f64> {
    (0..=18).map(|i| 5.0 * i as f64).collect()
}

/// Everything needed to reproduce a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub preset: Preset,
    pub two_theta1_grid_deg: Vec<f64>,
    pub phi_grid_deg: Vec<f64>,
    /// Events per θ1 point, split across the φ grid. For the bare
    /// interferometer each φ point receives this many events.
    pub events_per_point: u64,
    pub gamma: f64,
    pub seed: u64,
    pub source: SourceSpec,
    pub theta_hwp0_deg: f64,
    pub theta_qwp_deg: Option<f64>,
    pub analyzed_port: Channel,
    pub policy: OutputPolicy,
    pub warmup: u64,
    pub tolerance: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.phi_grid_deg.is_empty() {
            return Err(Error::Config("phase grid is empty".into()));
        }
        if self.preset != Preset::BareMzi && self.two_theta1_grid_deg.is_empty() {
            return Err(Error::Config("2θ1 grid is empty".into()));
        }
        let angles_finite = self
            .two_theta1_grid_deg
            .iter()
            .chain(&self.phi_grid_deg)
            .chain(std::iter::once(&self.theta_hwp0_deg))
            .chain(self.theta_qwp_deg.iter())
            .all(|a| a.is_finite());
        if !angles_finite {
            return Err(Error::Config("angles must be finite".into()));
        }
        if self.events_per_point == 0 {
            return Err(Error::Config("events per point must be at least 1".into()));
        }
        if self.preset != Preset::BareMzi && self.events_per_point < self.phi_grid_deg.len() as u64 {
            return Err(Error::Config(format!(
                "events per point ({}) must cover every one of the {} phase settings",
                self.events_per_point,
                self.phi_grid_deg.len()
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        check_gamma(self.gamma)?;
        self.source.validate()?;
        self.check_preset_consistency()
    }

    fn check_preset_consistency(&self) -> Result<()> {
        let want_mixed = match self.preset {
            Preset::Custom | Preset::BareMzi => return Ok(()),
            Preset::Mixed | Preset::PartialMixed => true,
            _ => false,
        };
        let (_, _, want_qwp) = self.preset.apparatus();
        let is_mixed = matches!(self.source.kind, SourceKind::Mixed { .. });
        if is_mixed != want_mixed {
            return Err(Error::Config(format!(
                "preset {} needs a {} source",
                self.preset,
                if want_mixed { "mixed" } else { "pure" }
            )));
        }
        if want_qwp.is_some() != self.theta_qwp_deg.is_some() {
            return Err(Error::Config(format!(
                "preset {} is defined {} the quarter-wave plate",
                self.preset,
                if want_qwp.is_some() { "with" } else { "without" }
            )));
        }
        Ok(())
    }

    pub fn angles(&self, two_theta1_deg: f64) -> EraserAngles {
        EraserAngles {
            theta_hwp0_deg: self.theta_hwp0_deg,
            theta_hwp1_deg: two_theta1_deg / 2.0,
            theta_qwp_deg: self.theta_qwp_deg,
        }
    }

    /// Events assigned to each φ cell; the remainder goes to the first cells.
    pub fn events_per_cell(&self) -> Vec<u64> {
        let n = self.phi_grid_deg.len() as u64;
        let (base, extra) = (self.events_per_point / n, self.events_per_point % n);
        (0..n).map(|i| base + u64::from(i < extra)).collect()
    }

    fn cell_config(&self, theta_index: usize, phi_index: usize, events: u64) -> RunConfig {
        let two_theta1 = self.two_theta1_grid_deg[theta_index];
        RunConfig {
            total_events: events,
            gamma: self.gamma,
            seed: self.seed,
            stream: cell_stream(theta_index, phi_index),
            source: self.source,
            settings: ApparatusSettings {
                phi_deg: self.phi_grid_deg[phi_index],
                theta_hwp0_deg: self.theta_hwp0_deg,
                theta_hwp1_deg: two_theta1 / 2.0,
                theta_qwp_deg: self.theta_qwp_deg,
            },
            analyzed_port: self.analyzed_port,
            policy: self.policy,
            warmup: self.warmup,
        }
    }
}

/// Random substream of a sweep cell.
pub fn cell_stream(theta_index: usize, phi_index: usize) -> u64 {
    ((theta_index as u64) << 32) | phi_index as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiCounts {
    pub phi_deg: f64,
    pub n0: u64,
    pub n1: u64,
    pub n_discard: u64,
}

impl PhiCounts {
    pub fn total(&self) -> u64 {
        self.n0 + self.n1 + self.n_discard
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub two_theta1_deg: f64,
    pub v_sim: f64,
    pub v_oracle: f64,
    pub abs_dev: f64,
    /// D0 saw no events at any φ.
    pub degenerate: bool,
    pub counts: Vec<PhiCounts>,
}

impl CurvePoint {
    pub fn new(two_theta1_deg: f64, counts: Vec<PhiCounts>, v_oracle: f64) -> Result<Self> {
        let n0: Vec<(f64, u64)> = counts.iter().map(|c| (c.phi_deg, c.n0)).collect();
        let v = estimate_visibility(&n0)?;
        Ok(CurvePoint {
            two_theta1_deg,
            v_sim: v.value,
            v_oracle,
            abs_dev: (v.value - v_oracle).abs(),
            degenerate: v.degenerate,
            counts,
        })
    }
}

/// `(N_max − N_min)/(N_max + N_min)` over the extreme D0 counts of a φ grid.
pub fn estimate_visibility(counts: &[(f64, u64)]) -> Result<Visibility> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("no counts to estimate a visibility from".into()));
    }
    let first = counts[0].0;
    if counts.iter().all(|c| c.0 == first) {
        return Err(Error::InvalidArgument("visibility needs at least two distinct phases".into()));
    }
    let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
    let min = counts.iter().map(|c| c.1).min().unwrap_or(0);
    if max == 0 {
        return Ok(Visibility {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Visibility {
        value: (max - min) as f64 / (max + min) as f64,
        degenerate: false,
    })
}

/// Oracle visibility for one θ1 point of the sweep.
pub fn oracle_visibility(spec: &SweepSpec, two_theta1_deg: f64) -> Result<f64> {
    oracle::reference_visibility(&spec.source, &spec.angles(two_theta1_deg), spec.analyzed_port)
}

/// Checks that the matrix pipeline, wired with the sweep's analysed port,
/// reproduces the closed-form visibility at every θ1 of the grid.
pub fn verify_wiring(spec: &SweepSpec) -> Result<()> {
    if route_for(&spec.source, spec.theta_qwp_deg) == OracleRoute::Pipeline {
        return Ok(());
    }
    let input = MixedSpec::from_source(&spec.source);
    let grid = uniform_phi_grid_deg(16);
    for &two_theta1 in &spec.two_theta1_grid_deg {
        let angles = spec.angles(two_theta1);
        let pipeline = oracle::sweep_visibility(&input, &angles, &grid, spec.analyzed_port)?
            .fitted
            .value;
        let closed = oracle_visibility(spec, two_theta1)?;
        if (pipeline - closed).abs() > WIRING_TOLERANCE {
            return Err(Error::Wiring(format!(
                "analysed port {} disagrees with the closed form at 2θ1={two_theta1}: pipeline {pipeline}, closed form {closed}",
                spec.analyzed_port.index()
            )));
        }
    }
    Ok(())
}

/// Sweep result; `datasets` holds one entry per cell in θ1-major order when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub points: Vec<CurvePoint>,
    pub datasets: Option<Vec<EventDataset>>,
}

/// Runs the event simulator over the sweep grid and pairs each θ1 point with the oracle.
pub fn run_sweep(spec: &SweepSpec, keep_datasets: bool) -> Result<SweepOutput> {
    spec.validate()?;
    if spec.preset == Preset::BareMzi {
        return Err(Error::Config("the bare-mzi preset runs through run_mzi".into()));
    }
    verify_wiring(spec)?;

    let per_cell = spec.events_per_cell();
    let n_phi = spec.phi_grid_deg.len();
    let cells: Vec<(usize, usize)> = (0..spec.two_theta1_grid_deg.len())
        .flat_map(|t| (0..n_phi).map(move |p| (t, p)))
        .collect();
    let mut datasets = cells
        .par_iter()
        .map(|&(t, p)| {
            let cfg = spec.cell_config(t, p, per_cell[p]);
            let topology = build_eraser(&cfg)?;
            let mut data = run_events(&topology, &cfg)?;
            if !keep_datasets {
                data.outcomes = Vec::new();
            }
            Ok(data)
        })
        .collect::<Result<Vec<EventDataset>>>()?;

    let points = spec
        .two_theta1_grid_deg
        .iter()
        .enumerate()
        .map(|(t, &two_theta1)| {
            let counts = datasets[t * n_phi..(t + 1) * n_phi]
                .iter()
                .map(|d| PhiCounts {
                    phi_deg: d.settings.phi_deg,
                    n0: d.n0,
                    n1: d.n1,
                    n_discard: d.n_discard,
                })
                .collect();
            CurvePoint::new(two_theta1, counts, oracle_visibility(spec, two_theta1)?)
        })
        .collect::<Result<Vec<_>>>()?;

    if !keep_datasets {
        datasets.clear();
    }
    Ok(SweepOutput {
        points,
        datasets: keep_datasets.then_some(datasets),
    })
}

/// Per-φ result of the bare-interferometer regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziPoint {
    pub phi_deg: f64,
    pub n0: u64,
    pub n1: u64,
    pub p0_sim: f64,
    pub p0_oracle: f64,
    pub abs_dev: f64,
}

/// Bare interferometer over the φ grid (phase on Path1), `events_per_point` events per φ.
pub fn run_mzi(spec: &SweepSpec) -> Result<Vec<MziPoint>> {
    spec.validate()?;
    spec.phi_grid_deg
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let cfg = spec.mzi_cell_config(i, phi);
            let topology = build_bare_mzi(0.0, phi)?;
            let data = run_events(&topology, &cfg)?;
            let p0_sim = data.n0 as f64 / data.detected() as f64;
            let (p0_oracle, _) = oracle::mzi_probs(0.0, phi);
            Ok(MziPoint {
                phi_deg: phi,
                n0: data.n0,
                n1: data.n1,
                p0_sim,
                p0_oracle,
                abs_dev: (p0_sim - p0_oracle).abs(),
            })
        })
        .collect()
}

impl SweepSpec {
    fn mzi_cell_config(&self, phi_index: usize, phi_deg: f64) -> RunConfig {
        RunConfig {
            total_events: self.events_per_point,
            gamma: self.gamma,
            seed: self.seed,
            stream: cell_stream(0, phi_index),
            source: self.source,
            settings: ApparatusSettings {
                phi_deg,
                theta_hwp0_deg: 0.0,
                theta_hwp1_deg: 0.0,
                theta_qwp_deg: None,
            },
            analyzed_port: self.analyzed_port,
            policy: self.policy,
            warmup: self.warmup,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `(2θ1, |vSim − vOracle|)` for every point above tolerance.
    pub offenders: Vec<(f64, f64)>,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: max |dev| = {:.6}, mean |dev| = {:.6}, tolerance = {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.max_abs_dev,
            self.mean_abs_dev,
            self.tolerance
        )?;
        for (angle, dev) in &self.offenders {
            writeln!(f, "  2θ1 = {angle:>7.3}°: |dev| = {dev:.6}")?;
        }
        Ok(())
    }
}

/// Pass iff the largest deviation is within `tolerance`.
pub fn compare_report(points: &[CurvePoint], tolerance: f64) -> Result<CompareReport> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    let max_abs_dev = points.iter().map(|p| p.abs_dev).fold(0.0, f64::max);
    let mean_abs_dev = if points.is_empty() {
        0.0
    } else {
        points.iter().map(|p| p.abs_dev).sum::<f64>() / points.len() as f64
    };
    let offenders = points
        .iter()
        .filter(|p| p.abs_dev > tolerance)
        .map(|p| (p.two_theta1_deg, p.abs_dev))
        .collect();
    Ok(CompareReport {
        max_abs_dev,
        mean_abs_dev,
        tolerance,
        pass: max_abs_dev <= tolerance,
        offenders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(n0: &[u64]) -> Vec<(f64, u64)> {
        n0.iter().enumerate().map(|(i, &n)| (i as f64 * 90.0, n)).collect()
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(estimate_visibility(&counts(&[50, 100, 50, 0])).unwrap().value, 1.0);
        assert_eq!(estimate_visibility(&counts(&[70, 70, 70])).unwrap().value, 0.0);
        let v = estimate_visibility(&counts(&[75, 100, 75, 50])).unwrap().value;
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn visibility_edge_cases() {
        assert!(estimate_visibility(&[]).is_err());
        assert!(estimate_visibility(&[(0.0, 4), (0.0, 9)]).is_err());
        let v = estimate_visibility(&counts(&[0, 0, 0])).unwrap();
        assert!(v.degenerate && v.value == 0.0);
    }

    #[test]
    fn report_examples() {
        let point = |a, dev| CurvePoint {
            two_theta1_deg: a,
            v_sim: 0.5,
            v_oracle: 0.5,
            abs_dev: dev,
            degenerate: false,
            counts: vec![],
        };
        let r = compare_report(&[point(0.0, 0.0), point(5.0, 0.0)], 1e-12).unwrap();
        assert!(r.pass);
        let r = compare_report(&[point(0.0, 0.01), point(5.0, 0.05)], 0.03).unwrap();
        assert!(!r.pass);
        assert_eq!(r.offenders, vec![(5.0, 0.05)]);
        assert!(compare_report(&[], 0.0).is_err());
    }

    #[test]
    fn presets_round_trip_names() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            p.spec().validate().unwrap();
        }
    }

    #[test]
    fn inconsistent_presets_are_refused() {
        let mut s = Preset::QwpPureV.spec();
        s.theta_qwp_deg = None;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = Preset::Mixed.spec();
        s.source = SourceSpec::pure_v();
        assert!(s.validate().is_err());
        let mut s = Preset::Custom.spec();
        s.source = SourceSpec::mixed(0.5, 10);
        s.theta_qwp_deg = Some(0.0);
        s.validate().unwrap();
    }

    #[test]
    fn cell_events_sum_to_point_budget() {
        let mut s = Preset::PureV45.spec();
        s.events_per_point = 1003;
        let cells = s.events_per_cell();
        assert_eq!(cells.len(), 32);
        assert_eq!(cells.iter().sum::<u64>(), 1003);
    }

    #[test]
    fn small_sweep_conserves_events() {
        let mut s = Preset::PureV45.spec();
        s.two_theta1_grid_deg = vec![0.0, 45.0];
        s.events_per_point = 3200;
        let out = run_sweep(&s, false).unwrap();
        assert_eq!(out.points.len(), 2);
        for p in &out.points {
            assert_eq!(p.counts.iter().map(PhiCounts::total).sum::<u64>(), 3200);
            assert!((0.0..=1.0).contains(&p.v_sim));
        }
    }

    #[test]
    fn wiring_check_accepts_both_ports() {
        let mut s = Preset::QwpXi45.spec();
        verify_wiring(&s).unwrap();
        s.analyzed_port = Channel::Zero;
        verify_wiring(&s).unwrap();
    }
}
