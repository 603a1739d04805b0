//! Flat TOML run configuration.
//!
//! Every field is optional and overrides the chosen preset's default:
//!
//! ```toml
//! preset = "fig3c-partial"
//! two_theta1_grid_deg = [0.0, 22.5, 45.0, 67.5, 90.0]
//! phi_points = 32
//! events_per_point = 1000000
//! gamma = 0.99
//! seed = 7
//! source = "mixed"
//! p_v = 0.6666666666666666
//! group_size = 200
//! theta_hwp0_deg = 22.5
//! policy = "random"
//! ```
//!
//! Command-line flags are collected into the same structure and applied
//! after the file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::DatasetFormat;
use super::{Preset, SweepSpec};
use crate::angle::uniform_phi_grid_deg;
use crate::dlm::Channel;
use crate::error::{Error, Result};
use crate::messages::SourceKind;
use crate::optics::OutputPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SourceChoice {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOverrides {
    pub preset: Option<Preset>,
    pub two_theta1_grid_deg: Option<Vec<f64>>,
    pub phi_grid_deg: Option<Vec<f64>>,
    pub phi_points: Option<usize>,
    pub events_per_point: Option<u64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub source: Option<SourceChoice>,
    pub xi_deg: Option<f64>,
    pub p_v: Option<f64>,
    pub group_size: Option<u32>,
    pub n_v: Option<u32>,
    pub n_h: Option<u32>,
    pub psi0_deg: Option<f64>,
    pub theta_hwp0_deg: Option<f64>,
    pub theta_qwp_deg: Option<f64>,
    pub remove_qwp: Option<bool>,
    pub analyzed_port: Option<u8>,
    pub policy: Option<OutputPolicy>,
    pub warmup: Option<u64>,
    pub tolerance: Option<f64>,
    pub dataset_format: Option<DatasetFormat>,
}

impl RunOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged(self, other: RunOverrides) -> RunOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { RunOverrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            preset,
            two_theta1_grid_deg,
            phi_grid_deg,
            phi_points,
            events_per_point,
            gamma,
            seed,
            source,
            xi_deg,
            p_v,
            group_size,
            n_v,
            n_h,
            psi0_deg,
            theta_hwp0_deg,
            theta_qwp_deg,
            remove_qwp,
            analyzed_port,
            policy,
            warmup,
            tolerance,
            dataset_format
        )
    }

    /// Preset defaults with these overrides applied, validated.
    pub fn resolve(&self, default_preset: Preset) -> Result<SweepSpec> {
        let mut spec = self.preset.unwrap_or(default_preset).spec();
        self.apply_to(&mut spec)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Applies the set fields to an existing spec. `preset` is ignored.
    pub fn apply_to(&self, spec: &mut SweepSpec) -> Result<()> {
        if let Some(g) = &self.two_theta1_grid_deg {
            spec.two_theta1_grid_deg = g.clone();
        }
        match (&self.phi_grid_deg, self.phi_points) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either phi_grid_deg or phi_points, not both".into()))
            }
            (Some(g), None) => spec.phi_grid_deg = g.clone(),
            (None, Some(n)) => spec.phi_grid_deg = uniform_phi_grid_deg(n),
            (None, None) => {}
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { spec.$f = v; })* };
        }
        set!(events_per_point, gamma, seed, theta_hwp0_deg, policy, warmup, tolerance);
        if let Some(q) = self.theta_qwp_deg {
            spec.theta_qwp_deg = Some(q);
        }
        if self.remove_qwp == Some(true) {
            if self.theta_qwp_deg.is_some() {
                return Err(Error::Config("remove_qwp conflicts with theta_qwp_deg".into()));
            }
            spec.theta_qwp_deg = None;
        }
        if let Some(p) = self.analyzed_port {
            spec.analyzed_port = Channel::from_index(p as usize)
                .ok_or_else(|| Error::Config(format!("analyzed port must be 0 or 1, got {p}")))?;
        }
        self.apply_source(spec)
    }

    fn apply_source(&self, spec: &mut SweepSpec) -> Result<()> {
        if let Some(psi) = self.psi0_deg {
            spec.source.psi0_deg = psi;
        }
        let choice = self.source.unwrap_or(match spec.source.kind {
            SourceKind::PureLinear { .. } => SourceChoice::Pure,
            SourceKind::Mixed { .. } => SourceChoice::Mixed,
        });
        match choice {
            SourceChoice::Pure => {
                if self.p_v.is_some() || self.group_size.is_some() || self.n_v.is_some() || self.n_h.is_some() {
                    return Err(Error::Config("mixture fields given for a pure source".into()));
                }
                let current = match spec.source.kind {
                    SourceKind::PureLinear { xi_deg } => xi_deg,
                    SourceKind::Mixed { .. } => 90.0,
                };
                spec.source.kind = SourceKind::PureLinear {
                    xi_deg: self.xi_deg.unwrap_or(current),
                };
            }
            SourceChoice::Mixed => {
                if self.xi_deg.is_some() {
                    return Err(Error::Config("xi_deg given for a mixed source".into()));
                }
                let (p_v0, n_v0, n_h0) = match spec.source.kind {
                    SourceKind::Mixed { p_v, n_v, n_h, .. } => (p_v, n_v, n_h),
                    SourceKind::PureLinear { .. } => (0.5, super::DEFAULT_GROUP, super::DEFAULT_GROUP),
                };
                let p_v = self.p_v.unwrap_or(p_v0);
                let n_v = self.n_v.or(self.group_size).unwrap_or(n_v0);
                let n_h = self.n_h.or(self.group_size).unwrap_or(n_h0);
                spec.source.kind = SourceKind::Mixed {
                    p_v,
                    p_h: 1.0 - p_v,
                    n_v,
                    n_h,
                };
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_preset() {
        let o: RunOverrides = toml::from_str(
            r#"
            preset = "fig3c-partial"
            two_theta1_grid_deg = [0.0, 45.0]
            phi_points = 16
            seed = 9
            group_size = 100
            policy = "round-robin"
            "#,
        )
        .unwrap();
        let s = o.resolve(Preset::PureV45).unwrap();
        assert_eq!(s.preset, Preset::PartialMixed);
        assert_eq!(s.phi_grid_deg.len(), 16);
        assert_eq!(s.seed, 9);
        assert_eq!(s.policy, OutputPolicy::RoundRobin);
        match s.source.kind {
            SourceKind::Mixed { p_v, n_v, n_h, .. } => {
                assert!((p_v - 2.0 / 3.0).abs() < 1e-15);
                assert_eq!((n_v, n_h), (100, 100));
            }
            _ => panic!("expected a mixed source"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<RunOverrides>("bogus = 1").is_err());
    }

    #[test]
    fn later_overrides_win() {
        let file = RunOverrides {
            seed: Some(1),
            gamma: Some(0.9),
            ..Default::default()
        };
        let cli = RunOverrides {
            seed: Some(2),
            ..Default::default()
        };
        let m = file.merged(cli);
        assert_eq!((m.seed, m.gamma), (Some(2), Some(0.9)));
    }

    #[test]
    fn conflicting_fields_are_config_errors() {
        let o = RunOverrides {
            phi_points: Some(8),
            phi_grid_deg: Some(vec![0.0, 180.0]),
            ..Default::default()
        };
        assert!(o.resolve(Preset::Custom).unwrap_err().is_config());
        let o = RunOverrides {
            source: Some(SourceChoice::Pure),
            p_v: Some(0.5),
            ..Default::default()
        };
        assert!(o.resolve(Preset::Custom).is_err());
        let o = RunOverrides {
            remove_qwp: Some(true),
            ..Default::default()
        };
        assert!(o.resolve(Preset::QwpPureV).is_err());
    }
}
