//! Campaign configuration files.
//!
//! Frequencies are written as ordinary frequencies in MHz and times in μs;
//! everything is converted to rad/μs on load.

use crate::dynamics::DEFAULT_LONG_TIME;
use crate::error::{Error, Result};
use crate::noisegen::{target_spectra, BathConfig, DsaConfig, ToyVariant};
use crate::protocols::{
    Backend, ClosedFormTcl, IdealBackend, ProtocolId, ProtocolPlan, RunSettings, TrajectoryBackend, TrajectoryCoupling,
};
use crate::spam::SpamParams;
use crate::spectra::{Component, DeviceParams, SphericalSpectraSet, SpectrumModel};
use crate::units::mhz_to_rad_per_us;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Lorentzian generating spectrum `amplitude / (1 + tc²(|ω| - ω0)²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianSpec {
    /// Peak position `ω0/2π`.
    #[serde(rename = "f0_MHz")]
    pub f0_mhz: f64,
    pub tc_us: f64,
    /// Peak height, μs⁻¹.
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl LorentzianSpec {
    pub fn model(&self) -> SpectrumModel {
        SpectrumModel::Lorentzian {
            omega0: mhz_to_rad_per_us(self.f0_mhz),
            tc: self.tc_us,
            amplitude: self.amplitude,
        }
    }
}

/// Toy-bath dephasing built from a Lorentzian `S̃`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingSpec {
    pub generating: LorentzianSpec,
    /// Lag γ between the `τ_x` and `τ_y` couplings, μs.
    #[serde(default)]
    pub lag_us: f64,
    #[serde(default = "main_text")]
    pub variant: ToyVariant,
}

fn main_text() -> ToyVariant {
    ToyVariant::MainText
}

impl DephasingSpec {
    fn dsa(&self) -> Result<DsaConfig> {
        DsaConfig::with_defaults(self.generating.model())
    }

    fn set(&self) -> Result<SphericalSpectraSet> {
        Ok(target_spectra(&self.dsa()?, self.lag_us, self.variant))
    }
}

/// Injected noise spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectraSpec {
    /// Dephasing only, from the toy bath.
    ToyDephasing(DephasingSpec),
    /// Toy-bath dephasing plus white transverse spectra (levels in μs⁻¹).
    MultiAxis {
        dephasing: DephasingSpec,
        /// `S_{1,-1}` level.
        transverse_up: f64,
        /// `S_{-1,1}` level.
        transverse_down: f64,
    },
    /// A raw spherical set in internal units (rad/μs, μs⁻¹).
    Spherical { set: SphericalSpectraSet },
}

impl SpectraSpec {
    pub fn spherical_set(&self) -> Result<SphericalSpectraSet> {
        match self {
            SpectraSpec::ToyDephasing(d) => d.set(),
            SpectraSpec::MultiAxis {
                dephasing,
                transverse_up,
                transverse_down,
            } => {
                if !(*transverse_up >= 0.0 && *transverse_down >= 0.0) {
                    return Err(Error::config("transverse levels must be >= 0"));
                }
                let mut set = dephasing.set()?;
                set.classical = set.classical && transverse_up == transverse_down;
                Ok(set
                    .with(1, -1, Component::white(*transverse_up))
                    .with(-1, 1, Component::white(*transverse_down)))
            }
            SpectraSpec::Spherical { set } => Ok(set.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    /// Qubit frequency `ω_q/2π`.
    #[serde(rename = "omega_q_MHz")]
    pub omega_q_mhz: f64,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        DeviceSpec { omega_q_mhz: 5000.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    /// Closed-form long-time dynamics with SPAM applied.
    #[default]
    ClosedForm,
    /// Closed-form dynamics, SPAM ignored.
    Ideal,
    /// Monte-Carlo trajectories; needs toy-dephasing spectra.
    Trajectory {
        realizations: usize,
        #[serde(default, rename = "omega_max_MHz")]
        omega_max_mhz: Option<f64>,
        #[serde(default)]
        n_omega: Option<usize>,
        #[serde(default)]
        dt_us: Option<f64>,
    },
}

impl BackendSpec {
    pub fn label(&self) -> &'static str {
        match self {
            BackendSpec::ClosedForm => "closed_form",
            BackendSpec::Ideal => "ideal",
            BackendSpec::Trajectory { .. } => "trajectory",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub name: String,
    pub protocol: ProtocolId,
    /// Drive amplitudes `Ω/2π`.
    #[serde(rename = "omegas_MHz")]
    pub omegas_mhz: Vec<f64>,
    pub times_us: Vec<f64>,
    #[serde(default)]
    pub aligned_n: Option<Vec<u32>>,
    #[serde(default)]
    pub skip_aligned: bool,
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub device: DeviceSpec,
    pub spectra: SpectraSpec,
    #[serde(default)]
    pub spam: SpamParams,
    #[serde(default = "default_long_time")]
    pub long_time: f64,
    #[serde(default)]
    pub allow_low_frequency: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_long_time() -> f64 {
    DEFAULT_LONG_TIME
}

/// Configs shipped with the crate, by name.
pub const BUNDLED_CONFIGS: [(&str, &str); 3] = [
    ("fig2-dephasing", include_str!("../../configs/fig2-dephasing.json")),
    ("fig1-standard-bias", include_str!("../../configs/fig1-standard-bias.json")),
    ("multi-axis", include_str!("../../configs/multi-axis.json")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: CampaignConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid campaign config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file; a bare bundled name such as `fig2-dephasing`
    /// is accepted when no such file exists.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::from_json(&text),
            Err(e) => match path.to_str().and_then(bundled_config) {
                Some(text) => Self::from_json(text),
                None => Err(Error::config(format!("cannot read config {}: {e}", path.display()))),
            },
        }
    }

    pub fn device(&self) -> Result<DeviceParams> {
        DeviceParams::new(mhz_to_rad_per_us(self.device.omega_q_mhz))
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.omegas_mhz.iter().map(|&f| mhz_to_rad_per_us(f)).collect()
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            n_shots: self.shots,
            seed: self.seed,
            analytic: self.analytic,
            spam: self.spam,
            long_time: self.long_time,
            allow_low_frequency: self.allow_low_frequency,
        }
    }

    pub fn plan(&self) -> ProtocolPlan {
        ProtocolPlan {
            protocol: self.protocol,
            omegas: self.omegas(),
            times: self.times_us.clone(),
            aligned_n: self.aligned_n.clone(),
            skip_aligned: self.skip_aligned,
            settings: self.settings(),
        }
    }

    pub fn backend(&self) -> Result<Box<dyn Backend>> {
        let set = self.spectra.spherical_set()?;
        let device = self.device()?;
        Ok(match &self.backend {
            BackendSpec::ClosedForm => Box::new(ClosedFormTcl::new(set, device)),
            BackendSpec::Ideal => Box::new(IdealBackend(ClosedFormTcl::new(set, device))),
            BackendSpec::Trajectory {
                realizations,
                omega_max_mhz,
                n_omega,
                dt_us,
            } => {
                let SpectraSpec::ToyDephasing(d) = &self.spectra else {
                    return Err(Error::config("trajectory backend needs toy_dephasing spectra"));
                };
                if matches!(self.protocol, ProtocolId::P3 | ProtocolId::P4) {
                    return Err(Error::config("trajectory backend supports the single-axis protocols only"));
                }
                let mut dsa = d.dsa()?;
                if let Some(f) = omega_max_mhz {
                    dsa.omega_max = mhz_to_rad_per_us(*f);
                }
                if let Some(n) = n_omega {
                    dsa.n_omega = *n;
                }
                dsa.validate()?;
                let coupling = match d.variant {
                    ToyVariant::Classical => TrajectoryCoupling::Classical,
                    ToyVariant::MainText => TrajectoryCoupling::ToyBath(BathConfig::main_text(d.lag_us)),
                    ToyVariant::ThreeAxis => TrajectoryCoupling::ToyBath(BathConfig::three_axis(d.lag_us)),
                };
                Box::new(TrajectoryBackend {
                    dsa,
                    coupling,
                    n_realizations: *realizations,
                    dt: *dt_us,
                })
            }
        })
    }

    /// Checks every invariant without running anything.
    pub fn validate(&self) -> Result<()> {
        self.spam.validate()?;
        let device = self.device()?;
        if self.shots == 0 {
            return Err(Error::config("shots must be >= 1"));
        }
        if let BackendSpec::Trajectory { realizations, .. } = &self.backend {
            if *realizations < 2 {
                return Err(Error::config("trajectory backend needs at least 2 realizations"));
            }
        }
        let set = self.spectra.spherical_set()?;
        let mut grid: Vec<f64> = Vec::new();
        for w in self.omegas() {
            device.check_drive(w)?;
            grid.extend([w, -w, w + device.omega_q, -w - device.omega_q, w - device.omega_q, -w + device.omega_q]);
        }
        grid.push(0.0);
        set.validate(&grid)?;
        self.backend()?;
        self.plan().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_validate() {
        for (name, text) in BUNDLED_CONFIGS {
            CampaignConfig::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(bundled_config("nope").is_none());
    }

    #[test]
    fn spam_violation_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(bundled_config("fig2-dephasing").unwrap()).unwrap();
        v["spam"]["alpha_m"] = 0.97.into();
        v["spam"]["delta"] = 0.05.into();
        let err = CampaignConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("alpha_M + delta"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(bundled_config("fig2-dephasing").unwrap()).unwrap();
        v["shotz"] = 3.into();
        assert!(matches!(CampaignConfig::from_json(&v.to_string()), Err(Error::Config(_))));
    }

    #[test]
    fn plan_violations_surface() {
        let mut v: serde_json::Value = serde_json::from_str(bundled_config("fig2-dephasing").unwrap()).unwrap();
        v["times_us"] = serde_json::json!([0.1, 0.2, 0.3]);
        assert!(matches!(CampaignConfig::from_json(&v.to_string()), Err(Error::Plan(_))));
    }
}
