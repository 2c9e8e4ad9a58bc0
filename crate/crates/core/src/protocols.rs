//! Protocols 1–4 run against a pluggable backend.
//!
//! A backend returns the noise-averaged rotating-frame state after a drive;
//! the runner supplies the faulty preparation, applies the faulty POVM and
//! samples shots (or, in analytic mode, records exact probabilities).

use crate::dynamics::trajectory::{correlation_time, simulate_states, uniform_grid};
use crate::dynamics::{
    frame_aligned_times, tcl_evolve, z_drive_rates, compute_ab, DriveAxis, DriveConfig, NoiseRealization, Pauli,
    QubitState, TclRates, DEFAULT_LONG_TIME,
};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::noisegen::{build_toy_bath, dsa_sample, BathConfig, DsaConfig};
use crate::rng::{child_seed, labelled_seed};
use crate::spam::{faulty_state, povm_probabilities, sample_shots, InitLabel, ShotDataset, ShotEntry, ShotKey, SpamParams};
use crate::spectra::{DeviceParams, SphericalSpectraSet};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default low-frequency exclusion, `|Ω|/2π` in MHz.
pub const LOW_FREQUENCY_MHZ: f64 = 2.3e-3;

/// Produces the pre-measurement state for a drive and preparation.
pub trait Backend: Sync {
    fn name(&self) -> &'static str;

    /// Whether SPAM errors are bypassed entirely.
    fn ignores_spam(&self) -> bool {
        false
    }

    /// Rotating-frame states at each of the sorted `times` under `axis` with amplitude `omega`.
    fn final_states(&self, axis: DriveAxis, omega: f64, times: &[f64], rho0: &QubitState, seed: u64) -> Result<Vec<QubitState>>;
}

/// Closed-form TCL evolution with analytically injected spectra.
#[derive(Clone, Debug)]
pub struct ClosedFormTcl {
    pub spectra: SphericalSpectraSet,
    pub device: DeviceParams,
}

impl ClosedFormTcl {
    pub fn new(spectra: SphericalSpectraSet, device: DeviceParams) -> Self {
        ClosedFormTcl { spectra, device }
    }

    fn rates(&self, axis: DriveAxis, omega: f64) -> Result<TclRates> {
        Ok(match axis {
            DriveAxis::XPlus => {
                let ab = compute_ab(&self.spectra, omega, &self.device)?;
                TclRates::X {
                    rates: ab,
                    coherence_rate: 0.5 * ab.a_omega,
                }
            }
            DriveAxis::ZPlus => TclRates::Z(z_drive_rates(&self.spectra, omega, &self.device)?),
            DriveAxis::ZMinus => TclRates::Z(z_drive_rates(&self.spectra, -omega, &self.device)?),
        })
    }
}

impl Backend for ClosedFormTcl {
    fn name(&self) -> &'static str {
        "closed_form_tcl"
    }

    fn final_states(&self, axis: DriveAxis, omega: f64, times: &[f64], rho0: &QubitState, _seed: u64) -> Result<Vec<QubitState>> {
        self.device.check_drive(omega)?;
        let rates = self.rates(axis, omega)?;
        times
            .iter()
            .map(|&t| {
                let drive = DriveConfig::with_threshold(axis, omega, t, 0.0)?;
                tcl_evolve(&drive, &rates, rho0)
            })
            .collect()
    }
}

/// Closed-form backend with SPAM switched off.
#[derive(Clone, Debug)]
pub struct IdealBackend(pub ClosedFormTcl);

impl Backend for IdealBackend {
    fn name(&self) -> &'static str {
        "ideal"
    }

    fn ignores_spam(&self) -> bool {
        true
    }

    fn final_states(&self, axis: DriveAxis, omega: f64, times: &[f64], rho0: &QubitState, seed: u64) -> Result<Vec<QubitState>> {
        self.0.final_states(axis, omega, times, rho0, seed)
    }
}

/// Which coupling the trajectory backend simulates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryCoupling {
    /// `β(t) σ_z`.
    Classical,
    /// Toy bath qubit.
    ToyBath(BathConfig),
}

/// Monte-Carlo average over sampled noise trajectories.
#[derive(Clone, Debug)]
pub struct TrajectoryBackend {
    pub dsa: DsaConfig,
    pub coupling: TrajectoryCoupling,
    pub n_realizations: usize,
    /// Integration step; `None` picks the largest admissible one.
    pub dt: Option<f64>,
}

impl TrajectoryBackend {
    fn realize(&self, seed: u64, t_end: f64, dt: f64) -> Result<NoiseRealization> {
        let lag = match &self.coupling {
            TrajectoryCoupling::Classical => 0.0,
            TrajectoryCoupling::ToyBath(b) => b.lag_gamma,
        };
        let grid = uniform_grid(t_end + lag + dt, dt);
        let beta = dsa_sample(&self.dsa, &grid, seed)?;
        Ok(match &self.coupling {
            TrajectoryCoupling::Classical => NoiseRealization::Classical(beta),
            TrajectoryCoupling::ToyBath(b) => NoiseRealization::ToyBath {
                coeffs: build_toy_bath(&beta, b)?,
                correlation_time: correlation_time(&self.dsa.generating_spectrum).unwrap_or(f64::INFINITY),
            },
        })
    }

    fn step(&self, omega: f64) -> f64 {
        let mut dt = 0.05 / omega.abs();
        if let Some(tc) = correlation_time(&self.dsa.generating_spectrum) {
            dt = dt.min(0.05 * tc);
        }
        self.dt.map_or(dt, |d| d.min(dt))
    }
}

impl Backend for TrajectoryBackend {
    fn name(&self) -> &'static str {
        "trajectory"
    }

    fn final_states(&self, axis: DriveAxis, omega: f64, times: &[f64], rho0: &QubitState, seed: u64) -> Result<Vec<QubitState>> {
        if self.n_realizations < 2 {
            return Err(Error::config("trajectory backend needs at least 2 realizations"));
        }
        let t_end = times.last().copied().unwrap_or(0.0);
        let drive = DriveConfig::with_threshold(axis, omega, t_end, 0.0)?;
        let dt = self.step(omega);
        let sums = (0..self.n_realizations as u64)
            .into_par_iter()
            .map(|k| {
                let noise = self.realize(child_seed(seed, k), t_end, dt)?;
                simulate_states(&drive, times, &noise, rho0, dt)
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = C64::new(1.0 / self.n_realizations as f64, 0.0);
        Ok((0..times.len())
            .map(|j| {
                let m = sums.iter().fold(Mat2::zeros(), |acc, s| acc + *s[j].matrix());
                QubitState::from_matrix_unchecked(m.scale(scale))
            })
            .collect())
    }
}

/// Sampling and guard settings shared by all protocol runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub n_shots: u64,
    pub seed: u64,
    /// Record exact probabilities instead of sampling shots.
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub spam: SpamParams,
    #[serde(default = "default_long_time")]
    pub long_time: f64,
    #[serde(default)]
    pub allow_low_frequency: bool,
}

fn default_long_time() -> f64 {
    DEFAULT_LONG_TIME
}

impl RunSettings {
    pub fn new(n_shots: u64, seed: u64, spam: SpamParams) -> Self {
        RunSettings {
            n_shots,
            seed,
            analytic: false,
            spam,
            long_time: DEFAULT_LONG_TIME,
            allow_low_frequency: false,
        }
    }

    pub fn analytic(mut self) -> Self {
        self.analytic = true;
        self
    }

    fn check_omega(&self, omega: f64) -> Result<()> {
        if !omega.is_finite() || omega == 0.0 {
            return Err(Error::plan("drive amplitude must be finite and non-zero"));
        }
        let mhz = omega.abs() / (2.0 * std::f64::consts::PI);
        if !self.allow_low_frequency && mhz < LOW_FREQUENCY_MHZ {
            return Err(Error::plan(format!(
                "|Ω|/2π = {mhz:.3e} MHz is inside the low-frequency exclusion window (< {LOW_FREQUENCY_MHZ} MHz); set allow_low_frequency to override"
            )));
        }
        Ok(())
    }

    fn check_times(&self, omega: f64, times: &[f64], min_distinct: usize) -> Result<()> {
        if times.len() < min_distinct {
            return Err(Error::plan(format!("need at least {min_distinct} distinct times (got {})", times.len())));
        }
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::plan("duplicate evolution times"));
        }
        for &t in times {
            if !(t > 0.0) || omega.abs() * t < self.long_time {
                return Err(Error::plan(format!(
                    "(Ω, T) = ({omega}, {t}) violates |Ω|T >= {}",
                    self.long_time
                )));
            }
        }
        if self.n_shots == 0 {
            return Err(Error::plan("n_shots must be >= 1"));
        }
        Ok(())
    }
}

fn key_label(k: &ShotKey) -> String {
    format!("{}|{:e}|{}|{}|{:e}", k.axis.label(), k.omega, k.init.label(), k.obs.label(), k.t)
}

/// One drive/preparation/observable series over `times`.
fn measure_series(
    backend: &dyn Backend,
    axis: DriveAxis,
    omega: f64,
    init: InitLabel,
    obs: Pauli,
    times: &[f64],
    settings: &RunSettings,
) -> Result<Vec<ShotEntry>> {
    let spam = if backend.ignores_spam() { SpamParams::ideal() } else { settings.spam };
    let rho0 = faulty_state(init.axis, init.plus, &spam)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    // common noise per (drive, Ω); independent shots per point
    let noise_seed = labelled_seed(settings.seed, &format!("noise|{}|{:e}", axis.label(), omega));
    let states = backend.final_states(axis, omega, &sorted, &rho0, noise_seed)?;
    sorted
        .iter()
        .zip(states)
        .map(|(&t, state)| {
            let key = ShotKey { axis, omega, init, obs, t };
            let (p_plus, _) = povm_probabilities(&state, obs, &spam);
            let p_plus = p_plus.clamp(0.0, 1.0);
            Ok(if settings.analytic {
                ShotEntry::analytic(key, settings.n_shots, p_plus)
            } else {
                let seed = labelled_seed(settings.seed, &format!("shots|{}", key_label(&key)));
                ShotEntry::sampled(key, settings.n_shots, sample_shots(p_plus, settings.n_shots, seed)?)
            })
        })
        .collect()
}

fn x_pair(backend: &dyn Backend, omega: f64, times: &[f64], settings: &RunSettings) -> Result<ShotDataset> {
    let mut ds = ShotDataset::new();
    for init in [InitLabel::X_PLUS, InitLabel::X_MINUS] {
        ds.entries.extend(measure_series(backend, DriveAxis::XPlus, omega, init, Pauli::X, times, settings)?);
    }
    Ok(ds)
}

/// Protocol 1: `⟨σ_x(T)⟩` from `|x±⟩` under an x drive.
pub fn run_protocol1(backend: &dyn Backend, omega: f64, t: f64, settings: &RunSettings) -> Result<ShotDataset> {
    settings.check_omega(omega)?;
    settings.check_times(omega, &[t], 1)?;
    x_pair(backend, omega, &[t], settings)
}

/// Protocol 2: Protocol 1 over a time grid.
pub fn run_protocol2(backend: &dyn Backend, omega: f64, times: &[f64], settings: &RunSettings) -> Result<ShotDataset> {
    settings.check_omega(omega)?;
    settings.check_times(omega, times, 3)?;
    x_pair(backend, omega, times, settings)
}

fn check_aligned(omega: f64, aligned: &[f64], settings: &RunSettings) -> Result<()> {
    for &t in aligned {
        let n = omega.abs() * t / (2.0 * std::f64::consts::PI);
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return Err(Error::plan(format!("aligned time {t} is not 2πn/|Ω|")));
        }
    }
    if !aligned.is_empty() {
        settings.check_times(omega, aligned, 1)?;
    }
    Ok(())
}

fn multi_axis(
    backend: &dyn Backend,
    omega: f64,
    times: &[f64],
    aligned: &[f64],
    settings: &RunSettings,
) -> Result<ShotDataset> {
    if omega <= 0.0 {
        return Err(Error::plan("multi-axis protocols take Ω > 0; the -z drive supplies the sign"));
    }
    let mut ds = ShotDataset::new();
    for axis in [DriveAxis::ZPlus, DriveAxis::ZMinus] {
        for init in [InitLabel::Z_PLUS, InitLabel::Z_MINUS] {
            ds.entries.extend(measure_series(backend, axis, omega, init, Pauli::Z, times, settings)?);
        }
    }
    if !aligned.is_empty() {
        for init in [InitLabel::X_PLUS, InitLabel::X_MINUS] {
            ds.entries.extend(measure_series(backend, DriveAxis::ZPlus, omega, init, Pauli::X, aligned, settings)?);
        }
    }
    ds.extend(x_pair(backend, omega, times, settings)?);
    Ok(ds)
}

/// Protocol 3: one time per drive plus one frame-aligned time.
pub fn run_protocol3(backend: &dyn Backend, omega: f64, t: f64, aligned_t: f64, settings: &RunSettings) -> Result<ShotDataset> {
    settings.check_omega(omega)?;
    settings.check_times(omega, &[t], 1)?;
    check_aligned(omega, &[aligned_t], settings)?;
    multi_axis(backend, omega, &[t], &[aligned_t], settings)
}

/// Protocol 4: all drives over a time grid; an empty aligned grid skips the `S_{0,0}(0)` path.
pub fn run_protocol4(
    backend: &dyn Backend,
    omega: f64,
    times: &[f64],
    aligned: &[f64],
    settings: &RunSettings,
) -> Result<ShotDataset> {
    settings.check_omega(omega)?;
    settings.check_times(omega, times, 3)?;
    if !aligned.is_empty() && aligned.len() < 3 {
        return Err(Error::plan("aligned grid needs at least 3 times (or none)"));
    }
    check_aligned(omega, aligned, settings)?;
    multi_axis(backend, omega, times, aligned, settings)
}

/// Rabi-period counts interleaving with `times` while meeting the long-time guard.
pub fn default_aligned_n(omega: f64, times: &[f64], long_time: f64) -> Vec<u32> {
    let min_n = (long_time / (2.0 * std::f64::consts::PI)).ceil().max(1.0) as u32;
    let mut ns: Vec<u32> = times
        .iter()
        .map(|&t| ((omega.abs() * t / (2.0 * std::f64::consts::PI)).round() as u32).max(min_n))
        .collect();
    ns.sort_unstable();
    ns.dedup();
    let mut next = ns.last().copied().unwrap_or(min_n);
    while ns.len() < times.len().min(3) {
        next += 1;
        ns.push(next);
    }
    ns
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ProtocolId {
    P1,
    P2,
    P3,
    P4,
}

impl TryFrom<u8> for ProtocolId {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ProtocolId::P1),
            2 => Ok(ProtocolId::P2),
            3 => Ok(ProtocolId::P3),
            4 => Ok(ProtocolId::P4),
            _ => Err(format!("protocol must be 1-4 (got {v})")),
        }
    }
}

impl From<ProtocolId> for u8 {
    fn from(p: ProtocolId) -> u8 {
        match p {
            ProtocolId::P1 => 1,
            ProtocolId::P2 => 2,
            ProtocolId::P3 => 3,
            ProtocolId::P4 => 4,
        }
    }
}

/// Full multi-frequency plan in internal units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub protocol: ProtocolId,
    /// Drive amplitudes, rad/μs.
    pub omegas: Vec<f64>,
    /// Evolution times, μs.
    pub times: Vec<f64>,
    /// Rabi-period counts for aligned times; `None` picks a default per Ω.
    #[serde(default)]
    pub aligned_n: Option<Vec<u32>>,
    #[serde(default)]
    pub skip_aligned: bool,
    pub settings: RunSettings,
}

impl ProtocolPlan {
    pub fn aligned_times(&self, omega: f64) -> Result<Vec<f64>> {
        if self.skip_aligned || matches!(self.protocol, ProtocolId::P1 | ProtocolId::P2) {
            return Ok(Vec::new());
        }
        let ns = match &self.aligned_n {
            Some(ns) => ns.clone(),
            None => default_aligned_n(omega, &self.times, self.settings.long_time),
        };
        let ns = if self.protocol == ProtocolId::P3 { ns.into_iter().take(1).collect() } else { ns };
        frame_aligned_times(omega, &ns).map_err(|e| Error::plan(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() {
            return Err(Error::plan("plan has no drive amplitudes"));
        }
        let single = matches!(self.protocol, ProtocolId::P1 | ProtocolId::P3);
        if single && self.times.len() != 1 {
            return Err(Error::plan("protocols 1 and 3 take exactly one evolution time"));
        }
        if self.protocol == ProtocolId::P3 && self.skip_aligned {
            return Err(Error::plan("protocol 3 needs its aligned time"));
        }
        for &w in &self.omegas {
            self.settings.check_omega(w)?;
            self.settings.check_times(w, &self.times, if single { 1 } else { 3 })?;
            let aligned = self.aligned_times(w)?;
            check_aligned(w, &aligned, &self.settings)?;
            if matches!(self.protocol, ProtocolId::P3 | ProtocolId::P4) && w <= 0.0 {
                return Err(Error::plan("multi-axis protocols take Ω > 0"));
            }
        }
        Ok(())
    }

    /// Runs every Ω (in parallel) and merges the datasets in Ω order.
    pub fn run(&self, backend: &dyn Backend) -> Result<ShotDataset> {
        self.validate()?;
        let parts = self
            .omegas
            .par_iter()
            .map(|&w| {
                let aligned = self.aligned_times(w)?;
                match self.protocol {
                    ProtocolId::P1 => run_protocol1(backend, w, self.times[0], &self.settings),
                    ProtocolId::P2 => run_protocol2(backend, w, &self.times, &self.settings),
                    ProtocolId::P3 => run_protocol3(backend, w, self.times[0], aligned[0], &self.settings),
                    ProtocolId::P4 => run_protocol4(backend, w, &self.times, &aligned, &self.settings),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ds = ShotDataset::new();
        for p in parts {
            ds.extend(p);
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::tcl_expectation_x_drive;
    use crate::dynamics::RateCoefficients;
    use crate::spectra::Component;

    fn dephasing_backend(s_plus: f64, s_minus: f64) -> ClosedFormTcl {
        // S00(ω) = [S⁺ + S⁻ sign(ω)]/2 for these flat test spectra
        let set = SphericalSpectraSet::dephasing_only(Component::white(0.5 * s_plus), false);
        let mut set = set;
        if s_minus != 0.0 {
            let grid = vec![-1e6, -1e-9, 1e-9, 1e6];
            let vals = vec![0.5 * (s_plus - s_minus), 0.5 * (s_plus - s_minus), 0.5 * (s_plus + s_minus), 0.5 * (s_plus + s_minus)];
            set.insert(
                0,
                0,
                Component::real(crate::spectra::SpectralFn::Model(crate::spectra::SpectrumModel::Tabulated { grid, values: vals })),
            );
        }
        ClosedFormTcl::new(set, DeviceParams::new(2.0 * std::f64::consts::PI * 5000.0).unwrap())
    }

    #[test]
    fn analytic_protocol1_is_exact() {
        let b = dephasing_backend(0.1, 0.02);
        let s = RunSettings::new(1000, 1, SpamParams::ideal()).analytic();
        let ds = run_protocol1(&b, 2.0, 10.0, &s).unwrap();
        assert_eq!(ds.len(), 2);
        let r = RateCoefficients { a_omega: 0.1, b_omega: 0.02 };
        let xp = ds.series(DriveAxis::XPlus, 2.0, InitLabel::X_PLUS, Pauli::X)[0].expectation_hat();
        let xm = ds.series(DriveAxis::XPlus, 2.0, InitLabel::X_MINUS, Pauli::X)[0].expectation_hat();
        assert!((xp - tcl_expectation_x_drive(&r, 1.0, 10.0).unwrap()).abs() < 1e-12);
        assert!((xm - tcl_expectation_x_drive(&r, -1.0, 10.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn plan_guards() {
        let b = dephasing_backend(0.1, 0.0);
        let s = RunSettings::new(100, 1, SpamParams::ideal());
        assert!(run_protocol2(&b, 2.0, &[10.0, 10.0, 12.0], &s).is_err());
        assert!(run_protocol2(&b, 2.0, &[10.0, 12.0], &s).is_err());
        assert!(run_protocol1(&b, 2.0, 4.0, &s).is_err());
        assert!(run_protocol1(&b, 0.01, 2000.0, &s).is_err());
        let mut lo = s.clone();
        lo.allow_low_frequency = true;
        assert!(run_protocol1(&b, 0.01, 2000.0, &lo).is_ok());
        assert!(run_protocol3(&b, 1.0, 12.0, 12.0, &s).is_err());
    }

    #[test]
    fn reproducible_sampling() {
        let b = dephasing_backend(0.1, 0.02);
        let s = RunSettings::new(1000, 42, SpamParams::new(0.98, 0.94, 0.02).unwrap());
        let a = run_protocol2(&b, 2.0, &[5.0, 10.0, 15.0], &s).unwrap();
        let c = run_protocol2(&b, 2.0, &[15.0, 5.0, 10.0], &s).unwrap();
        let mut ka: Vec<_> = a.entries.iter().map(|e| (key_label(&e.key), e.n_plus)).collect();
        let mut kc: Vec<_> = c.entries.iter().map(|e| (key_label(&e.key), e.n_plus)).collect();
        ka.sort();
        kc.sort();
        assert_eq!(ka, kc);
    }

    #[test]
    fn protocol4_layout() {
        let b = dephasing_backend(0.1, 0.0);
        let s = RunSettings::new(100, 3, SpamParams::ideal());
        let w = 3.0;
        let times = [4.0, 6.0, 8.0, 10.0];
        let aligned = frame_aligned_times(w, &default_aligned_n(w, &times, 10.0)).unwrap();
        let ds = run_protocol4(&b, w, &times, &aligned, &s).unwrap();
        assert_eq!(ds.len(), 4 * 2 * 2 + 2 * aligned.len() + 2 * 4);
        let skipped = run_protocol4(&b, w, &times, &[], &s).unwrap();
        assert_eq!(skipped.len(), 4 * 2 * 2 + 2 * 4);
    }
}
