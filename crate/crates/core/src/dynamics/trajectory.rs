//! Exact propagation under sampled noise.
//!
//! The qubit is carried as a 2×2 amplitude matrix `M` (system row, bath
//! column) so that classical noise and the toy bath share one code path.
//! Classical noise acts as `U ⊗ I`, i.e. `M → U M`. For the toy bath,
//! `H = h·σ ⊗ I + σ_z ⊗ (b·τ)/2` splits on the eigenspaces `P_±` of `b̂·τ`,
//! giving the exact step `M → Σ_s U_s M P_sᵀ` with `U_s` generated by
//! `h + s|b|/2 ẑ`. Noise is sampled at step midpoints.

use super::{DriveAxis, DriveConfig, Pauli, QubitState};
use crate::error::{Error, Result};
use crate::linalg::{su2_propagator, Mat2, ZERO};
use crate::noisegen::{interpolate, BathCoefficients, NoiseTrajectory};
use crate::rng::child_seed;
use crate::spectra::SpectrumModel;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Step-size safety factor relative to the drive period and correlation time.
pub const STEP_FACTOR: f64 = 0.05;

/// One realization of the noise seen by the qubit.
#[derive(Clone, Debug)]
pub enum NoiseRealization {
    Silent,
    /// `β(t) σ_z`.
    Classical(NoiseTrajectory),
    /// Classical vector field `f(t)·σ`, linearly interpolated.
    ClassicalField {
        times: Vec<f64>,
        fields: Vec<[f64; 3]>,
        correlation_time: Option<f64>,
    },
    /// `σ_z ⊗ (b(t)·τ)/2` with the bath qubit starting in `|0⟩`.
    ToyBath {
        coeffs: BathCoefficients,
        correlation_time: f64,
    },
}

/// Characteristic correlation time of a generating spectrum.
pub fn correlation_time(model: &SpectrumModel) -> Option<f64> {
    match model {
        SpectrumModel::Lorentzian { tc, .. } => Some(*tc),
        SpectrumModel::White { .. } => None,
        SpectrumModel::Tabulated { grid, .. } => {
            let wmax = grid.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            (wmax > 0.0).then(|| std::f64::consts::PI / wmax)
        }
    }
}

impl NoiseRealization {
    pub fn correlation_time(&self) -> Option<f64> {
        match self {
            NoiseRealization::Silent => None,
            NoiseRealization::Classical(t) => correlation_time(&t.config.generating_spectrum),
            NoiseRealization::ClassicalField { correlation_time, .. } => *correlation_time,
            NoiseRealization::ToyBath { correlation_time, .. } => Some(*correlation_time),
        }
    }

    fn end_time(&self) -> f64 {
        match self {
            NoiseRealization::Silent => f64::INFINITY,
            NoiseRealization::Classical(t) => t.span().1,
            NoiseRealization::ClassicalField { times, .. } => *times.last().unwrap_or(&f64::NEG_INFINITY),
            NoiseRealization::ToyBath { coeffs, .. } => coeffs.end_time(),
        }
    }

    fn start_time(&self) -> f64 {
        match self {
            NoiseRealization::Silent => f64::NEG_INFINITY,
            NoiseRealization::Classical(t) => t.span().0,
            NoiseRealization::ClassicalField { times, .. } => *times.first().unwrap_or(&f64::INFINITY),
            NoiseRealization::ToyBath { coeffs, .. } => *coeffs.times.first().unwrap_or(&f64::INFINITY),
        }
    }
}

/// Largest admissible step for a drive amplitude and noise realization.
pub fn max_step(amplitude: f64, noise: &NoiseRealization) -> f64 {
    let mut dt = STEP_FACTOR / amplitude.abs();
    if let Some(tc) = noise.correlation_time() {
        dt = dt.min(STEP_FACTOR * tc);
    }
    dt
}

/// Uniform grid `0, dt, …` reaching at least `t_end`.
pub fn uniform_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).ceil() as usize + 1;
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn transpose(m: &Mat2) -> Mat2 {
    let a = &m.0;
    Mat2::new(a[0][0], a[1][0], a[0][1], a[1][1])
}

fn step(m: &Mat2, control: [f64; 3], noise: &NoiseRealization, t_mid: f64, h: f64) -> Result<Mat2> {
    let missing = || Error::domain(format!("noise does not cover t = {t_mid}"));
    Ok(match noise {
        NoiseRealization::Silent => su2_propagator(control, h) * *m,
        NoiseRealization::Classical(traj) => {
            let beta = interpolate(&traj.time_grid, &traj.samples, t_mid).ok_or_else(missing)?;
            su2_propagator([control[0], control[1], control[2] + beta], h) * *m
        }
        NoiseRealization::ClassicalField { times, fields, .. } => {
            let mut f = [0.0; 3];
            for (u, slot) in f.iter_mut().enumerate() {
                *slot = interp_component(times, fields, u, t_mid).ok_or_else(missing)?;
            }
            su2_propagator([control[0] + f[0], control[1] + f[1], control[2] + f[2]], h) * *m
        }
        NoiseRealization::ToyBath { coeffs, .. } => {
            let b = coeffs.at(t_mid).ok_or_else(missing)?;
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if norm == 0.0 {
                return Ok(su2_propagator(control, h) * *m);
            }
            let n = Mat2::from_bloch([b[0] / norm, b[1] / norm, b[2] / norm]);
            let p_plus = transpose(&n);
            let p_minus = transpose(&(Mat2::identity() - n));
            let half = 0.5 * norm;
            let u_plus = su2_propagator([control[0], control[1], control[2] + half], h);
            let u_minus = su2_propagator([control[0], control[1], control[2] - half], h);
            u_plus * *m * p_plus + u_minus * *m * p_minus
        }
    })
}

fn interp_component(times: &[f64], fields: &[[f64; 3]], u: usize, t: f64) -> Option<f64> {
    let n = times.len();
    if n == 0 {
        return None;
    }
    let tol = 1e-12 * times[n - 1].abs().max(1.0);
    if t < times[0] - tol || t > times[n - 1] + tol {
        return None;
    }
    if n == 1 {
        return Some(fields[0][u]);
    }
    let k = times.partition_point(|&x| x <= t).clamp(1, n - 1);
    let w = ((t - times[k - 1]) / (times[k] - times[k - 1])).clamp(0.0, 1.0);
    Some(fields[k - 1][u] * (1.0 - w) + fields[k][u] * w)
}

/// Weighted pure components of the joint state.
struct Joint {
    parts: Vec<(f64, Mat2)>,
}

impl Joint {
    fn new(rho0: &QubitState) -> Self {
        let parts = rho0
            .pure_decomposition()
            .into_iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, v)| (p, Mat2::new(v[0], ZERO, v[1], ZERO)))
            .collect();
        Joint { parts }
    }

    fn evolve(&mut self, control: [f64; 3], noise: &NoiseRealization, t0: f64, t1: f64, dt: f64) -> Result<()> {
        let len = t1 - t0;
        if len <= 0.0 {
            return Ok(());
        }
        let n = (len / dt).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for k in 0..n {
            let t_mid = t0 + (k as f64 + 0.5) * h;
            for (_, m) in self.parts.iter_mut() {
                *m = step(m, control, noise, t_mid, h)?;
            }
        }
        Ok(())
    }

    fn apply_system(&mut self, u: &Mat2) {
        for (_, m) in self.parts.iter_mut() {
            *m = *u * *m;
        }
    }

    fn reduced(&self) -> QubitState {
        let mut rho = Mat2::zeros();
        for (p, m) in &self.parts {
            rho = rho + (*m * m.adjoint()).scale(C64::new(*p, 0.0));
        }
        QubitState::from_matrix_unchecked(rho)
    }

    fn norms(&self) -> Vec<f64> {
        self.parts
            .iter()
            .map(|(_, m)| m.0.iter().flatten().map(|c| c.norm_sqr()).sum())
            .collect()
    }
}

fn check_setup(drive: &DriveConfig, noise: &NoiseRealization, dt: f64, t_end: f64) -> Result<()> {
    let bound = max_step(drive.amplitude, noise);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::config(format!("step {dt} exceeds admissible {bound:.4e}")));
    }
    let tol = 1e-12 * t_end.max(1.0);
    if noise.start_time() > tol || noise.end_time() < t_end - tol {
        return Err(Error::domain(format!("noise does not cover [0, {t_end}]")));
    }
    Ok(())
}

/// Rotating-frame states at each of the sorted `record_times` (all ≤ duration).
pub fn simulate_states(
    drive: &DriveConfig,
    record_times: &[f64],
    noise: &NoiseRealization,
    rho0: &QubitState,
    dt: f64,
) -> Result<Vec<QubitState>> {
    if record_times.windows(2).any(|w| w[1] < w[0]) || record_times.iter().any(|&t| t < 0.0) {
        return Err(Error::domain("record times must be non-negative and sorted"));
    }
    let t_end = record_times.last().copied().unwrap_or(0.0);
    check_setup(drive, noise, dt, t_end)?;
    let control = drive.control_field();
    let mut joint = Joint::new(rho0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(record_times.len());
    for &tr in record_times {
        joint.evolve(control, noise, t, tr, dt)?;
        t = tr;
        out.push(joint.reduced());
    }
    Ok(out)
}

/// Rotating-frame state at the drive duration.
pub fn simulate_trajectory(
    drive: &DriveConfig,
    noise: &NoiseRealization,
    rho0: &QubitState,
    dt: f64,
) -> Result<QubitState> {
    if let Some(steps) = drive.discretize_z {
        return discretized_z_drive(drive, steps, noise, rho0, dt);
    }
    Ok(simulate_states(drive, &[drive.duration], noise, rho0, dt)?.remove(0))
}

/// Squared norms of the pure components after propagation (each should stay 1).
pub fn propagated_norms(drive: &DriveConfig, noise: &NoiseRealization, rho0: &QubitState, dt: f64) -> Result<Vec<f64>> {
    check_setup(drive, noise, dt, drive.duration)?;
    let mut joint = Joint::new(rho0);
    joint.evolve(drive.control_field(), noise, 0.0, drive.duration, dt)?;
    Ok(joint.norms())
}

/// z drive implemented as `steps` noise intervals each followed by a virtual
/// z rotation by `Ω δt`.
pub fn discretized_z_drive(
    drive: &DriveConfig,
    steps: usize,
    noise: &NoiseRealization,
    rho0: &QubitState,
    dt: f64,
) -> Result<QubitState> {
    if drive.axis == DriveAxis::XPlus {
        return Err(Error::config("discretized drive needs a z axis"));
    }
    if steps < 100 {
        return Err(Error::config(format!("discretized drive needs >= 100 steps (got {steps})")));
    }
    check_setup(drive, noise, dt, drive.duration)?;
    let delta = drive.duration / steps as f64;
    let rz = su2_propagator(drive.control_field(), delta);
    let mut joint = Joint::new(rho0);
    for i in 0..steps {
        let t0 = i as f64 * delta;
        joint.evolve([0.0; 3], noise, t0, t0 + delta, dt)?;
        joint.apply_system(&rz);
    }
    Ok(joint.reduced())
}

/// Sample mean and standard error of an observable over noise realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_realizations: usize,
}

/// Average `⟨σ_u⟩` at `record_times` over `n_realizations` noise draws.
///
/// Realization `k` is built from `child_seed(base_seed, k)`, so results do not
/// depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_expectation<F>(
    drive: &DriveConfig,
    record_times: &[f64],
    rho0: &QubitState,
    observable: Pauli,
    n_realizations: usize,
    base_seed: u64,
    dt: f64,
    realize: F,
) -> Result<EnsembleEstimate>
where
    F: Fn(u64) -> Result<NoiseRealization> + Sync,
{
    if n_realizations < 2 {
        return Err(Error::config("ensemble needs at least 2 realizations"));
    }
    let rows: Vec<Vec<f64>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|k| {
            let noise = realize(child_seed(base_seed, k))?;
            let states = simulate_states(drive, record_times, &noise, rho0, dt)?;
            Ok(states.iter().map(|s| s.expectation(observable)).collect())
        })
        .collect::<Result<_>>()?;
    let n = n_realizations as f64;
    let mut mean = vec![0.0; record_times.len()];
    let mut se = vec![0.0; record_times.len()];
    for (j, (m, s)) in mean.iter_mut().zip(se.iter_mut()).enumerate() {
        *m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - *m).powi(2)).sum::<f64>() / (n - 1.0);
        *s = (var / n).sqrt();
    }
    Ok(EnsembleEstimate {
        times: record_times.to_vec(),
        mean,
        std_error: se,
        n_realizations,
    })
}
