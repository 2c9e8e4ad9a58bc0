//! Driven-qubit dynamics.
//!
//! Two independent engines: [`trajectory`] propagates a qubit (optionally
//! joined with a bath qubit) exactly under sampled noise, and [`tcl`] holds
//! the closed-form second-order TCL solutions for constant drives. [`sinc`]
//! integrates the single-axis TCL equation with its finite-time filter kept,
//! as a check on the long-time approximation.

pub mod sinc;
pub mod tcl;
pub mod trajectory;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, ONE, ZERO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use sinc::{tcl_sinc_integrator, TabulatedSpectrum};
pub use tcl::{
    compute_ab, frame_aligned_times, secular_warning, tcl_evolve, tcl_expectation_x_drive,
    tcl_expectation_z_drive, toggling_to_rotating, z_drive_rates, TclRates, ZDriveRates, ZDriveSolution,
};
pub use trajectory::{
    discretized_z_drive, ensemble_expectation, simulate_trajectory, NoiseRealization,
};

/// Default long-time threshold on `|Ω|T`.
pub const DEFAULT_LONG_TIME: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::X => Mat2::sigma_x(),
            Pauli::Y => Mat2::sigma_y(),
            Pauli::Z => Mat2::sigma_z(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DriveAxis {
    XPlus,
    ZPlus,
    ZMinus,
}

impl DriveAxis {
    pub fn label(self) -> &'static str {
        match self {
            DriveAxis::XPlus => "+x",
            DriveAxis::ZPlus => "+z",
            DriveAxis::ZMinus => "-z",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub axis: DriveAxis,
    /// Drive amplitude Ω, rad/μs. Signed for the x drive; the z sign is carried by `axis`.
    pub amplitude: f64,
    /// Evolution time T, μs.
    pub duration: f64,
    /// Trotterized virtual-z implementation with this many steps.
    #[serde(default)]
    pub discretize_z: Option<usize>,
}

impl DriveConfig {
    pub fn new(axis: DriveAxis, amplitude: f64, duration: f64) -> Result<Self> {
        let d = DriveConfig {
            axis,
            amplitude,
            duration,
            discretize_z: None,
        };
        d.validate(DEFAULT_LONG_TIME)?;
        Ok(d)
    }

    /// Same as [`DriveConfig::new`] with an explicit long-time threshold.
    pub fn with_threshold(axis: DriveAxis, amplitude: f64, duration: f64, long_time: f64) -> Result<Self> {
        let d = DriveConfig {
            axis,
            amplitude,
            duration,
            discretize_z: None,
        };
        d.validate(long_time)?;
        Ok(d)
    }

    pub fn validate(&self, long_time: f64) -> Result<()> {
        if !self.amplitude.is_finite() || self.amplitude == 0.0 {
            return Err(Error::config("drive amplitude must be finite and non-zero"));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(Error::config(format!("duration must be > 0 (got {})", self.duration)));
        }
        if self.amplitude.abs() * self.duration < long_time {
            return Err(Error::config(format!(
                "|Ω|T = {:.3} below long-time threshold {long_time}",
                self.amplitude.abs() * self.duration
            )));
        }
        if let Some(steps) = self.discretize_z {
            if self.axis == DriveAxis::XPlus {
                return Err(Error::config("discretize_z applies to z drives only"));
            }
            if steps < 100 {
                return Err(Error::config(format!("discretize_z needs >= 100 steps (got {steps})")));
            }
        }
        Ok(())
    }

    /// Frequency argument of the drive: `Ω` for `XPlus`/`ZPlus`, `-Ω` for `ZMinus`.
    pub fn signed_omega(&self) -> f64 {
        match self.axis {
            DriveAxis::ZMinus => -self.amplitude,
            _ => self.amplitude,
        }
    }

    /// Control field `h` with `H_ctrl = h·σ`.
    pub fn control_field(&self) -> [f64; 3] {
        let half = 0.5 * self.signed_omega();
        match self.axis {
            DriveAxis::XPlus => [half, 0.0, 0.0],
            DriveAxis::ZPlus | DriveAxis::ZMinus => [0.0, 0.0, half],
        }
    }
}

/// Single-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState(Mat2);

impl QubitState {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn from_matrix(m: Mat2) -> Result<Self> {
        let s = QubitState(m);
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn from_matrix_unchecked(m: Mat2) -> Self {
        QubitState(m)
    }

    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        QubitState::from_matrix(Mat2::from_bloch(r))
    }

    /// Eigenstate `|u±⟩⟨u±|` of `σ_u`.
    pub fn eigenstate(axis: Pauli, plus: bool) -> Self {
        let mut r = [0.0; 3];
        r[axis.index()] = if plus { 1.0 } else { -1.0 };
        QubitState(Mat2::from_bloch(r))
    }

    pub fn maximally_mixed() -> Self {
        QubitState(Mat2::from_bloch([0.0; 3]))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.0.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::domain(format!("trace {tr} differs from 1")));
        }
        if self.0.hermiticity_defect() > Self::HERMITIAN_TOL {
            return Err(Error::domain("state is not Hermitian"));
        }
        let ev = self.0.hermitian_eigenvalues();
        if ev[0] < -Self::POSITIVITY_TOL {
            return Err(Error::domain(format!("negative eigenvalue {}", ev[0])));
        }
        Ok(())
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.0.bloch()
    }

    pub fn expectation(&self, p: Pauli) -> f64 {
        self.bloch()[p.index()]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.0.hermitian_eigenvalues()
    }

    /// Fidelity `⟨ψ|ρ|ψ⟩` with a pure eigenstate.
    pub fn fidelity_with_eigenstate(&self, axis: Pauli, plus: bool) -> f64 {
        let s = if plus { 1.0 } else { -1.0 };
        0.5 * (1.0 + s * self.expectation(axis))
    }

    /// Trace distance `|r - r'|/2`.
    pub fn trace_distance(&self, other: &QubitState) -> f64 {
        let (a, b) = (self.bloch(), other.bloch());
        0.5 * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Spectral decomposition into weighted pure states.
    pub(crate) fn pure_decomposition(&self) -> Vec<(f64, [C64; 2])> {
        let r = self.bloch();
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len < 1e-15 {
            return vec![(0.5, [ONE, ZERO]), (0.5, [ZERO, ONE])];
        }
        let theta = (r[2] / len).clamp(-1.0, 1.0).acos();
        let phi = r[1].atan2(r[0]);
        let (s, c) = (0.5 * theta).sin_cos();
        let up = [C64::new(c, 0.0), C64::from_polar(s, phi)];
        let down = [C64::from_polar(-s, -phi), C64::new(c, 0.0)];
        vec![(0.5 * (1.0 + len), up), (0.5 * (1.0 - len), down)]
    }
}

/// Decay/drift pair of the x-drive population equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCoefficients {
    pub a_omega: f64,
    pub b_omega: f64,
}
