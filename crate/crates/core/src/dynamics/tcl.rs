//! Closed-form long-time TCL solutions for constant drives.

use super::{DriveAxis, DriveConfig, QubitState, RateCoefficients};
use crate::error::{Error, Result};
use crate::spectra::{DeviceParams, SphericalSpectraSet};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest `|S⁺/Ω|` for which the secular approximation is trusted.
pub const SECULAR_LIMIT: f64 = 0.05;

/// `A(Ω)` and `B(Ω)` of the x-drive equation `ẋ = -A x + B`.
///
/// Requires the `(0,0)`, `(1,-1)` and `(-1,1)` components.
pub fn compute_ab(spectra: &SphericalSpectraSet, omega: f64, device: &DeviceParams) -> Result<RateCoefficients> {
    let wq = device.omega_q;
    let s = |a: i8, b: i8, w: f64| spectra.eval(a, b, w).map(|c| c.re);
    let d_pos = s(0, 0, omega)?;
    let d_neg = s(0, 0, -omega)?;
    let t1 = s(1, -1, omega + wq)?;
    let t2 = s(-1, 1, -omega - wq)?;
    let t3 = s(1, -1, -omega + wq)?;
    let t4 = s(-1, 1, omega - wq)?;
    Ok(RateCoefficients {
        a_omega: d_pos + d_neg + 0.5 * (t1 + t2 + t3 + t4),
        b_omega: d_pos - d_neg + 0.5 * (t1 - t2 + t3 - t4),
    })
}

/// `⟨σ_x(T)⟩ = x₀ e^{-AT} + (B/A)(1 - e^{-AT})`.
pub fn tcl_expectation_x_drive(rates: &RateCoefficients, x0: f64, t: f64) -> Result<f64> {
    let RateCoefficients { a_omega: a, b_omega: b } = *rates;
    if !(a > 0.0) {
        return Err(Error::domain(format!("decay rate A must be > 0 (got {a})")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0 (got {t})")));
    }
    Ok(x0 * (-a * t).exp() - (b / a) * (-a * t).exp_m1())
}

/// Rates governing a z drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZDriveRates {
    /// Rate depleting `|z+⟩`.
    pub down: f64,
    /// Rate filling `|z+⟩`.
    pub up: f64,
    /// Raw dephasing spectrum at zero frequency.
    pub dephasing_zero: f64,
}

impl ZDriveRates {
    /// Population relaxation constant, `⟨σ_z⟩` differences decay as `e^{-2 total T}`.
    pub fn total(&self) -> f64 {
        self.down + self.up
    }

    /// Decay rate of the toggling-frame coherence.
    pub fn coherence_rate(&self) -> f64 {
        self.down + self.up + 2.0 * self.dephasing_zero
    }
}

/// Rates for a z drive whose signed frequency argument is `omega`
/// (`Ω` for `+z`, `-Ω` for `-z`).
pub fn z_drive_rates(spectra: &SphericalSpectraSet, omega: f64, device: &DeviceParams) -> Result<ZDriveRates> {
    let wq = device.omega_q;
    Ok(ZDriveRates {
        down: spectra.eval(-1, 1, -omega - wq)?.re,
        up: spectra.eval(1, -1, omega + wq)?.re,
        dephasing_zero: spectra.eval(0, 0, 0.0)?.re,
    })
}

/// `⟨σ_z(T)⟩` and toggling-frame coherence `ρ_{z+z-}(T)` under a z drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZDriveSolution {
    pub sigma_z: f64,
    pub coherence: C64,
}

pub fn tcl_expectation_z_drive(rates: &ZDriveRates, rho0: &QubitState, t: f64) -> Result<ZDriveSolution> {
    let ZDriveRates { down, up, dephasing_zero } = *rates;
    if down < 0.0 || up < 0.0 || dephasing_zero < 0.0 || !(t > 0.0) {
        return Err(Error::domain("z-drive rates must be >= 0 and T > 0"));
    }
    let r = rho0.bloch();
    let c0 = C64::new(0.5 * r[0], -0.5 * r[1]);
    let total = down + up;
    let sigma_z = if total == 0.0 {
        r[2]
    } else {
        let zss = (up - down) / total;
        zss + (r[2] - zss) * (-2.0 * total * t).exp()
    };
    Ok(ZDriveSolution {
        sigma_z,
        coherence: c0 * (-rates.coherence_rate() * t).exp(),
    })
}

/// Toggling-frame coherence `ρ_{+-}` mapped to the rotating frame.
pub fn toggling_to_rotating(coherence: C64, omega: f64, t: f64) -> C64 {
    coherence * C64::from_polar(1.0, -omega * t)
}

/// Times `2πn/|Ω|` at which toggling and rotating frames coincide.
pub fn frame_aligned_times(omega: f64, ns: &[u32]) -> Result<Vec<f64>> {
    if !omega.is_finite() || omega == 0.0 {
        return Err(Error::domain("aligned times need a non-zero drive"));
    }
    if ns.iter().any(|&n| n == 0) {
        return Err(Error::domain("aligned-time index must be >= 1"));
    }
    let mut t: Vec<f64> = ns.iter().map(|&n| 2.0 * PI * n as f64 / omega.abs()).collect();
    t.sort_by(f64::total_cmp);
    Ok(t)
}

/// Warning text when `|S⁺/Ω|` is outside the secular regime.
pub fn secular_warning(splus: f64, omega: f64) -> Option<String> {
    let ratio = (splus / omega).abs();
    (ratio > SECULAR_LIMIT).then(|| {
        format!("|S+/Omega| = {ratio:.3} at Omega = {omega:.4} rad/us exceeds {SECULAR_LIMIT}; secular approximation may fail")
    })
}

/// Rates feeding [`tcl_evolve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TclRates {
    /// x drive; `coherence_rate` damps the `x±` coherence (dephasing-only value `A/2`).
    X { rates: RateCoefficients, coherence_rate: f64 },
    Z(ZDriveRates),
}

/// Rotating-frame state after the drive under the closed-form solution.
pub fn tcl_evolve(drive: &DriveConfig, rates: &TclRates, rho0: &QubitState) -> Result<QubitState> {
    let t = drive.duration;
    let w = drive.signed_omega();
    let r0 = rho0.bloch();
    let bloch = match (drive.axis, rates) {
        (DriveAxis::XPlus, TclRates::X { rates, coherence_rate }) => {
            let x = tcl_expectation_x_drive(rates, r0[0], t)?;
            // ρ_{x+x-} = (z + i y)/2
            let c0 = C64::new(0.5 * r0[2], 0.5 * r0[1]);
            let c = toggling_to_rotating(c0 * (-coherence_rate * t).exp(), w, t);
            [x, 2.0 * c.im, 2.0 * c.re]
        }
        (DriveAxis::ZPlus | DriveAxis::ZMinus, TclRates::Z(z)) => {
            let sol = tcl_expectation_z_drive(z, rho0, t)?;
            // ρ_{z+z-} = (x - i y)/2
            let c = toggling_to_rotating(sol.coherence, w, t);
            [2.0 * c.re, -2.0 * c.im, sol.sigma_z]
        }
        _ => return Err(Error::config("rates do not match the drive axis")),
    };
    QubitState::from_bloch(bloch)
}
