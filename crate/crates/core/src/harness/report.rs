//! Campaign reports and report comparison.

use crate::error::{Error, Result};
use crate::estimation::{FrequencyEstimate, Method, Quantity, SpectralEstimate};
use crate::protocols::ProtocolId;
use crate::spam::SpamParams;
use crate::spectra::{DeviceParams, SphericalSpectraSet};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// An estimator that produced no value at one drive amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub omega: f64,
    pub method: String,
    pub error: String,
}

/// Injected value of a quantity at one drive amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injected {
    pub omega: f64,
    pub quantity: Quantity,
    pub value: f64,
}

/// Standard and robust estimates of one quantity side by side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub omega: f64,
    pub quantity: Quantity,
    pub truth: Option<f64>,
    pub standard: Option<f64>,
    pub standard_se: Option<f64>,
    pub robust: Option<f64>,
    pub robust_se: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub protocol: ProtocolId,
    pub seed: u64,
    pub backend: String,
    pub analytic: bool,
    pub shots: u64,
    /// rad/μs.
    pub omega_q: f64,
    /// Drive amplitudes, rad/μs.
    pub omegas: Vec<f64>,
    pub spam: SpamParams,
    pub estimates: Vec<FrequencyEstimate>,
    /// SPAM parameters pooled over frequencies, per method.
    pub pooled_spam: Vec<SpectralEstimate>,
    pub injected: Vec<Injected>,
    pub comparison: Vec<ComparisonRow>,
    pub failures: Vec<Failure>,
}

/// Value of `quantity` implied by the injected spectra and SPAM parameters.
pub fn injected_value(
    set: &SphericalSpectraSet,
    device: &DeviceParams,
    spam: &SpamParams,
    omega: f64,
    quantity: Quantity,
) -> Option<f64> {
    let wq = device.omega_q;
    let p = |a, b, w: f64| set.splus(a, b, w).ok().map(|c| c.re);
    let m = |a, b, w: f64| set.sminus(a, b, w).ok().map(|c| c.re);
    Some(match quantity {
        Quantity::DephasingClassical => p(0, 0, omega)?,
        Quantity::DephasingQuantum => m(0, 0, omega)?,
        Quantity::ScaledDephasingQuantum => spam.alpha_m * m(0, 0, omega)?,
        Quantity::TransverseClassicalPlus => p(1, -1, omega + wq)?,
        Quantity::TransverseQuantumPlus => m(-1, 1, -omega - wq)?,
        Quantity::TransverseClassicalMinus => p(-1, 1, omega - wq)?,
        Quantity::TransverseQuantumMinus => m(1, -1, -omega + wq)?,
        Quantity::DephasingZero => set.eval(0, 0, 0.0).ok()?.re,
        Quantity::RateA => p(0, 0, omega)? + 0.5 * (p(1, -1, omega + wq)? + p(-1, 1, omega - wq)?),
        Quantity::RateB => m(0, 0, omega)? + 0.5 * (m(1, -1, -omega + wq)? - m(-1, 1, -omega - wq)?),
        Quantity::Alpha => spam.alpha(),
        Quantity::AlphaM => spam.alpha_m,
        Quantity::Delta => spam.delta,
    })
}

impl Report {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read report {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("invalid report {}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn truth(&self, omega: f64, quantity: Quantity) -> Option<f64> {
        self.injected
            .iter()
            .find(|i| i.omega == omega && i.quantity == quantity)
            .map(|i| i.value)
    }

    /// Every per-frequency estimate, in frequency then method order.
    pub fn all_estimates(&self) -> impl Iterator<Item = &SpectralEstimate> {
        self.estimates.iter().flat_map(|f| f.estimates.iter())
    }

    pub fn estimate(&self, omega: f64, quantity: Quantity, method: Method) -> Option<&SpectralEstimate> {
        self.all_estimates()
            .find(|e| e.omega == omega && e.quantity == quantity && e.method == method)
    }
}

/// One matched estimate in two reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub omega: f64,
    pub quantity: Quantity,
    pub method: Method,
    pub value_a: f64,
    pub value_b: f64,
    /// `(a - b)` over the combined standard error.
    pub z: f64,
}

fn z_between(a: &SpectralEstimate, b: &SpectralEstimate) -> f64 {
    let d = a.value - b.value;
    if d == 0.0 {
        return 0.0;
    }
    d / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

/// Per-frequency z-scores between two reconstructions on the same grid.
pub fn compare_reports(a: &Report, b: &Report) -> Result<Vec<ReportDelta>> {
    let same_grid = a.omegas.len() == b.omegas.len()
        && a.omegas
            .iter()
            .zip(&b.omegas)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if !same_grid {
        return Err(Error::config(format!(
            "frequency grids differ ({} vs {} points); refusing to compare",
            a.omegas.len(),
            b.omegas.len()
        )));
    }
    let mut out = Vec::new();
    for ea in a.all_estimates() {
        let matched = b.all_estimates().find(|eb| {
            (eb.omega - ea.omega).abs() <= 1e-12 * ea.omega.abs().max(1.0)
                && eb.quantity == ea.quantity
                && eb.method == ea.method
        });
        if let Some(eb) = matched {
            out.push(ReportDelta {
                omega: ea.omega,
                quantity: ea.quantity,
                method: ea.method,
                value_a: ea.value,
                value_b: eb.value,
                z: z_between(ea, eb),
            });
        }
    }
    Ok(out)
}

/// z-scores of the standard estimates against the robust ones within one report.
pub fn compare_methods(report: &Report, a: Method, b: Method) -> Vec<ReportDelta> {
    report
        .all_estimates()
        .filter(|e| e.method == a)
        .filter_map(|ea| {
            let eb = report.estimate(ea.omega, ea.quantity, b)?;
            Some(ReportDelta {
                omega: ea.omega,
                quantity: ea.quantity,
                method: a,
                value_a: ea.value,
                value_b: eb.value,
                z: z_between(ea, eb),
            })
        })
        .collect()
}
