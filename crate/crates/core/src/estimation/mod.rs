//! Spectral and SPAM-parameter estimators.
//!
//! Every estimator consumes a [`ShotDataset`](crate::spam::ShotDataset) for one
//! drive amplitude and returns a [`FrequencyEstimate`]. Standard estimators
//! invert a single evolution time; the robust ones regress over a time grid so
//! that SPAM enters only through intercepts.

mod multi;
mod regression;
mod single;

pub use multi::{invert_multi_axis, robust_multi_axis};
pub use regression::{weighted_linreg, RegressionResult};
pub use single::{
    invert_pair, invert_single_axis, robust_single_axis, robust_single_axis_linearized,
    robust_single_axis_nonlinear, single_axis_model, standard_single_axis, PairInversion, SingleAxisParams,
    LINEARIZATION_LIMIT,
};

use crate::dynamics::{DriveAxis, Pauli};
use crate::error::{Error, Result};
use crate::spam::{InitLabel, ShotDataset};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Regressions refuse to run on fewer usable points than this.
pub const MIN_REGRESSION_POINTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Standard,
    RobustLinear,
    RobustNonlinear,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::RobustLinear => "robust_linear",
            Method::RobustNonlinear => "robust_nonlinear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "robust_linear" => Ok(Method::RobustLinear),
            "robust_nonlinear" => Ok(Method::RobustNonlinear),
            _ => Err(Error::config(format!("unknown estimation method '{s}'"))),
        }
    }
}

/// What an estimate refers to. `W` stands for the drive amplitude Ω and `wq`
/// for the qubit frequency in the labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Quantity {
    /// `S⁺_{0,0}(Ω)`, the single-axis `S⁺(Ω)`.
    DephasingClassical,
    /// `S⁻_{0,0}(Ω)`.
    DephasingQuantum,
    /// `α_M S⁻_{0,0}(Ω)`, all that survives without the `α ≈ α_M` assumption.
    ScaledDephasingQuantum,
    /// `S⁺_{1,-1}(Ω+ω_q)` from the `+z` drive.
    TransverseClassicalPlus,
    /// `S⁻_{-1,1}(-Ω-ω_q)` from the `+z` drive.
    TransverseQuantumPlus,
    /// `S⁺_{-1,1}(Ω-ω_q)` from the `-z` drive.
    TransverseClassicalMinus,
    /// `S⁻_{1,-1}(-Ω+ω_q)` from the `-z` drive.
    TransverseQuantumMinus,
    /// Raw `S_{0,0}(0)`.
    DephasingZero,
    RateA,
    RateB,
    Alpha,
    AlphaM,
    Delta,
}

impl Quantity {
    pub const ALL: [Quantity; 13] = [
        Quantity::DephasingClassical,
        Quantity::DephasingQuantum,
        Quantity::ScaledDephasingQuantum,
        Quantity::TransverseClassicalPlus,
        Quantity::TransverseQuantumPlus,
        Quantity::TransverseClassicalMinus,
        Quantity::TransverseQuantumMinus,
        Quantity::DephasingZero,
        Quantity::RateA,
        Quantity::RateB,
        Quantity::Alpha,
        Quantity::AlphaM,
        Quantity::Delta,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Quantity::DephasingClassical => "S+_00(W)",
            Quantity::DephasingQuantum => "S-_00(W)",
            Quantity::ScaledDephasingQuantum => "aM*S-_00(W)",
            Quantity::TransverseClassicalPlus => "S+_1,-1(W+wq)",
            Quantity::TransverseQuantumPlus => "S-_-1,1(-W-wq)",
            Quantity::TransverseClassicalMinus => "S+_-1,1(W-wq)",
            Quantity::TransverseQuantumMinus => "S-_1,-1(-W+wq)",
            Quantity::DephasingZero => "S_00(0)",
            Quantity::RateA => "A(W)",
            Quantity::RateB => "B(W)",
            Quantity::Alpha => "alpha",
            Quantity::AlphaM => "alpha_M",
            Quantity::Delta => "delta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| Error::config(format!("unknown quantity '{s}'")))
    }

    /// Frequency at which the spectrum is sampled; `None` for SPAM parameters.
    pub fn frequency_argument(&self, omega: f64, omega_q: f64) -> Option<f64> {
        match self {
            Quantity::DephasingClassical
            | Quantity::DephasingQuantum
            | Quantity::ScaledDephasingQuantum
            | Quantity::RateA
            | Quantity::RateB => Some(omega),
            Quantity::TransverseClassicalPlus => Some(omega + omega_q),
            Quantity::TransverseQuantumPlus => Some(-omega - omega_q),
            Quantity::TransverseClassicalMinus => Some(omega - omega_q),
            Quantity::TransverseQuantumMinus => Some(-omega + omega_q),
            Quantity::DephasingZero => Some(0.0),
            Quantity::Alpha | Quantity::AlphaM | Quantity::Delta => None,
        }
    }

    pub fn is_spam(&self) -> bool {
        matches!(self, Quantity::Alpha | Quantity::AlphaM | Quantity::Delta)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Quantity> for String {
    fn from(q: Quantity) -> String {
        q.label().to_string()
    }
}

impl TryFrom<String> for Quantity {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Quantity::parse(&s)
    }
}

/// One estimated quantity at one drive amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub quantity: Quantity,
    /// Drive amplitude in rad/μs; NaN for values pooled over frequencies.
    #[serde(deserialize_with = "nullable_f64")]
    pub omega: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub value: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub std_error: f64,
    pub method: Method,
}

/// JSON has no NaN; serde_json writes it as `null`, read it back as NaN.
fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl SpectralEstimate {
    pub fn new(quantity: Quantity, omega: f64, value: f64, std_error: f64, method: Method) -> Self {
        SpectralEstimate {
            quantity,
            omega,
            value,
            std_error: std_error.abs(),
            method,
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.value - Z95 * self.std_error, self.value + Z95 * self.std_error)
    }

    pub fn covers(&self, truth: f64) -> bool {
        let (lo, hi) = self.ci95();
        lo <= truth && truth <= hi
    }

    /// `(value - truth)/std_error`; infinite when a non-zero gap has zero error.
    pub fn z_score(&self, truth: f64) -> f64 {
        let d = self.value - truth;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// All estimates produced for one drive amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: f64,
    pub method: Method,
    pub estimates: Vec<SpectralEstimate>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FrequencyEstimate {
    pub(crate) fn new(omega: f64, method: Method) -> Self {
        FrequencyEstimate {
            omega,
            method,
            estimates: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, quantity: Quantity, value: f64, std_error: f64) {
        self.estimates
            .push(SpectralEstimate::new(quantity, self.omega, value, std_error, self.method));
    }

    pub fn get(&self, quantity: Quantity) -> Option<&SpectralEstimate> {
        self.estimates.iter().find(|e| e.quantity == quantity)
    }

    pub fn value(&self, quantity: Quantity) -> Option<f64> {
        self.get(quantity).map(|e| e.value)
    }
}

/// Inverse-variance mean of `(value, std_error)` pairs and its standard error.
///
/// Entries with zero error dominate: if any are present only they are averaged.
pub fn inverse_variance_mean(items: &[(f64, f64)]) -> Result<(f64, f64)> {
    if items.is_empty() {
        return Err(Error::domain("nothing to combine"));
    }
    let exact: Vec<f64> = items.iter().filter(|(_, s)| *s == 0.0).map(|(v, _)| *v).collect();
    if !exact.is_empty() {
        return Ok((exact.iter().sum::<f64>() / exact.len() as f64, 0.0));
    }
    let mut sw = 0.0;
    let mut swv = 0.0;
    for &(v, s) in items {
        let w = 1.0 / (s * s);
        sw += w;
        swv += w * v;
    }
    Ok((swv / sw, 1.0 / sw.sqrt()))
}

/// Inverse-variance pooled SPAM parameters over several frequencies.
pub fn pooled_spam(estimates: &[FrequencyEstimate]) -> Vec<SpectralEstimate> {
    [Quantity::Alpha, Quantity::AlphaM, Quantity::Delta]
        .into_iter()
        .filter_map(|q| {
            let items: Vec<(f64, f64)> = estimates
                .iter()
                .filter_map(|f| f.get(q))
                .filter(|e| e.value.is_finite() && e.std_error.is_finite())
                .map(|e| (e.value, e.std_error))
                .collect();
            let method = estimates.iter().find_map(|f| f.get(q)).map(|e| e.method)?;
            let (v, s) = inverse_variance_mean(&items).ok()?;
            Some(SpectralEstimate::new(q, f64::NAN, v, s, method))
        })
        .collect()
}

/// Matched `±` preparations of one drive/observable at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PairPoint {
    pub t: f64,
    pub plus: f64,
    pub minus: f64,
    pub var_plus: f64,
    pub var_minus: f64,
}

impl PairPoint {
    pub fn difference(&self) -> f64 {
        self.plus - self.minus
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }

    pub fn mean_variance(&self) -> f64 {
        0.25 * (self.var_plus + self.var_minus)
    }

    /// `ln(2/D)` and its delta-method standard error, if `D > 0`.
    pub fn log_ratio(&self) -> Option<(f64, f64)> {
        let d = self.difference();
        (d > 0.0).then(|| ((2.0 / d).ln(), (self.var_plus + self.var_minus).sqrt() / d))
    }
}

/// `(+, -)` preparations of `init_axis` measured in `obs` under `axis`, matched on T.
pub(crate) fn pair_series(
    ds: &ShotDataset,
    axis: DriveAxis,
    omega: f64,
    init_axis: Pauli,
    obs: Pauli,
) -> Vec<PairPoint> {
    let plus = ds.series(axis, omega, InitLabel { axis: init_axis, plus: true }, obs);
    let minus = ds.series(axis, omega, InitLabel { axis: init_axis, plus: false }, obs);
    plus.iter()
        .filter_map(|p| {
            let m = minus.iter().find(|m| m.key.t == p.key.t)?;
            Some(PairPoint {
                t: p.key.t,
                plus: p.expectation_hat(),
                minus: m.expectation_hat(),
                var_plus: p.expectation_variance(),
                var_minus: m.expectation_variance(),
            })
        })
        .collect()
}
