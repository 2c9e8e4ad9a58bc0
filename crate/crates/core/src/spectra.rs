//! Spectrum models, spherical spectra sets and the classical/quantum split.
//!
//! Conventions: ω is an angular frequency in rad/μs, spectra are rates in
//! μs⁻¹, ħ = 1. A spherical spectrum `S_{α,β}(ω)` is stored as the raw
//! (non-symmetrized) correlator transform; its classical and quantum parts are
//! `S⁺_{α,β}(ω) = S_{α,β}(ω) + S_{β,α}(-ω)` and `S⁻_{α,β}(ω) = S_{α,β}(ω) - S_{β,α}(-ω)`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

fn one() -> f64 {
    1.0
}

/// An evaluatable real, non-negative frequency-domain spectrum.
///
/// Serialized as `{"kind": "...", "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum SpectrumModel {
    /// `amplitude / (1 + tc²(|ω| - ω0)²)`.
    Lorentzian {
        omega0: f64,
        tc: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    White { level: f64 },
    /// Linear interpolation on a strictly increasing grid, zero outside it.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl SpectrumModel {
    pub fn lorentzian(omega0: f64, tc: f64) -> Self {
        SpectrumModel::Lorentzian {
            omega0,
            tc,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumModel::Lorentzian {
                omega0,
                tc,
                amplitude,
            } => {
                if !omega0.is_finite() || !tc.is_finite() || *tc <= 0.0 {
                    return Err(Error::config(format!(
                        "Lorentzian needs finite omega0 and tc > 0 (got omega0={omega0}, tc={tc})"
                    )));
                }
                if !amplitude.is_finite() || *amplitude < 0.0 {
                    return Err(Error::config(format!(
                        "Lorentzian amplitude must be finite and >= 0 (got {amplitude})"
                    )));
                }
            }
            SpectrumModel::White { level } => {
                if !level.is_finite() || *level < 0.0 {
                    return Err(Error::config(format!(
                        "white level must be finite and >= 0 (got {level})"
                    )));
                }
            }
            SpectrumModel::Tabulated { grid, values } => {
                if grid.len() != values.len() || grid.len() < 2 {
                    return Err(Error::config(
                        "tabulated spectrum needs matching grid/values with >= 2 points",
                    ));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
                    return Err(Error::config("tabulated grid must be finite and strictly increasing"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::config("tabulated values must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Value at `omega`, assuming the model has been validated.
    pub fn value(&self, omega: f64) -> f64 {
        match self {
            SpectrumModel::Lorentzian {
                omega0,
                tc,
                amplitude,
            } => {
                let d = omega.abs() - omega0;
                amplitude / (1.0 + tc * tc * d * d)
            }
            SpectrumModel::White { level } => *level,
            SpectrumModel::Tabulated { grid, values } => {
                let n = grid.len();
                if omega < grid[0] || omega > grid[n - 1] {
                    return 0.0;
                }
                let k = grid.partition_point(|g| *g <= omega);
                if k == 0 {
                    return values[0];
                }
                if k >= n {
                    return values[n - 1];
                }
                let (x0, x1) = (grid[k - 1], grid[k]);
                let w = (omega - x0) / (x1 - x0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
        }
    }

    /// Largest value the model attains.
    pub fn peak(&self) -> f64 {
        match self {
            SpectrumModel::Lorentzian { amplitude, .. } => *amplitude,
            SpectrumModel::White { level } => *level,
            SpectrumModel::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Evaluate a spectrum model at `omega` (rad/μs).
pub fn evaluate_spectrum(model: &SpectrumModel, omega: f64) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::domain(format!("non-finite frequency {omega}")));
    }
    model.validate()?;
    Ok(model.value(omega))
}

/// Real-valued spectral function used to assemble spherical components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum SpectralFn {
    Zero,
    Model(SpectrumModel),
    /// `model(ω)·sin(lag·ω)`
    SinLag { model: SpectrumModel, lag: f64 },
    Scaled { factor: f64, inner: Box<SpectralFn> },
    Sum(Vec<SpectralFn>),
}

impl Default for SpectralFn {
    fn default() -> Self {
        SpectralFn::Zero
    }
}

impl SpectralFn {
    pub fn scaled(factor: f64, inner: SpectralFn) -> Self {
        SpectralFn::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn value(&self, omega: f64) -> f64 {
        match self {
            SpectralFn::Zero => 0.0,
            SpectralFn::Model(m) => m.value(omega),
            SpectralFn::SinLag { model, lag } => model.value(omega) * (lag * omega).sin(),
            SpectralFn::Scaled { factor, inner } => factor * inner.value(omega),
            SpectralFn::Sum(parts) => parts.iter().map(|p| p.value(omega)).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralFn::Zero => Ok(()),
            SpectralFn::Model(m) => m.validate(),
            SpectralFn::SinLag { model, lag } => {
                if !lag.is_finite() {
                    return Err(Error::config("non-finite lag"));
                }
                model.validate()
            }
            SpectralFn::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(Error::config("non-finite scale factor"));
                }
                inner.validate()
            }
            SpectralFn::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, SpectralFn::Zero)
    }
}

/// One spherical component `S_{α,β}(ω) = re(ω) + i·im(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub re: SpectralFn,
    #[serde(default)]
    pub im: SpectralFn,
}

impl Component {
    pub fn real(re: SpectralFn) -> Self {
        Component {
            re,
            im: SpectralFn::Zero,
        }
    }

    pub fn zero() -> Self {
        Component::real(SpectralFn::Zero)
    }

    pub fn white(level: f64) -> Self {
        Component::real(SpectralFn::Model(SpectrumModel::White { level }))
    }

    pub fn value(&self, omega: f64) -> C64 {
        C64::new(self.re.value(omega), self.im.value(omega))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub alpha: i8,
    pub beta: i8,
    #[serde(flatten)]
    pub component: Component,
}

/// A set of spherical spectra indexed by `(α, β) ∈ {-1,0,1}²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalSpectraSet {
    pub entries: Vec<SpectrumEntry>,
    /// Declares that all quantum parts vanish; checked by [`SphericalSpectraSet::validate`].
    #[serde(default)]
    pub classical: bool,
}

impl SphericalSpectraSet {
    pub fn new(classical: bool) -> Self {
        SphericalSpectraSet {
            entries: Vec::new(),
            classical,
        }
    }

    pub fn with(mut self, alpha: i8, beta: i8, component: Component) -> Self {
        self.insert(alpha, beta, component);
        self
    }

    pub fn insert(&mut self, alpha: i8, beta: i8, component: Component) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.alpha == alpha && e.beta == beta) {
            e.component = component;
        } else {
            self.entries.push(SpectrumEntry {
                alpha,
                beta,
                component,
            });
        }
    }

    /// Dephasing-only set: `S_{0,0}` as given, transverse pair explicitly zero.
    pub fn dephasing_only(s00: Component, classical: bool) -> Self {
        SphericalSpectraSet::new(classical)
            .with(0, 0, s00)
            .with(1, -1, Component::zero())
            .with(-1, 1, Component::zero())
    }

    pub fn component(&self, alpha: i8, beta: i8) -> Option<&Component> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.beta == beta)
            .map(|e| &e.component)
    }

    /// `S_{α,β}(ω)`.
    pub fn eval(&self, alpha: i8, beta: i8, omega: f64) -> Result<C64> {
        self.component(alpha, beta)
            .map(|c| c.value(omega))
            .ok_or_else(|| Error::config(format!("spectra set has no S_({alpha},{beta}) component")))
    }

    /// `S⁺_{α,β}(ω)`.
    pub fn splus(&self, alpha: i8, beta: i8, omega: f64) -> Result<C64> {
        Ok(split_classical_quantum(self.eval(alpha, beta, omega)?, self.eval(beta, alpha, -omega)?).0)
    }

    /// `S⁻_{α,β}(ω)`.
    pub fn sminus(&self, alpha: i8, beta: i8, omega: f64) -> Result<C64> {
        Ok(split_classical_quantum(self.eval(alpha, beta, omega)?, self.eval(beta, alpha, -omega)?).1)
    }

    /// Checks index range, component validity, reality of the power spectra
    /// `S_{α,-α}` and, for classical sets, vanishing quantum parts on `grid`.
    pub fn validate(&self, grid: &[f64]) -> Result<()> {
        for e in &self.entries {
            if !(-1..=1).contains(&e.alpha) || !(-1..=1).contains(&e.beta) {
                return Err(Error::config(format!(
                    "spherical index ({}, {}) outside {{-1,0,1}}",
                    e.alpha, e.beta
                )));
            }
            e.component.re.validate()?;
            e.component.im.validate()?;
            if e.alpha == -e.beta && !e.component.im.is_zero() {
                for &w in grid {
                    let v = e.component.value(w);
                    if v.im.abs() > 1e-12 * v.re.abs().max(f64::MIN_POSITIVE) {
                        return Err(Error::config(format!(
                            "power spectrum S_({},{}) is not real at ω={w}",
                            e.alpha, e.beta
                        )));
                    }
                }
            }
            if e.alpha == -e.beta {
                if let Some(w) = grid.iter().find(|&&w| e.component.value(w).re < 0.0) {
                    return Err(Error::config(format!(
                        "power spectrum S_({},{}) negative at ω={w}",
                        e.alpha, e.beta
                    )));
                }
            }
        }
        if self.classical {
            for e in &self.entries {
                if self.component(e.beta, e.alpha).is_none() {
                    continue;
                }
                for &w in grid {
                    let q = self.sminus(e.alpha, e.beta, w)?;
                    let scale = self.eval(e.alpha, e.beta, w)?.norm().max(1.0);
                    if q.norm() > 1e-12 * scale {
                        return Err(Error::config(format!(
                            "set flagged classical but S⁻_({},{})({w}) = {q}",
                            e.alpha, e.beta
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest violation of `[S±_{α,β}(ω)]* = ±S±_{-α,-β}(-ω)` over `grid`
    /// for every stored pair whose mirror pair is also stored.
    pub fn conjugation_defect(&self, grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for e in &self.entries {
            let (a, b) = (e.alpha, e.beta);
            let complete = [(a, b), (b, a), (-a, -b), (-b, -a)]
                .iter()
                .all(|&(x, y)| self.component(x, y).is_some());
            if !complete {
                continue;
            }
            for &w in grid {
                let p = self.splus(a, b, w)?.conj() - self.splus(-a, -b, -w)?;
                let m = self.sminus(a, b, w)?.conj() + self.sminus(-a, -b, -w)?;
                worst = worst.max(p.norm()).max(m.norm());
            }
        }
        Ok(worst)
    }
}

/// `(S⁺, S⁻) = (s_pos + s_neg_mirror, s_pos - s_neg_mirror)` where
/// `s_pos = S_{α,β}(ω)` and `s_neg_mirror = S_{β,α}(-ω)`.
pub fn split_classical_quantum(s_pos: C64, s_neg_mirror: C64) -> (C64, C64) {
    (s_pos + s_neg_mirror, s_pos - s_neg_mirror)
}

/// Inverse of [`split_classical_quantum`]: `S = (S⁺ + S⁻)/2`.
pub fn recombine(splus: C64, sminus: C64) -> C64 {
    0.5 * (splus + sminus)
}

/// Spherical spectra `(S_{0,0}, S_{-1,1}, S_{1,-1})` from Cartesian ones.
pub fn spherical_from_cartesian(sxx: C64, syy: C64, sxy: C64, syx: C64, szz: C64) -> (C64, C64, C64) {
    let diag = sxx + syy;
    let cross = C64::new(0.0, 1.0) * (sxy - syx);
    (szz, diag + cross, diag - cross)
}

/// Qubit device parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Qubit angular frequency, rad/μs.
    pub omega_q: f64,
}

impl DeviceParams {
    /// Largest admissible |Ω|/ω_q.
    pub const MAX_DRIVE_RATIO: f64 = 1e-2;

    pub fn new(omega_q: f64) -> Result<Self> {
        let d = DeviceParams { omega_q };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_q.is_finite() || self.omega_q <= 0.0 {
            return Err(Error::config(format!("omega_q must be > 0 (got {})", self.omega_q)));
        }
        Ok(())
    }

    pub fn check_drive(&self, omega: f64) -> Result<()> {
        if omega.abs() / self.omega_q > Self::MAX_DRIVE_RATIO {
            return Err(Error::config(format!(
                "|Ω|/ω_q = {:.3e} exceeds {:.0e}",
                omega.abs() / self.omega_q,
                Self::MAX_DRIVE_RATIO
            )));
        }
        Ok(())
    }
}
