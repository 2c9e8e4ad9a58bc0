//! Static state-preparation and measurement errors, and shot sampling.

use crate::dynamics::{DriveAxis, Pauli, QubitState};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, ONE, ZERO};
use crate::rng::rng_from_seed;
use num_complex::Complex64 as C64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamParams {
    pub alpha_sp: f64,
    /// Unwanted preparation coherence, stored as `[re, im]`.
    #[serde(default)]
    pub c_u: C64,
    pub alpha_m: f64,
    pub delta: f64,
}

impl Default for SpamParams {
    fn default() -> Self {
        SpamParams::ideal()
    }
}

impl SpamParams {
    pub fn ideal() -> Self {
        SpamParams {
            alpha_sp: 1.0,
            c_u: ZERO,
            alpha_m: 1.0,
            delta: 0.0,
        }
    }

    pub fn new(alpha_sp: f64, alpha_m: f64, delta: f64) -> Result<Self> {
        let p = SpamParams {
            alpha_sp,
            c_u: ZERO,
            alpha_m,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coherence(mut self, c_u: C64) -> Result<Self> {
        self.c_u = c_u;
        self.validate()?;
        Ok(self)
    }

    /// Combined parameter `α = α_SP α_M`.
    pub fn alpha(&self) -> f64 {
        self.alpha_sp * self.alpha_m
    }

    pub fn is_ideal(&self) -> bool {
        *self == SpamParams::ideal()
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v.is_finite() && v.abs() <= 1.0;
        if !in_unit(self.alpha_sp) {
            return Err(Error::config(format!("alpha_SP must lie in [-1, 1] (got {})", self.alpha_sp)));
        }
        if !in_unit(self.c_u.re) || !in_unit(self.c_u.im) {
            return Err(Error::config(format!("c_u components must lie in [-1, 1] (got {})", self.c_u)));
        }
        if !(0.0..=1.0).contains(&self.alpha_m) || !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("alpha_M and delta must lie in [0, 1]"));
        }
        if self.alpha_m + self.delta > 1.0 + 1e-15 {
            return Err(Error::config(format!(
                "alpha_M + delta = {} exceeds 1; POVM would not be positive",
                self.alpha_m + self.delta
            )));
        }
        // both preparation states must be physical
        for axis in [Pauli::X, Pauli::Z] {
            faulty_state(axis, true, self)?;
        }
        Ok(())
    }

    /// Measurement operator `Π_{u+}` in the measured basis.
    pub fn povm_plus(&self) -> Mat2 {
        Mat2::sigma_z().scale(C64::new(0.5 * self.alpha_m, 0.0)) + Mat2::identity().scale(C64::new(0.5 * (1.0 + self.delta), 0.0))
    }
}

fn ket(axis: Pauli, plus: bool) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if plus { 1.0 } else { -1.0 };
    match axis {
        Pauli::Z if plus => [ONE, ZERO],
        Pauli::Z => [ZERO, ONE],
        Pauli::X => [C64::new(h, 0.0), C64::new(s * h, 0.0)],
        Pauli::Y => [C64::new(h, 0.0), C64::new(0.0, s * h)],
    }
}

fn outer(a: [C64; 2], b: [C64; 2]) -> Mat2 {
    Mat2::new(a[0] * b[0].conj(), a[0] * b[1].conj(), a[1] * b[0].conj(), a[1] * b[1].conj())
}

/// Faulty preparation of `|u±⟩`:
/// `½[(1+α_SP)|u±⟩⟨u±| + (1-α_SP)|u∓⟩⟨u∓| + c|u±⟩⟨u∓| + c*|u∓⟩⟨u±|]`.
pub fn faulty_state(axis: Pauli, plus: bool, params: &SpamParams) -> Result<QubitState> {
    let (a, b) = (ket(axis, plus), ket(axis, !plus));
    let c = params.c_u;
    let m = outer(a, a).scale(C64::new(1.0 + params.alpha_sp, 0.0))
        + outer(b, b).scale(C64::new(1.0 - params.alpha_sp, 0.0))
        + outer(a, b).scale(c)
        + outer(b, a).scale(c.conj());
    QubitState::from_matrix(m.scale(C64::new(0.5, 0.0)))
        .map_err(|e| Error::config(format!("faulty preparation is not a valid state: {e}")))
}

/// `(P₊, P₋)` for measuring `σ_u` through an ideal basis change and the faulty POVM.
pub fn povm_probabilities(rho: &QubitState, basis: Pauli, params: &SpamParams) -> (f64, f64) {
    let p = 0.5 * ((1.0 + params.delta) + params.alpha_m * rho.expectation(basis));
    (p, 1.0 - p)
}

/// Which SPAM-modified expectation is being formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpamMode {
    XDriveX,
    ZDriveZ,
    ZDriveX,
}

/// SPAM-modified expectation from the ideal one.
///
/// `decay_factor` is `e^{-AT}` for `XDriveX` and `e^{-2S⁺T}` for `ZDriveZ`;
/// it is unused for `ZDriveX`.
pub fn spam_corrupted_expectation(ideal: f64, decay_factor: f64, plus: bool, params: &SpamParams, mode: SpamMode) -> Result<f64> {
    if mode != SpamMode::ZDriveX && !(decay_factor > 0.0 && decay_factor <= 1.0) {
        return Err(Error::domain(format!("decay factor must be in (0, 1] (got {decay_factor})")));
    }
    let s = if plus { 1.0 } else { -1.0 };
    Ok(match mode {
        SpamMode::XDriveX | SpamMode::ZDriveZ => {
            params.alpha_m * (ideal - s * (1.0 - params.alpha_sp) * decay_factor) + params.delta
        }
        SpamMode::ZDriveX => params.alpha() * ideal + params.delta,
    })
}

/// Binomial draw of `n_plus` from a seeded generator.
pub fn sample_shots(p_plus: f64, n_shots: u64, seed: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::domain(format!("P+ must lie in [0, 1] (got {p_plus})")));
    }
    if n_shots == 0 {
        return Err(Error::domain("n_shots must be >= 1"));
    }
    let dist = Binomial::new(n_shots, p_plus).map_err(|e| Error::domain(e.to_string()))?;
    Ok(dist.sample(&mut rng_from_seed(seed)))
}

/// Preparation label `u±`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InitLabel {
    pub axis: Pauli,
    pub plus: bool,
}

impl InitLabel {
    pub const X_PLUS: InitLabel = InitLabel { axis: Pauli::X, plus: true };
    pub const X_MINUS: InitLabel = InitLabel { axis: Pauli::X, plus: false };
    pub const Z_PLUS: InitLabel = InitLabel { axis: Pauli::Z, plus: true };
    pub const Z_MINUS: InitLabel = InitLabel { axis: Pauli::Z, plus: false };

    pub fn label(&self) -> String {
        format!("{}{}", self.axis.label(), if self.plus { '+' } else { '-' })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (axis, sign) = s.split_at(s.len().saturating_sub(1));
        let axis = parse_pauli(axis)?;
        let plus = match sign {
            "+" => true,
            "-" => false,
            _ => return Err(Error::config(format!("bad init label {s:?}"))),
        };
        Ok(InitLabel { axis, plus })
    }
}

pub(crate) fn parse_pauli(s: &str) -> Result<Pauli> {
    match s {
        "x" => Ok(Pauli::X),
        "y" => Ok(Pauli::Y),
        "z" => Ok(Pauli::Z),
        _ => Err(Error::config(format!("bad Pauli label {s:?}"))),
    }
}

pub(crate) fn parse_axis(s: &str) -> Result<DriveAxis> {
    match s {
        "+x" => Ok(DriveAxis::XPlus),
        "+z" => Ok(DriveAxis::ZPlus),
        "-z" => Ok(DriveAxis::ZMinus),
        _ => Err(Error::config(format!("bad drive axis {s:?}"))),
    }
}

/// Key identifying one measured expectation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotKey {
    pub axis: DriveAxis,
    /// Drive amplitude `Ω`, rad/μs.
    pub omega: f64,
    pub init: InitLabel,
    pub obs: Pauli,
    /// Evolution time, μs.
    pub t: f64,
}

impl ShotKey {
    pub fn matches(&self, axis: DriveAxis, omega: f64, init: InitLabel, obs: Pauli) -> bool {
        self.axis == axis && self.omega == omega && self.init == init && self.obs == obs
    }
}

/// One measured (or, in analytic mode, exact) expectation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEntry {
    pub key: ShotKey,
    pub n_shots: u64,
    /// `None` in analytic mode, where `p_plus` is exact.
    pub n_plus: Option<u64>,
    pub p_plus: f64,
}

impl ShotEntry {
    pub fn sampled(key: ShotKey, n_shots: u64, n_plus: u64) -> Self {
        ShotEntry {
            key,
            n_shots,
            n_plus: Some(n_plus),
            p_plus: n_plus as f64 / n_shots as f64,
        }
    }

    pub fn analytic(key: ShotKey, n_shots: u64, p_plus: f64) -> Self {
        ShotEntry {
            key,
            n_shots,
            n_plus: None,
            p_plus,
        }
    }

    /// `(2 n₊ - N)/N`.
    pub fn expectation_hat(&self) -> f64 {
        2.0 * self.p_plus - 1.0
    }

    /// `P̂₊P̂₋/N`, the variance of `P̂₊`.
    pub fn variance(&self) -> f64 {
        self.p_plus * (1.0 - self.p_plus) / self.n_shots as f64
    }

    /// Variance of `expectation_hat`, with `P̂` kept half a shot from the
    /// boundary so saturated points keep a finite weight.
    pub fn expectation_variance(&self) -> f64 {
        let n = self.n_shots as f64;
        let p = self.p_plus.clamp(0.5 / n, 1.0 - 0.5 / n);
        4.0 * p * (1.0 - p) / n
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    axis: String,
    omega_rad_per_us: f64,
    init: String,
    obs: String,
    #[serde(rename = "T_us")]
    t_us: f64,
    n_shots: u64,
    n_plus: Option<u64>,
    p_plus: f64,
    expectation_hat: f64,
    variance: f64,
}

/// Collection of measured expectations with deterministic ordering.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotDataset {
    pub entries: Vec<ShotEntry>,
}

impl ShotDataset {
    pub fn new() -> Self {
        ShotDataset::default()
    }

    pub fn push(&mut self, e: ShotEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: ShotDataset) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of one series, sorted by time.
    pub fn series(&self, axis: DriveAxis, omega: f64, init: InitLabel, obs: Pauli) -> Vec<&ShotEntry> {
        let mut v: Vec<&ShotEntry> = self
            .entries
            .iter()
            .filter(|e| e.key.matches(axis, omega, init, obs))
            .collect();
        v.sort_by(|a, b| a.key.t.total_cmp(&b.key.t));
        v
    }

    /// Drive amplitudes present for `axis`, in first-seen order.
    pub fn omegas(&self, axis: DriveAxis) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for e in self.entries.iter().filter(|e| e.key.axis == axis) {
            if !out.contains(&e.key.omega) {
                out.push(e.key.omega);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(CsvRow {
                axis: e.key.axis.label().to_string(),
                omega_rad_per_us: e.key.omega,
                init: e.key.init.label(),
                obs: e.key.obs.label().to_string(),
                t_us: e.key.t,
                n_shots: e.n_shots,
                n_plus: e.n_plus,
                p_plus: e.p_plus,
                expectation_hat: e.expectation_hat(),
                variance: e.variance(),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut entries = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            let key = ShotKey {
                axis: parse_axis(&row.axis)?,
                omega: row.omega_rad_per_us,
                init: InitLabel::parse(&row.init)?,
                obs: parse_pauli(&row.obs)?,
                t: row.t_us,
            };
            entries.push(match row.n_plus {
                Some(k) => ShotEntry::sampled(key, row.n_shots, k),
                None => ShotEntry::analytic(key, row.n_shots, row.p_plus),
            });
        }
        Ok(ShotDataset { entries })
    }

    pub fn write_manifest(&self, path: &Path, meta: &serde_json::Value) -> Result<()> {
        let doc = serde_json::json!({
            "n_entries": self.entries.len(),
            "columns": ["axis", "omega_rad_per_us", "init", "obs", "T_us", "n_shots", "n_plus", "p_plus", "expectation_hat", "variance"],
            "meta": meta,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}
