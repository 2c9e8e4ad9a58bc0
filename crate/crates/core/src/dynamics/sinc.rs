//! Single-axis TCL equation with the finite-time filter kept.
//!
//! `ẋ = -(Γ↓ + Γ↑) x + (Γ↑ - Γ↓)` with
//! `Γ↓(t) = (1/π)∫S(ω) sin((ω+Ω)t)/(ω+Ω) dω` and
//! `Γ↑(t) = (1/π)∫S(ω) sin((ω-Ω)t)/(ω-Ω) dω`, which tend to `S(-Ω)` and
//! `S(Ω)` at long times.

use crate::error::{Error, Result};

/// Largest allowed `dω·T` for the quadrature grid.
pub const MAX_GRID_PHASE: f64 = 0.5;

/// Raw dephasing spectrum on a uniform, increasing frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedSpectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn from_fn(w_min: f64, w_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let dw = (w_max - w_min) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| w_min + k as f64 * dw).collect();
        let values = grid.iter().map(|&w| f(w)).collect();
        TabulatedSpectrum { grid, values }
    }

    fn spacing(&self) -> Result<f64> {
        let n = self.grid.len();
        if n < 3 || self.values.len() != n {
            return Err(Error::domain("tabulated spectrum needs >= 3 matching points"));
        }
        let dw = (self.grid[n - 1] - self.grid[0]) / (n - 1) as f64;
        let uniform = self
            .grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dw).abs() <= 1e-9 * dw.abs().max(1e-300));
        if !(dw > 0.0) || !uniform {
            return Err(Error::domain("tabulated grid must be uniform and increasing"));
        }
        Ok(dw)
    }
}

fn sinc_t(x: f64, t: f64) -> f64 {
    let p = x * t;
    if p.abs() < 1e-8 {
        t * (1.0 - p * p / 6.0)
    } else {
        p.sin() / x
    }
}

fn gammas(s: &TabulatedSpectrum, dw: f64, omega: f64, t: f64) -> (f64, f64) {
    let n = s.grid.len();
    let mut down = 0.0;
    let mut up = 0.0;
    for (k, (&w, &v)) in s.grid.iter().zip(&s.values).enumerate() {
        let wt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        down += wt * v * sinc_t(w + omega, t);
        up += wt * v * sinc_t(w - omega, t);
    }
    let c = dw / std::f64::consts::PI;
    (c * down, c * up)
}

/// `⟨σ_x⟩` at each of `record_times` (sorted) from RK4 with `steps_per_unit`
/// steps per μs.
pub fn tcl_sinc_integrator(
    spectrum: &TabulatedSpectrum,
    omega: f64,
    x0: f64,
    record_times: &[f64],
    steps_per_unit: usize,
) -> Result<Vec<f64>> {
    let dw = spectrum.spacing()?;
    let t_end = record_times.last().copied().unwrap_or(0.0);
    if dw * t_end > MAX_GRID_PHASE {
        return Err(Error::domain(format!(
            "grid spacing {dw:.3e} too coarse for T = {t_end} (dω·T must be <= {MAX_GRID_PHASE})"
        )));
    }
    let (lo, hi) = (spectrum.grid[0], *spectrum.grid.last().unwrap());
    if omega.abs() >= hi.min(-lo) {
        return Err(Error::domain("grid must contain ±Ω in its interior"));
    }
    if record_times.windows(2).any(|w| w[1] < w[0]) || record_times.iter().any(|&t| t < 0.0) {
        return Err(Error::domain("record times must be non-negative and sorted"));
    }
    let rhs = |t: f64, x: f64| {
        let (gd, gu) = gammas(spectrum, dw, omega, t);
        -(gd + gu) * x + (gu - gd)
    };
    let mut out = Vec::with_capacity(record_times.len());
    let (mut t, mut x) = (0.0, x0);
    for &tr in record_times {
        let len = tr - t;
        let n = ((len * steps_per_unit as f64).ceil() as usize).max(1);
        let h = len / n as f64;
        for _ in 0..n {
            let k1 = rhs(t, x);
            let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
            let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
            let k4 = rhs(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        t = tr;
        out.push(x);
    }
    Ok(out)
}
