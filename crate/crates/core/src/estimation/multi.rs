//! Multi-axis estimators built from the `±z` and `x` drives.
//!
//! Under a z drive with signed argument `w` the populations relax at
//! `2S⁺` where `S⁺` is the classical part of the transverse pair sampled at
//! `w ± ω_q`, so the `σ_z` gap decays as `e^{-2S⁺T}` and the mean relaxes with
//! sign `g = -1` for `+z` (quantum part `S⁻_{-1,1}(-Ω-ω_q)`) and `g = +1` for
//! `-z` (quantum part `S⁻_{1,-1}(-Ω+ω_q)`). The frame-aligned `σ_x` gap under
//! `+z` decays at `S⁺_{1,-1}(Ω+ω_q) + 2S_{0,0}(0)`.

use super::single::invert_pair;
use super::{
    inverse_variance_mean, pair_series, weighted_linreg, FrequencyEstimate, Method, PairPoint, Quantity,
    RegressionResult, MIN_REGRESSION_POINTS,
};
use crate::dynamics::{DriveAxis, Pauli};
use crate::error::{Error, Result};
use crate::spam::ShotDataset;

struct Channels {
    z_plus: Vec<PairPoint>,
    z_minus: Vec<PairPoint>,
    aligned: Vec<PairPoint>,
    x: Vec<PairPoint>,
}

impl Channels {
    fn collect(ds: &ShotDataset, omega: f64) -> Result<Self> {
        let c = Channels {
            z_plus: pair_series(ds, DriveAxis::ZPlus, omega, Pauli::Z, Pauli::Z),
            z_minus: pair_series(ds, DriveAxis::ZMinus, omega, Pauli::Z, Pauli::Z),
            aligned: pair_series(ds, DriveAxis::ZPlus, omega, Pauli::X, Pauli::X),
            x: pair_series(ds, DriveAxis::XPlus, omega, Pauli::X, Pauli::X),
        };
        for (q, v) in [
            (Quantity::TransverseClassicalPlus, &c.z_plus),
            (Quantity::TransverseClassicalMinus, &c.z_minus),
            (Quantity::RateA, &c.x),
        ] {
            if v.is_empty() {
                return Err(Error::estimation(q.label(), format!("dataset has no series for Ω = {omega}")));
            }
        }
        Ok(c)
    }
}

fn longest(points: &[PairPoint]) -> PairPoint {
    *points.iter().max_by(|a, b| a.t.total_cmp(&b.t)).expect("non-empty series")
}

/// Standard multi-axis inversion at the longest time of each series.
pub fn invert_multi_axis(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    let ch = Channels::collect(ds, omega)?;
    let mut out = FrequencyEstimate::new(omega, Method::Standard);
    let inv = |q: Quantity, p: PairPoint, k: f64, g: f64| invert_pair(q, p.plus, p.minus, p.var_plus, p.var_minus, p.t, k, g);
    let zp = inv(Quantity::TransverseClassicalPlus, longest(&ch.z_plus), 2.0, -1.0)?;
    let zm = inv(Quantity::TransverseClassicalMinus, longest(&ch.z_minus), 2.0, 1.0)?;
    let x = inv(Quantity::RateA, longest(&ch.x), 1.0, 1.0)?;
    out.push(Quantity::TransverseClassicalPlus, zp.rate, zp.rate_se);
    out.push(Quantity::TransverseQuantumPlus, zp.quantum, zp.quantum_se);
    out.push(Quantity::TransverseClassicalMinus, zm.rate, zm.rate_se);
    out.push(Quantity::TransverseQuantumMinus, zm.quantum, zm.quantum_se);
    if ch.aligned.is_empty() {
        out.warnings.push("no frame-aligned data; S_00(0) not estimated".into());
    } else {
        let al = inv(Quantity::DephasingZero, longest(&ch.aligned), 1.0, 1.0)?;
        out.push(
            Quantity::DephasingZero,
            0.5 * (al.rate - zp.rate),
            0.5 * (al.rate_se.powi(2) + zp.rate_se.powi(2)).sqrt(),
        );
    }
    out.push(Quantity::RateA, x.rate, x.rate_se);
    out.push(Quantity::RateB, x.quantum, x.quantum_se);
    push_dephasing(&mut out, [x.rate, x.rate_se], [zp.rate, zp.rate_se], [zm.rate, zm.rate_se]);
    let sminus = x.quantum - 0.5 * (zm.quantum - zp.quantum);
    let sminus_se = (x.quantum_se.powi(2) + 0.25 * (zm.quantum_se.powi(2) + zp.quantum_se.powi(2))).sqrt();
    out.push(Quantity::DephasingQuantum, sminus, sminus_se);
    Ok(out)
}

/// `S⁺_{0,0}(Ω) = A - ½[S⁺_{1,-1}(Ω+ω_q) + S⁺_{-1,1}(Ω-ω_q)]`.
fn push_dephasing(out: &mut FrequencyEstimate, a: [f64; 2], zp: [f64; 2], zm: [f64; 2]) {
    out.push(
        Quantity::DephasingClassical,
        a[0] - 0.5 * (zp[0] + zm[0]),
        (a[1].powi(2) + 0.25 * (zp[1].powi(2) + zm[1].powi(2))).sqrt(),
    );
}

/// `ln(2/D)` regressed on `kT`: slope is the rate, intercept `-ln α`.
fn classical_fit(points: &[PairPoint], k: f64, q: Quantity, warnings: &mut Vec<String>) -> Result<RegressionResult> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut s = Vec::new();
    for p in points {
        match p.log_ratio() {
            Some((v, se)) => {
                x.push(k * p.t);
                y.push(v);
                s.push(se.max(1e-150));
            }
            None => warnings.push(format!(
                "{q}: expectation gap {:.3e} <= 0 at T = {}; point excluded",
                p.difference(),
                p.t
            )),
        }
    }
    if x.len() < MIN_REGRESSION_POINTS {
        return Err(Error::estimation(
            q.label(),
            format!("only {} usable time points (need {MIN_REGRESSION_POINTS})", x.len()),
        ));
    }
    weighted_linreg(&x, &y, &s)
}

/// Mean of the pair regressed on `g(1 - e^{-kST})`; returns `(α_M Q, se, δ, se)`.
fn quantum_fit(points: &[PairPoint], rate: f64, rate_se: f64, k: f64, g: f64, q: Quantity) -> Result<[f64; 4]> {
    if !(rate > 0.0) {
        return Err(Error::estimation(q.label(), format!("decay rate {rate:.3e} must be > 0 to scale the quantum path")));
    }
    let m: Vec<f64> = points.iter().map(|p| p.mean()).collect();
    let s: Vec<f64> = points.iter().map(|p| p.mean_variance().sqrt().max(1e-150)).collect();
    let fit = |r: f64| {
        let f: Vec<f64> = points.iter().map(|p| -g * (-k * r * p.t).exp_m1()).collect();
        weighted_linreg(&f, &m, &s).map_err(|e| Error::estimation(q.label(), e.to_string()))
    };
    let reg = fit(rate)?;
    // α_M Q = slope·S; the rate's own uncertainty enters through a refit
    let h = 1e-6 * rate;
    let db = (fit(rate + h)?.slope - fit(rate - h)?.slope) / (2.0 * h);
    let value = reg.slope * rate;
    let dvalue = reg.slope + rate * db;
    let se = ((rate * reg.slope_se()).powi(2) + (dvalue * rate_se).powi(2)).sqrt();
    Ok([value, se, reg.intercept, reg.intercept_se()])
}

/// SPAM-robust multi-axis estimator under `α ≈ α_M`.
pub fn robust_multi_axis(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    let ch = Channels::collect(ds, omega)?;
    let mut out = FrequencyEstimate::new(omega, Method::RobustLinear);
    let warnings = &mut out.warnings;

    let zp = classical_fit(&ch.z_plus, 2.0, Quantity::TransverseClassicalPlus, warnings)?;
    let zm = classical_fit(&ch.z_minus, 2.0, Quantity::TransverseClassicalMinus, warnings)?;
    let x = classical_fit(&ch.x, 1.0, Quantity::RateA, warnings)?;
    let aligned = if ch.aligned.is_empty() {
        warnings.push("no frame-aligned data; S_00(0) not estimated".into());
        None
    } else {
        Some(classical_fit(&ch.aligned, 1.0, Quantity::DephasingZero, warnings)?)
    };

    // every intercept estimates -ln α
    let mut logs: Vec<(&str, f64, f64)> = vec![
        ("+z", -zp.intercept, zp.intercept_se()),
        ("-z", -zm.intercept, zm.intercept_se()),
        ("x", -x.intercept, x.intercept_se()),
    ];
    if let Some(a) = &aligned {
        logs.push(("aligned", -a.intercept, a.intercept_se()));
    }
    let pairs: Vec<(f64, f64)> = logs.iter().map(|l| (l.1, l.2)).collect();
    let (ln_alpha, ln_alpha_se) = inverse_variance_mean(&pairs)?;
    for (name, v, se) in &logs {
        if *se > 0.0 && (v - ln_alpha).abs() > 3.0 * se {
            warnings.push(format!(
                "alpha: {name} intercept gives ln(alpha) = {v:.4} vs combined {ln_alpha:.4} (> 3 sigma)"
            ));
        }
    }
    let alpha = ln_alpha.exp();
    let alpha_se = alpha * ln_alpha_se;

    let qp = quantum_fit(&ch.z_plus, zp.slope, zp.slope_se(), 2.0, -1.0, Quantity::TransverseQuantumPlus)?;
    let qm = quantum_fit(&ch.z_minus, zm.slope, zm.slope_se(), 2.0, 1.0, Quantity::TransverseQuantumMinus)?;
    let qb = quantum_fit(&ch.x, x.slope, x.slope_se(), 1.0, 1.0, Quantity::RateB)?;

    let mut deltas = vec![(qp[2], qp[3]), (qm[2], qm[3]), (qb[2], qb[3])];
    deltas.extend(ch.aligned.iter().map(|p| (p.mean(), p.mean_variance().sqrt())));
    let (delta, delta_se) = inverse_variance_mean(&deltas)?;

    let unscale = |v: [f64; 4]| {
        let value = v[0] / alpha;
        let se = ((v[1] / alpha).powi(2) + (v[0] * alpha_se / (alpha * alpha)).powi(2)).sqrt();
        (value, se)
    };

    out.push(Quantity::TransverseClassicalPlus, zp.slope, zp.slope_se());
    let (v, s) = unscale(qp);
    out.push(Quantity::TransverseQuantumPlus, v, s);
    out.push(Quantity::TransverseClassicalMinus, zm.slope, zm.slope_se());
    let (v, s) = unscale(qm);
    out.push(Quantity::TransverseQuantumMinus, v, s);
    if let Some(a) = &aligned {
        out.push(
            Quantity::DephasingZero,
            0.5 * (a.slope - zp.slope),
            0.5 * (a.slope_se().powi(2) + zp.slope_se().powi(2)).sqrt(),
        );
    }
    out.push(Quantity::RateA, x.slope, x.slope_se());
    let (v, s) = unscale(qb);
    out.push(Quantity::RateB, v, s);
    push_dephasing(
        &mut out,
        [x.slope, x.slope_se()],
        [zp.slope, zp.slope_se()],
        [zm.slope, zm.slope_se()],
    );
    // common-α form: α_M S⁻_{0,0} = α_M B - ½(α_M S⁻_{1,-1} - α_M S⁻_{-1,1})
    let scaled = qb[0] - 0.5 * (qm[0] - qp[0]);
    let scaled_se = (qb[1].powi(2) + 0.25 * (qm[1].powi(2) + qp[1].powi(2))).sqrt();
    out.push(Quantity::ScaledDephasingQuantum, scaled, scaled_se);
    let (v, s) = unscale([scaled, scaled_se, 0.0, 0.0]);
    out.push(Quantity::DephasingQuantum, v, s);
    out.push(Quantity::Alpha, alpha, alpha_se);
    out.push(Quantity::AlphaM, alpha, alpha_se);
    out.push(Quantity::Delta, delta, delta_se);
    Ok(out)
}
