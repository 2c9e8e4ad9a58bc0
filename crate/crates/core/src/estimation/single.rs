//! Single-axis (dephasing) estimators.

use super::{pair_series, weighted_linreg, FrequencyEstimate, Method, PairPoint, Quantity, MIN_REGRESSION_POINTS};
use crate::dynamics::{DriveAxis, Pauli};
use crate::error::{Error, Result};
use crate::spam::ShotDataset;
use nalgebra::{Matrix4, Vector4};

/// Largest `max_j Ŝ⁺T_j` accepted by the linearized robust path.
pub const LINEARIZATION_LIMIT: f64 = 0.1;

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-9;

/// Rate and quantum part recovered from one `±` pair at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairInversion {
    pub rate: f64,
    pub rate_se: f64,
    pub quantum: f64,
    pub quantum_se: f64,
}

/// `1 - e^{-x}` over `x`, and its derivative in `x`, stable near zero.
fn one_minus_exp_over(x: f64) -> (f64, f64) {
    if x.abs() < 1e-6 {
        (1.0 - x / 2.0 + x * x / 6.0, -0.5 + x / 3.0)
    } else {
        let e = (-x).exp();
        let v = -(-x).exp_m1() / x;
        (v, (e - v) / x)
    }
}

/// Inverts `D = 2e^{-kST}`, `M = g(Q/S)(1 - e^{-kST})` for `(S, Q)`.
///
/// `var_plus`/`var_minus` are the variances of the two expectations; the
/// standard errors follow from the delta method including the `D`–`M` covariance.
pub fn invert_pair(
    component: Quantity,
    plus: f64,
    minus: f64,
    var_plus: f64,
    var_minus: f64,
    t: f64,
    k: f64,
    g: f64,
) -> Result<PairInversion> {
    let d = plus - minus;
    if !(d > 0.0) || d > 2.0 + 1e-12 {
        return Err(Error::estimation(
            component.label(),
            format!("expectation gap {d:.4e} outside (0, 2] at T = {t}"),
        ));
    }
    if !(t > 0.0) {
        return Err(Error::domain("evolution time must be > 0"));
    }
    let rate = (2.0 / d).ln() / (k * t);
    let m = 0.5 * (plus + minus);
    // Q = g M φ(S) with φ(S) = S/(1 - e^{-kST}) = 1/(kT ψ(kST))
    let (psi, dpsi) = one_minus_exp_over(k * rate * t);
    let phi = 1.0 / (k * t * psi);
    let dphi = -dpsi / (psi * psi);
    let quantum = g * m * phi;
    // ∂S/∂e± = ∓1/(D k T)
    let ds_dp = -1.0 / (d * k * t);
    let ds_dm = -ds_dp;
    let dq_dp = 0.5 * g * phi + g * m * dphi * ds_dp;
    let dq_dm = 0.5 * g * phi + g * m * dphi * ds_dm;
    Ok(PairInversion {
        rate,
        rate_se: (ds_dp * ds_dp * var_plus + ds_dm * ds_dm * var_minus).sqrt(),
        quantum,
        quantum_se: (dq_dp * dq_dp * var_plus + dq_dm * dq_dm * var_minus).sqrt(),
    })
}

/// Standard single-time inversion: `(S⁺, S⁻)` from `⟨σ_x(T)⟩_{x±}`.
pub fn invert_single_axis(exp_plus: f64, exp_minus: f64, t: f64) -> Result<(f64, f64)> {
    let r = invert_pair(Quantity::DephasingClassical, exp_plus, exp_minus, 0.0, 0.0, t, 1.0, 1.0)?;
    Ok((r.rate, r.quantum))
}

fn x_pairs(ds: &ShotDataset, omega: f64) -> Vec<PairPoint> {
    pair_series(ds, DriveAxis::XPlus, omega, Pauli::X, Pauli::X)
}

/// Standard estimator applied to the longest recorded time.
pub fn standard_single_axis(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    let p = x_pairs(ds, omega)
        .into_iter()
        .max_by(|a, b| a.t.total_cmp(&b.t))
        .ok_or_else(|| Error::estimation(Quantity::DephasingClassical.label(), format!("no x-drive data at Ω = {omega}")))?;
    let r = invert_pair(Quantity::DephasingClassical, p.plus, p.minus, p.var_plus, p.var_minus, p.t, 1.0, 1.0)?;
    let mut out = FrequencyEstimate::new(omega, Method::Standard);
    out.push(Quantity::DephasingClassical, r.rate, r.rate_se);
    out.push(Quantity::DephasingQuantum, r.quantum, r.quantum_se);
    Ok(out)
}

/// Points with a usable log argument; the rest become warnings.
fn usable(points: Vec<PairPoint>, component: Quantity, warnings: &mut Vec<String>) -> Result<Vec<(PairPoint, f64, f64)>> {
    let mut kept = Vec::new();
    for p in points {
        match p.log_ratio() {
            Some((y, s)) if s > 0.0 => kept.push((p, y, s)),
            Some((y, _)) => kept.push((p, y, f64::MIN_POSITIVE.sqrt())),
            None => warnings.push(format!(
                "{component}: expectation gap {:.3e} <= 0 at T = {}; point excluded",
                p.difference(),
                p.t
            )),
        }
    }
    if kept.len() < MIN_REGRESSION_POINTS {
        return Err(Error::estimation(
            component.label(),
            format!("only {} usable time points (need {MIN_REGRESSION_POINTS})", kept.len()),
        ));
    }
    Ok(kept)
}

/// Exact-data points carry zero variance; give them a uniform tiny σ.
fn sigma_floor(var: f64) -> f64 {
    var.sqrt().max(1e-150)
}

/// Linearized robust path: slopes of `ln(2/D)` and of the mean against `T`.
pub fn robust_single_axis_linearized(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    let mut out = FrequencyEstimate::new(omega, Method::RobustLinear);
    let pts = usable(x_pairs(ds, omega), Quantity::DephasingClassical, &mut out.warnings)?;
    let t: Vec<f64> = pts.iter().map(|p| p.0.t).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sy: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let classical = weighted_linreg(&t, &y, &sy)?;
    let s = classical.slope;
    let t_max = t.iter().cloned().fold(0.0, f64::max);
    if s * t_max > LINEARIZATION_LIMIT {
        return Err(Error::estimation(
            Quantity::DephasingClassical.label(),
            format!("max S+T = {:.3} exceeds {LINEARIZATION_LIMIT}; use the non-linear path", s * t_max),
        ));
    }
    let m: Vec<f64> = pts.iter().map(|p| p.0.mean()).collect();
    let sm: Vec<f64> = pts.iter().map(|p| sigma_floor(p.0.mean_variance())).collect();
    let quantum = weighted_linreg(&t, &m, &sm)?;

    let alpha = (-classical.intercept).exp();
    let alpha_se = alpha * classical.intercept_se();
    let scaled = quantum.slope;
    out.push(Quantity::DephasingClassical, s, classical.slope_se());
    out.push(Quantity::ScaledDephasingQuantum, scaled, quantum.slope_se());
    out.push(
        Quantity::DephasingQuantum,
        scaled / alpha,
        ((quantum.slope_se() / alpha).powi(2) + (scaled * alpha_se / (alpha * alpha)).powi(2)).sqrt(),
    );
    out.push(Quantity::Alpha, alpha, alpha_se);
    out.push(Quantity::AlphaM, alpha, alpha_se);
    out.push(Quantity::Delta, quantum.intercept, quantum.intercept_se());
    Ok(out)
}

/// Parameters of the SPAM-corrupted single-axis model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleAxisParams {
    pub s_plus: f64,
    pub s_minus: f64,
    /// `α_SP α_M`.
    pub alpha: f64,
    pub alpha_m: f64,
    pub delta: f64,
}

/// `⟨σ_x(T)⟩` measured after preparing `|x±⟩`:
/// `α_M (S⁻/S⁺)(1 - e^{-S⁺T}) ± α e^{-S⁺T} + δ`.
pub fn single_axis_model(p: &SingleAxisParams, t: f64, plus: bool) -> f64 {
    let (psi, _) = one_minus_exp_over(p.s_plus * t);
    let sign = if plus { 1.0 } else { -1.0 };
    p.alpha_m * p.s_minus * t * psi + sign * p.alpha * (-p.s_plus * t).exp() + p.delta
}

/// Value and gradient in `(S⁺, S⁻, α_M, δ)` of the model with `α = α_M`.
fn model_and_gradient(theta: &Vector4<f64>, t: f64, sign: f64) -> (f64, Vector4<f64>) {
    let (s, q, a, d) = (theta[0], theta[1], theta[2], theta[3]);
    let (psi, dpsi) = one_minus_exp_over(s * t);
    let h = t * psi;
    let dh_ds = t * t * dpsi;
    let e = (-s * t).exp();
    let f = a * q * h + sign * a * e + d;
    let grad = Vector4::new(a * q * dh_ds - sign * a * t * e, a * h, q * h + sign * e, 1.0);
    (f, grad)
}

fn project(theta: &mut Vector4<f64>) {
    theta[0] = theta[0].max(0.0);
    theta[2] = theta[2].clamp(0.0, 1.0);
    theta[3] = theta[3].clamp(0.0, 1.0 - theta[2]);
}

struct Observation {
    t: f64,
    sign: f64,
    y: f64,
    w: f64,
}

fn normal_equations(theta: &Vector4<f64>, obs: &[Observation]) -> (f64, Matrix4<f64>, Vector4<f64>) {
    let mut cost = 0.0;
    let mut h = Matrix4::zeros();
    let mut g = Vector4::zeros();
    for o in obs {
        let (f, j) = model_and_gradient(theta, o.t, o.sign);
        let r = o.y - f;
        cost += o.w * r * r;
        h += o.w * j * j.transpose();
        g += o.w * r * j;
    }
    (cost, h, g)
}

/// Damped Gauss–Newton fit of `(S⁺, S⁻, α_M, δ)` to the raw `x̂±` series under `α ≈ α_M`.
pub fn robust_single_axis_nonlinear(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    let mut out = FrequencyEstimate::new(omega, Method::RobustNonlinear);
    let pairs = x_pairs(ds, omega);
    if pairs.len() < 4 {
        return Err(Error::estimation(
            Quantity::DephasingClassical.label(),
            format!("non-linear fit needs at least 4 times (got {})", pairs.len()),
        ));
    }
    // start from the two-stage linear estimate
    let pts = usable(pairs.clone(), Quantity::DephasingClassical, &mut out.warnings)?;
    let t: Vec<f64> = pts.iter().map(|p| p.0.t).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sy: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let classical = weighted_linreg(&t, &y, &sy)?;
    let s0 = classical.slope.max(1e-9);
    let h: Vec<f64> = t.iter().map(|&t| t * one_minus_exp_over(s0 * t).0).collect();
    let m: Vec<f64> = pts.iter().map(|p| p.0.mean()).collect();
    let sm: Vec<f64> = pts.iter().map(|p| sigma_floor(p.0.mean_variance())).collect();
    let quantum = weighted_linreg(&h, &m, &sm)?;
    let a0 = (-classical.intercept).exp().clamp(1e-6, 1.0);
    let mut theta = Vector4::new(s0, quantum.slope / a0, a0, quantum.intercept);
    project(&mut theta);

    let obs: Vec<Observation> = pairs
        .iter()
        .flat_map(|p| {
            [
                Observation { t: p.t, sign: 1.0, y: p.plus, w: 1.0 / sigma_floor(p.var_plus).powi(2) },
                Observation { t: p.t, sign: -1.0, y: p.minus, w: 1.0 / sigma_floor(p.var_minus).powi(2) },
            ]
        })
        .collect();

    let (mut cost, mut hess, mut grad) = normal_equations(&theta, &obs);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut damped = hess;
        for i in 0..4 {
            damped[(i, i)] *= 1.0 + lambda;
        }
        let Some(step) = damped.lu().solve(&grad) else {
            lambda *= 10.0;
            continue;
        };
        let mut trial = theta + step;
        project(&mut trial);
        let actual = trial - theta;
        let (trial_cost, trial_hess, trial_grad) = normal_equations(&trial, &obs);
        if trial_cost <= cost {
            let rel = actual.norm() / theta.norm().max(1e-300);
            theta = trial;
            cost = trial_cost;
            hess = trial_hess;
            grad = trial_grad;
            lambda *= 0.5;
            if rel < STEP_TOLERANCE {
                converged = true;
                break;
            }
        } else {
            lambda *= 4.0;
            // no descent direction left at machine precision
            if lambda > 1e12 {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::estimation(
            Quantity::DephasingClassical.label(),
            format!(
                "non-linear fit did not converge in {MAX_ITERATIONS} iterations (cost {cost:.3e}, θ = [{:.4e}, {:.4e}, {:.4e}, {:.4e}])",
                theta[0], theta[1], theta[2], theta[3]
            ),
        ));
    }
    let cov = hess.try_inverse().ok_or_else(|| {
        Error::estimation(Quantity::DephasingClassical.label(), "singular information matrix at the solution")
    })?;
    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let (s, q, a, d) = (theta[0], theta[1], theta[2], theta[3]);
    // Var(aq) = q²Var(a) + a²Var(q) + 2aq Cov(a,q)
    let scaled_var = q * q * cov[(2, 2)] + a * a * cov[(1, 1)] + 2.0 * a * q * cov[(1, 2)];
    out.push(Quantity::DephasingClassical, s, se(0));
    out.push(Quantity::DephasingQuantum, q, se(1));
    out.push(Quantity::ScaledDephasingQuantum, a * q, scaled_var.max(0.0).sqrt());
    out.push(Quantity::Alpha, a, se(2));
    out.push(Quantity::AlphaM, a, se(2));
    out.push(Quantity::Delta, d, se(3));
    if a >= 1.0 || d <= 0.0 || d >= 1.0 - a {
        out.warnings.push("SPAM parameters at a bound; their standard errors ignore the constraint".into());
    }
    Ok(out)
}

/// Linearized path when `max Ŝ⁺T ≤ 0.1`, non-linear fit otherwise.
pub fn robust_single_axis(ds: &ShotDataset, omega: f64) -> Result<FrequencyEstimate> {
    match robust_single_axis_linearized(ds, omega) {
        Err(Error::Estimation { reason, .. }) if reason.contains("non-linear path") => {
            robust_single_axis_nonlinear(ds, omega)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spam::{InitLabel, ShotEntry, ShotKey};

    fn forward(s: f64, q: f64, t: f64) -> (f64, f64) {
        let (psi, _) = one_minus_exp_over(s * t);
        let e = (-s * t).exp();
        (q * t * psi + e, q * t * psi - e)
    }

    #[test]
    fn symmetric_classical_case() {
        let (s, t) = (0.07f64, 9.0f64);
        let e = (-s * t).exp();
        let (sp, sm) = invert_single_axis(e, -e, t).unwrap();
        assert!((sp - s).abs() < 1e-14 && sm.abs() < 1e-15);
    }

    #[test]
    fn closed_form_round_trip() {
        let (p, m) = forward(0.1, 0.02, 10.0);
        let (sp, sm) = invert_single_axis(p, m, 10.0).unwrap();
        assert!((sp - 0.1).abs() < 1e-10 && (sm - 0.02).abs() < 1e-10);
    }

    #[test]
    fn degenerate_gap_fails() {
        assert!(matches!(invert_single_axis(0.3, 0.3, 10.0), Err(Error::Estimation { .. })));
        assert!(invert_single_axis(0.1, 0.4, 10.0).is_err());
    }

    #[test]
    fn delta_method_matches_finite_differences() {
        let (vp, vm) = (1e-4, 2e-4);
        for (k, g) in [(1.0, 1.0), (2.0, -1.0), (2.0, 1.0)] {
            let (t, p, m) = (6.0f64, 0.55f64, -0.35f64);
            let r = invert_pair(Quantity::RateA, p, m, vp, vm, t, k, g).unwrap();
            let h = 1e-7;
            let f = |p: f64, m: f64| invert_pair(Quantity::RateA, p, m, 0.0, 0.0, t, k, g).unwrap();
            let dqp = (f(p + h, m).quantum - f(p - h, m).quantum) / (2.0 * h);
            let dqm = (f(p, m + h).quantum - f(p, m - h).quantum) / (2.0 * h);
            let dsp = (f(p + h, m).rate - f(p - h, m).rate) / (2.0 * h);
            let dsm = (f(p, m + h).rate - f(p, m - h).rate) / (2.0 * h);
            let q_se = (dqp * dqp * vp + dqm * dqm * vm).sqrt();
            let s_se = (dsp * dsp * vp + dsm * dsm * vm).sqrt();
            assert!((r.quantum_se - q_se).abs() < 1e-6 * q_se, "{} vs {q_se}", r.quantum_se);
            assert!((r.rate_se - s_se).abs() < 1e-6 * s_se);
        }
    }

    fn dataset(params: &SingleAxisParams, omega: f64, times: &[f64]) -> ShotDataset {
        let mut ds = ShotDataset::new();
        for &t in times {
            for plus in [true, false] {
                let key = ShotKey {
                    axis: DriveAxis::XPlus,
                    omega,
                    init: if plus { InitLabel::X_PLUS } else { InitLabel::X_MINUS },
                    obs: Pauli::X,
                    t,
                };
                let p = 0.5 * (1.0 + single_axis_model(params, t, plus));
                ds.push(ShotEntry::analytic(key, 1000, p));
            }
        }
        ds
    }

    #[test]
    fn nonlinear_fit_recovers_exact_data() {
        let truth = SingleAxisParams { s_plus: 0.2, s_minus: 0.05, alpha: 0.94, alpha_m: 0.94, delta: 0.02 };
        let times: Vec<f64> = (1..=8).map(|j| 2.0 * j as f64).collect();
        let ds = dataset(&truth, 3.0, &times);
        let f = robust_single_axis_nonlinear(&ds, 3.0).unwrap();
        for (q, v) in [
            (Quantity::DephasingClassical, 0.2),
            (Quantity::DephasingQuantum, 0.05),
            (Quantity::AlphaM, 0.94),
            (Quantity::Delta, 0.02),
        ] {
            assert!((f.value(q).unwrap() - v).abs() < 1e-9 * v, "{q}: {}", f.value(q).unwrap());
        }
        // the linear guard refuses this grid, so the dispatcher goes non-linear
        assert!(robust_single_axis_linearized(&ds, 3.0).is_err());
        assert_eq!(robust_single_axis(&ds, 3.0).unwrap().method, Method::RobustNonlinear);
    }

    #[test]
    fn linearized_path_on_short_times() {
        let truth = SingleAxisParams { s_plus: 0.004, s_minus: 0.001, alpha: 0.92, alpha_m: 0.92, delta: 0.01 };
        let times: Vec<f64> = (1..=10).map(|j| 2.0 * j as f64).collect();
        let ds = dataset(&truth, 3.0, &times);
        let f = robust_single_axis(&ds, 3.0).unwrap();
        assert_eq!(f.method, Method::RobustLinear);
        assert!((f.value(Quantity::DephasingClassical).unwrap() - 0.004).abs() < 1e-12);
        assert!((f.value(Quantity::Alpha).unwrap() - 0.92).abs() < 1e-12);
        // quantum slope carries the O(S⁺T) linearization bias
        let scaled = f.value(Quantity::ScaledDephasingQuantum).unwrap();
        assert!((scaled - 0.92 * 0.001).abs() < 0.05 * 0.92 * 0.001);
    }

    #[test]
    fn fewer_than_four_times_refused() {
        let truth = SingleAxisParams { s_plus: 0.2, s_minus: 0.0, alpha: 1.0, alpha_m: 1.0, delta: 0.0 };
        let ds = dataset(&truth, 3.0, &[4.0, 5.0, 6.0]);
        assert!(robust_single_axis_nonlinear(&ds, 3.0).is_err());
    }
}
