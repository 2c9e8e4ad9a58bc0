//! Python bindings: run campaigns and call the core inversions from Python.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use slqns::estimation::{invert_single_axis as invert, single_axis_model as model, SingleAxisParams};
use slqns::harness::{bundled_config as bundled, compare_reports, run_campaign as run, CampaignConfig, Report};
use slqns::spectra::{evaluate_spectrum, SpectrumModel};
use slqns::Error;
use std::path::PathBuf;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Estimation { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Text of a bundled campaign config, or `None`.
#[pyfunction]
fn bundled_config(name: &str) -> Option<&'static str> {
    bundled(name)
}

/// Parses and validates a campaign config given as JSON text.
#[pyfunction]
fn validate_config(config_json: &str) -> PyResult<()> {
    CampaignConfig::from_json(config_json).map(|_| ()).map_err(to_py)
}

/// Runs a campaign, writes its bundle to `out_dir` and returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir, seed=None, analytic=false))]
fn run_campaign(py: Python<'_>, config_json: &str, out_dir: PathBuf, seed: Option<u64>, analytic: bool) -> PyResult<String> {
    let mut cfg = CampaignConfig::from_json(config_json).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.analytic |= analytic;
    let outcome = py.detach(|| run(&cfg, &out_dir)).map_err(to_py)?;
    serde_json::to_string(&outcome.report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Per-estimate z-scores between two report JSON texts as
/// `(omega, quantity, method, a, b, z)` tuples.
#[pyfunction]
fn compare(report_a: &str, report_b: &str) -> PyResult<Vec<(f64, String, String, f64, f64, f64)>> {
    let parse = |s: &str| serde_json::from_str::<Report>(s).map_err(|e| PyValueError::new_err(e.to_string()));
    let deltas = compare_reports(&parse(report_a)?, &parse(report_b)?).map_err(to_py)?;
    Ok(deltas
        .into_iter()
        .map(|d| (d.omega, d.quantity.label().to_string(), d.method.label().to_string(), d.value_a, d.value_b, d.z))
        .collect())
}

/// Lorentzian `amplitude / (1 + tc²(|ω| - ω0)²)` on a grid (rad/μs).
#[pyfunction]
#[pyo3(signature = (omegas, omega0, tc, amplitude=1.0))]
fn lorentzian(omegas: Vec<f64>, omega0: f64, tc: f64, amplitude: f64) -> PyResult<Vec<f64>> {
    let m = SpectrumModel::Lorentzian { omega0, tc, amplitude };
    omegas.iter().map(|&w| evaluate_spectrum(&m, w).map_err(to_py)).collect()
}

/// `(S⁺, S⁻)` from the `±x` expectations at time `t`.
#[pyfunction]
fn invert_single_axis(e_plus: f64, e_minus: f64, t: f64) -> PyResult<(f64, f64)> {
    invert(e_plus, e_minus, t).map_err(to_py)
}

/// SPAM-corrupted `⟨σ_x(T)⟩` for a `±x` preparation.
#[pyfunction]
#[pyo3(signature = (s_plus, s_minus, t, plus=true, alpha=1.0, alpha_m=1.0, delta=0.0))]
fn single_axis_model(s_plus: f64, s_minus: f64, t: f64, plus: bool, alpha: f64, alpha_m: f64, delta: f64) -> f64 {
    let p = SingleAxisParams {
        s_plus,
        s_minus,
        alpha,
        alpha_m,
        delta,
    };
    model(&p, t, plus)
}

#[pymodule]
fn slqns_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(bundled_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(lorentzian, m)?)?;
    m.add_function(wrap_pyfunction!(invert_single_axis, m)?)?;
    m.add_function(wrap_pyfunction!(single_axis_model, m)?)?;
    Ok(())
}
