//! Running a campaign end to end and writing its bundle.

use super::config::CampaignConfig;
use super::report::{injected_value, ComparisonRow, Failure, Injected, Report};
use crate::error::{Error, Result};
use crate::estimation::{
    invert_multi_axis, pooled_spam, robust_multi_axis, robust_single_axis, standard_single_axis, FrequencyEstimate,
    Method, Quantity,
};
use crate::protocols::ProtocolId;
use crate::spam::ShotDataset;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

type Estimator = fn(&ShotDataset, f64) -> Result<FrequencyEstimate>;

/// Estimators applied to each drive amplitude, standard first.
fn estimators(protocol: ProtocolId) -> Vec<(&'static str, Estimator)> {
    match protocol {
        ProtocolId::P1 => vec![("standard", standard_single_axis)],
        ProtocolId::P2 => vec![("standard", standard_single_axis), ("robust", robust_single_axis)],
        ProtocolId::P3 => vec![("standard", invert_multi_axis)],
        ProtocolId::P4 => vec![("standard", invert_multi_axis), ("robust", robust_multi_axis)],
    }
}

/// Everything a finished campaign produced.
#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub report: Report,
    pub dataset: ShotDataset,
    pub out_dir: PathBuf,
}

/// Runs every estimator the protocol supports on an existing dataset.
///
/// Failures are recorded per frequency; the call itself only fails when
/// nothing at all could be estimated.
pub fn estimate_dataset(config: &CampaignConfig, ds: &ShotDataset) -> Result<Report> {
    let omegas = config.omegas();
    let est = estimators(config.protocol);
    let per_omega: Vec<Vec<std::result::Result<FrequencyEstimate, Failure>>> = omegas
        .par_iter()
        .map(|&w| {
            est.iter()
                .map(|(name, f)| {
                    f(ds, w).map_err(|e| Failure {
                        omega: w,
                        method: name.to_string(),
                        error: e.to_string(),
                    })
                })
                .collect()
        })
        .collect();

    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for r in per_omega.into_iter().flatten() {
        match r {
            Ok(e) => estimates.push(e),
            Err(f) => failures.push(f),
        }
    }

    let mut pooled = Vec::new();
    for method in [Method::RobustLinear, Method::RobustNonlinear] {
        let of_method: Vec<FrequencyEstimate> = estimates.iter().filter(|e| e.method == method).cloned().collect();
        pooled.extend(pooled_spam(&of_method));
    }

    let set = config.spectra.spherical_set()?;
    let device = config.device()?;
    let mut injected = Vec::new();
    for &w in &omegas {
        for q in Quantity::ALL {
            if let Some(value) = injected_value(&set, &device, &config.spam, w, q) {
                injected.push(Injected { omega: w, quantity: q, value });
            }
        }
    }

    let mut report = Report {
        name: config.name.clone(),
        protocol: config.protocol,
        seed: config.seed,
        backend: config.backend.label().to_string(),
        analytic: config.analytic,
        shots: config.shots,
        omega_q: device.omega_q,
        omegas,
        spam: config.spam,
        estimates,
        pooled_spam: pooled,
        injected,
        comparison: Vec::new(),
        failures,
    };
    report.comparison = comparison_rows(&report);
    if report.estimates.is_empty() {
        let reasons: Vec<String> = report.failures.iter().map(|f| f.error.clone()).collect();
        return Err(Error::estimation("campaign", format!("no drive amplitude could be estimated: {}", reasons.join("; "))));
    }
    Ok(report)
}

fn comparison_rows(report: &Report) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for &w in &report.omegas {
        let at: Vec<&FrequencyEstimate> = report.estimates.iter().filter(|f| f.omega == w).collect();
        let standard = at.iter().find(|f| f.method == Method::Standard);
        let robust = at.iter().find(|f| f.method != Method::Standard);
        for q in Quantity::ALL {
            let s = standard.and_then(|f| f.get(q));
            let r = robust.and_then(|f| f.get(q));
            if s.is_none() && r.is_none() {
                continue;
            }
            rows.push(ComparisonRow {
                omega: w,
                quantity: q,
                truth: report.truth(w, q),
                standard: s.map(|e| e.value),
                standard_se: s.map(|e| e.std_error),
                robust: r.map(|e| e.value),
                robust_se: r.map(|e| e.std_error),
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct EstimateRow {
    component: String,
    freq_rad_per_us: f64,
    value: f64,
    std_error: f64,
    method: &'static str,
}

#[derive(Serialize)]
struct ComparisonCsvRow {
    freq_rad_per_us: f64,
    quantity: String,
    truth: Option<f64>,
    standard: Option<f64>,
    standard_se: Option<f64>,
    robust: Option<f64>,
    robust_se: Option<f64>,
}

fn write_estimates_csv(report: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in report.all_estimates() {
        w.serialize(EstimateRow {
            component: e.quantity.label().to_string(),
            freq_rad_per_us: e.quantity.frequency_argument(e.omega, report.omega_q).unwrap_or(e.omega),
            value: e.value,
            std_error: e.std_error,
            method: e.method.label(),
        })?;
    }
    w.flush()?;
    Ok(())
}

fn write_comparison_csv(report: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.comparison {
        w.serialize(ComparisonCsvRow {
            freq_rad_per_us: r.omega,
            quantity: r.quantity.label().to_string(),
            truth: r.truth,
            standard: r.standard,
            standard_se: r.standard_se,
            robust: r.robust,
            robust_se: r.robust_se,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn campaign_log(config: &CampaignConfig, report: &Report, n_entries: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "campaign {:?}: protocol {}, backend {}, seed {}, shots {}, analytic {}",
        report.name,
        u8::from(report.protocol),
        report.backend,
        report.seed,
        report.shots,
        report.analytic
    );
    let _ = writeln!(
        s,
        "spam: alpha_SP {} alpha_M {} delta {}",
        config.spam.alpha_sp, config.spam.alpha_m, config.spam.delta
    );
    let _ = writeln!(s, "{} drive amplitudes, {} dataset entries", report.omegas.len(), n_entries);
    for f in &report.estimates {
        let _ = writeln!(
            s,
            "omega {:.6} rad/us: {} ok, {} estimates",
            f.omega,
            f.method.label(),
            f.estimates.len()
        );
        for warning in &f.warnings {
            let _ = writeln!(s, "  warning: {warning}");
        }
    }
    for f in &report.failures {
        let _ = writeln!(s, "omega {:.6} rad/us: {} FAILED: {}", f.omega, f.method, f.error);
    }
    for p in &report.pooled_spam {
        let _ = writeln!(
            s,
            "pooled {} ({}): {:.6} +- {:.6}",
            p.quantity,
            p.method.label(),
            p.value,
            p.std_error
        );
    }
    s
}

/// Generates data, estimates every frequency and writes the bundle:
/// `datasets.csv`, `manifest.json`, `estimates.csv`, `comparison.csv`,
/// `report.json` and `campaign.log`.
///
/// The bundle is written even when estimation fails everywhere, in which
/// case the error is returned afterwards.
pub fn run_campaign(config: &CampaignConfig, out_dir: &Path) -> Result<CampaignOutcome> {
    config.validate()?;
    let backend = config.backend()?;
    let ds = config.plan().run(backend.as_ref())?;
    std::fs::create_dir_all(out_dir)?;
    ds.write_csv(&out_dir.join("datasets.csv"))?;
    let meta = serde_json::json!({
        "config": config,
        "backend": config.backend.label(),
        "seed_derivation": "per-entry seeds are derived from the campaign seed and the entry key \
                            (axis, omega, init, observable, T), so rows are reproducible individually",
        "units": {"omega": "rad/us", "T": "us"},
    });
    ds.write_manifest(&out_dir.join("manifest.json"), &meta)?;

    let result = estimate_dataset(config, &ds);
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            std::fs::write(out_dir.join("campaign.log"), format!("estimation failed: {e}\n"))?;
            return Err(e);
        }
    };
    write_estimates_csv(&report, &out_dir.join("estimates.csv"))?;
    write_comparison_csv(&report, &out_dir.join("comparison.csv"))?;
    report.write(&out_dir.join("report.json"))?;
    std::fs::write(out_dir.join("campaign.log"), campaign_log(config, &report, ds.len()))?;
    Ok(CampaignOutcome {
        report,
        dataset: ds,
        out_dir: out_dir.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::bundled_config;

    fn small(name: &str) -> CampaignConfig {
        let mut c = CampaignConfig::from_json(bundled_config(name).unwrap()).unwrap();
        c.omegas_mhz.truncate(2);
        c
    }

    #[test]
    fn bundle_is_written_and_deterministic() {
        let c = small("fig2-dephasing");
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_campaign(&c, a.path()).unwrap();
        run_campaign(&c, b.path()).unwrap();
        for f in ["datasets.csv", "manifest.json", "estimates.csv", "comparison.csv", "report.json", "campaign.log"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f} differs between identical runs");
        }
        let back = Report::load(&a.path().join("report.json")).unwrap();
        assert_eq!(back.estimates, ra.report.estimates);
        assert_eq!(back.pooled_spam.len(), 3);
        assert!(back.failures.is_empty());
    }

    #[test]
    fn multi_axis_campaign_has_both_methods() {
        let c = small("multi-axis");
        let dir = tempfile::tempdir().unwrap();
        let out = run_campaign(&c, dir.path()).unwrap();
        let methods: Vec<Method> = out.report.estimates.iter().map(|f| f.method).collect();
        assert_eq!(methods, vec![Method::Standard, Method::RobustLinear, Method::Standard, Method::RobustLinear]);
        assert!(out.report.comparison.iter().any(|r| r.quantity == Quantity::TransverseQuantumPlus));
    }
}
