//! Campaign configs, runs, bundles and report comparison.

mod campaign;
mod config;
mod report;

pub use campaign::{estimate_dataset, run_campaign, CampaignOutcome};
pub use config::{
    bundled_config, BackendSpec, CampaignConfig, DephasingSpec, DeviceSpec, LorentzianSpec, SpectraSpec,
    BUNDLED_CONFIGS,
};
pub use report::{
    compare_methods, compare_reports, injected_value, ComparisonRow, Failure, Injected, Report, ReportDelta,
};
