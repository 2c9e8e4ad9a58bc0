//! Spin-locking quantum noise spectroscopy under SPAM errors.
//!
//! The crate simulates a continuously driven qubit under classical or
//! non-classical Gaussian noise with known spectra, injects static state
//! preparation and measurement (SPAM) errors, runs the single- and multi-axis
//! spin-locking protocols, and recovers spectra and SPAM parameters with both
//! the standard and the SPAM-robust estimators.
//!
//! Module map:
//! - [`spectra`]: spectrum models and spherical spectra sets
//! - [`noisegen`]: Gaussian trajectories with a prescribed spectrum, toy bath
//! - [`dynamics`]: trajectory simulation and closed-form TCL solutions
//! - [`spam`]: faulty preparation, two-outcome POVM, shot sampling
//! - [`protocols`]: Protocols 1–4 against pluggable backends
//! - [`estimation`]: inversions, regressions and uncertainty propagation
//! - [`harness`]: campaign configs, bundles and report comparison

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod noisegen;
pub mod protocols;
pub mod rng;
pub mod spam;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
