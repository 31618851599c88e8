//! Signal analysis: spectra, revival-window fits, contrast, parameter
//! sweeps and polarization scans.

mod fit;
mod scan;
mod spectrum;
mod sweep;

pub use fit::{
    contrast_estimate, fit_revival, locate_revival, FitDiagnostics, FitFailure, FitFailureKind, FitOptions,
    RevivalFit, RevivalWindow,
};
pub use scan::{
    direction_scan, fit_sinusoid, polarization_scan_bath, polarization_scan_single, q_slope_analytic,
    DirectionScan, PolarizationScan, ScanPoint, SingleObservable, SinusoidFit,
};
pub use spectrum::{spectrum, Channel, Spectrum, Window};
pub use sweep::{run_sweep, CellResult, SweepGrid, SweepResult, SweepSpec};

use thiserror::Error;

use crate::bath::BathError;
use crate::echo::EchoError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("time grid is not uniform (relative spacing deviation {0:.3e})")]
    NonUniformGrid(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid scan or sweep input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Echo(#[from] EchoError),
    #[error(transparent)]
    Bath(#[from] BathError),
}
