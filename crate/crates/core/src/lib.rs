//! Spin-echo quadrature simulation of a central electronic spin in a
//! partially polarized bath of spin-½ nuclei.
//!
//! - [`su2`]: two-level propagators and density matrices.
//! - [`bath`]: diamond-lattice ¹³C bath realizations and hyperfine couplings.
//! - [`echo`]: per-nucleus and bath pseudo-spin, phase and revival rate.
//! - [`analysis`]: spectra, revival fits, contrast, sweeps and scans.
//! - [`io`]: CSV and JSON formats for signals, spectra and sweeps.

pub mod analysis;
pub mod bath;
pub mod constants;
pub mod echo;
pub mod hashing;
pub mod io;
pub mod numeric;
pub mod su2;
pub mod vec3;

pub use bath::{build_bath, BathConfig, BathRealization, NucleusCoupling, PolarizationSpec};
pub use echo::{bath_signal, phase_trace, EchoSignal, PhaseTrace};
pub use vec3::Vec3;
