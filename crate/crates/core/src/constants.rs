//! Physical constants. SI unless the name says otherwise.

use std::f64::consts::PI;

/// Conventional cubic cell edge of diamond, nm (0.3567 ± 0.0001).
pub const DIAMOND_LATTICE_CONSTANT_NM: f64 = 0.3567;

/// NV electron gyromagnetic ratio, rad s⁻¹ G⁻¹ (2π × 2.8025 MHz/G).
pub const GAMMA_E_RAD_PER_S_GAUSS: f64 = 2.0 * PI * 2.8025e6;

/// ¹³C gyromagnetic ratio, rad s⁻¹ G⁻¹ (2π × 1.0705 kHz/G).
pub const GAMMA_C13_RAD_PER_S_GAUSS: f64 = 2.0 * PI * 1.0705e3;

/// μ₀/4π, T m A⁻¹ (exact in the pre-2019 SI, 1.00000000055e-7 after).
pub const MU0_OVER_4PI: f64 = 1e-7;

/// Reduced Planck constant, J s (exact).
pub const HBAR: f64 = 1.054_571_817e-34;

pub const TESLA_PER_GAUSS: f64 = 1e-4;

pub const METERS_PER_NM: f64 = 1e-9;

/// Point-dipole coupling strength `(μ₀/4π) γ_e γ_n ħ / r³` in rad/s for a
/// ¹³C nucleus at `r_nm` from the electron spin.
pub fn dipolar_strength(r_nm: f64) -> f64 {
    let gamma_e = GAMMA_E_RAD_PER_S_GAUSS / TESLA_PER_GAUSS;
    let gamma_n = GAMMA_C13_RAD_PER_S_GAUSS / TESLA_PER_GAUSS;
    let r = r_nm * METERS_PER_NM;
    MU0_OVER_4PI * gamma_e * gamma_n * HBAR / (r * r * r)
}

/// Bare ¹³C Larmor angular frequency in rad/s at `b_gauss`.
pub fn larmor_c13(b_gauss: f64) -> f64 {
    GAMMA_C13_RAD_PER_S_GAUSS * b_gauss
}
