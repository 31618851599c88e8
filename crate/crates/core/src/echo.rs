//! Spin-echo pseudo-spin of a central spin coupled to independent nuclei.
//!
//! For one nucleus the echo coherence is `S_k = Tr(U₁† U₀† U₁ U₀ ρ_k)` with
//! `U_m = exp(−i ω_m τ σ·n̂_m / 2)`. The bath coherence is the product of
//! the per-nucleus factors, `S = Λ e^{iΦ}`.
//!
//! Time axis: `τ` is the free-evolution time between pulses (half the
//! sequence); the total sequence length `2τ` is reported alongside. Revivals
//! sit at `ω₀ τ = 2π m` and the revival phase rate is `dΦ/dτ`.
//!
//! Quadrature: `I = Re S`, `Q = Im S`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{BathRealization, NucleusCoupling};
use crate::numeric::NeumaierSum;
use crate::su2::{ComplexMat2, Su2};
use crate::vec3::Vec3;

/// Amplitude below which the phase is reported as undefined.
pub const PHASE_MASK_THRESHOLD: f64 = 1e-6;

/// Baths larger than this are accumulated as Σ ln|S_k| and Σ arg S_k.
pub const LOG_PRODUCT_THRESHOLD: usize = 1000;

/// Required samples per period of the fastest nuclear precession.
pub const POINTS_PER_PERIOD: f64 = 20.0;

/// |m̂ × n̂₀| tolerance for treating a polarization axis as field-aligned.
pub const ALIGNMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EchoError {
    #[error("closed form needs the polarization axis along n0 (|m x n0| = {misalignment:.3e})")]
    NotAlongField { misalignment: f64 },
    #[error("time grid must be non-empty, finite and ascending")]
    BadGrid,
}

/// ½·1 + (P/2) σ·m̂ without range checks; couplings are validated on construction.
fn nuclear_density(n: &NucleusCoupling) -> ComplexMat2 {
    ComplexMat2::identity().scale(0.5.into())
        + ComplexMat2::pauli_dot(&n.polarization_axis).scale((0.5 * n.polarization).into())
}

/// Echo propagator `U₁† U₀† U₁ U₀` of one nucleus.
pub fn echo_propagator(n: &NucleusCoupling, tau: f64) -> Su2 {
    let u0 = Su2::rotation(n.n0, n.omega0 * tau);
    let u1 = Su2::rotation(n.n1, n.omega1 * tau);
    u1.adjoint() * u0.adjoint() * u1 * u0
}

/// Per-nucleus pseudo-spin from the full 2×2 trace.
pub fn pseudo_spin_exact(n: &NucleusCoupling, tau: f64) -> Complex64 {
    let m = echo_propagator(n, tau).to_matrix();
    (m * nuclear_density(n)).trace()
}

/// Signed polarization along n̂₀, or the misalignment when m̂ is not (anti)parallel to n̂₀.
fn aligned_polarization(n: &NucleusCoupling) -> Result<f64, f64> {
    if n.polarization == 0.0 {
        return Ok(0.0);
    }
    let mis = n.polarization_axis.cross(&n.n0).norm();
    if mis > ALIGNMENT_TOL {
        Err(mis)
    } else {
        Ok(n.polarization * n.polarization_axis.dot(&n.n0).signum())
    }
}

/// Closed-form pseudo-spin for a polarization along ±n̂₀:
///
/// `S_k = 1 + |n̂₀×n̂₁|² sin²(ω₁τ/2) (R e^{iΘ} − 1)`, `R e^{iΘ} = cos ω₀τ − i P sin ω₀τ`.
///
/// The leading sign is `+`; with `−` the unpolarized envelope would exceed 1.
pub fn pseudo_spin_closed(n: &NucleusCoupling, tau: f64) -> Result<Complex64, EchoError> {
    let p = aligned_polarization(n).map_err(|misalignment| EchoError::NotAlongField { misalignment })?;
    Ok(closed_form(n.mixing(), n.omega0, n.omega1, p, tau))
}

#[inline]
fn closed_form(mixing: f64, omega0: f64, omega1: f64, p: f64, tau: f64) -> Complex64 {
    let s0 = (0.5 * omega0 * tau).sin();
    let s1 = (0.5 * omega1 * tau).sin();
    let weight = mixing * s1 * s1;
    // R e^{iΘ} − 1 = (cos ω₀τ − 1) − i P sin ω₀τ, with cos ω₀τ − 1 = −2 sin²(ω₀τ/2)
    let rotation_minus_one = Complex64::new(-2.0 * s0 * s0, -p * (omega0 * tau).sin());
    Complex64::new(1.0, 0.0) + rotation_minus_one * weight
}

/// One term of the phase sum: the arctangent of
/// `P (C₀/S₀) X / (X − 1)`, `X = 2|n̂₀×n̂₁|² S₀² S₁²`, continued across the
/// zero of `X − 1` so that it equals `arg S_k` in `(−π, π]`.
pub fn phase_term_analytic(n: &NucleusCoupling, tau: f64) -> Result<f64, EchoError> {
    let p = aligned_polarization(n).map_err(|misalignment| EchoError::NotAlongField { misalignment })?;
    let (s0, c0) = (0.5 * n.omega0 * tau).sin_cos();
    let s1 = (0.5 * n.omega1 * tau).sin();
    let x = 2.0 * n.mixing() * s0 * s0 * s1 * s1;
    // P (C₀/S₀) X = P C₀ S₀ · 2|n̂₀×n̂₁|² S₁², finite at S₀ = 0
    let numerator = p * c0 * s0 * 2.0 * n.mixing() * s1 * s1;
    let denominator = x - 1.0;
    // arctan(num/den) on the branch where the real part 1 − X is the abscissa
    Ok((-numerator).atan2(-denominator))
}

/// Σ_k of [`phase_term_analytic`].
pub fn phase_analytic(bath: &BathRealization, tau: f64) -> Result<f64, EchoError> {
    let mut sum = NeumaierSum::default();
    for n in &bath.nuclei {
        sum.add(phase_term_analytic(n, tau)?);
    }
    Ok(sum.value())
}

/// Revival phase rate `ϖ ≃ −(ω₀/2) Σ_k |n̂₀×n̂₁ᵏ|² P_k`, rad/s, with P_k the
/// polarization component along n̂₀.
pub fn revival_rate_analytic(bath: &BathRealization) -> f64 {
    let mut sum = NeumaierSum::default();
    for n in &bath.nuclei {
        sum.add(n.mixing() * n.polarization * n.polarization_axis.dot(&n.n0));
    }
    -0.5 * bath.omega0() * sum.value()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalMeta {
    pub config_hash: String,
    pub seed: u64,
    pub realization: u64,
    /// Bare nuclear Larmor frequency, rad/s; locates revivals.
    pub omega0: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoSignal {
    /// Free-evolution time τ, seconds, ascending.
    pub tau: Vec<f64>,
    pub s: Vec<Complex64>,
    pub meta: SignalMeta,
}

impl EchoSignal {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn in_phase(&self) -> Vec<f64> {
        self.s.iter().map(|z| z.re).collect()
    }

    pub fn quadrature(&self) -> Vec<f64> {
        self.s.iter().map(|z| z.im).collect()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.s.iter().map(|z| z.norm()).collect()
    }

    /// Total sequence length 2τ for each grid point.
    pub fn total_time(&self) -> Vec<f64> {
        self.tau.iter().map(|t| 2.0 * t).collect()
    }

    /// Largest relative deviation of the grid spacing from its mean; `None` for < 2 points.
    pub fn grid_nonuniformity(&self) -> Option<f64> {
        if self.tau.len() < 2 {
            return None;
        }
        let n = self.tau.len() - 1;
        let mean = (self.tau[n] - self.tau[0]) / n as f64;
        let worst = self
            .tau
            .windows(2)
            .map(|w| ((w[1] - w[0]) - mean).abs())
            .fold(0.0, f64::max);
        Some(worst / mean.abs())
    }
}

/// `n` points from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Fastest precession frequency in the bath, max(ω₀, ω₁ᵏ).
pub fn max_precession(bath: &BathRealization) -> f64 {
    bath.nuclei.iter().map(|n| n.omega1).fold(bath.omega0(), f64::max)
}

/// Largest admissible grid step for a bath whose fastest precession is `omega_max`.
pub fn max_grid_step(omega_max: f64) -> f64 {
    2.0 * std::f64::consts::PI / (POINTS_PER_PERIOD * omega_max)
}

/// Uniform grid over `[start, stop]` that honours [`max_grid_step`] and has at
/// least `min_points` points.
pub fn resolved_grid(bath: &BathRealization, start: f64, stop: f64, min_points: usize) -> Vec<f64> {
    let step = max_grid_step(max_precession(bath));
    let needed = ((stop - start) / step).ceil() as usize + 1;
    uniform_grid(start, stop, needed.max(min_points).max(2))
}

/// Per-nucleus evaluation strategy, fixed once per bath.
#[derive(Clone, Copy)]
enum Term {
    Closed { mixing: f64, omega1: f64, p: f64 },
    Exact(NucleusCoupling),
}

impl Term {
    fn new(n: &NucleusCoupling) -> Self {
        match aligned_polarization(n) {
            Ok(p) => Term::Closed {
                mixing: n.mixing(),
                omega1: n.omega1,
                p,
            },
            Err(_) => Term::Exact(*n),
        }
    }

    #[inline]
    fn eval(&self, omega0: f64, tau: f64) -> Complex64 {
        match self {
            Term::Closed { mixing, omega1, p } => closed_form(*mixing, omega0, *omega1, *p, tau),
            Term::Exact(n) => pseudo_spin_exact(n, tau),
        }
    }
}

fn product_linear(terms: &[Term], omega0: f64, tau: f64) -> Complex64 {
    terms
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, t| acc * t.eval(omega0, tau))
}

fn product_log(terms: &[Term], omega0: f64, tau: f64) -> Complex64 {
    let mut log_amp = NeumaierSum::default();
    let mut phase = NeumaierSum::default();
    for t in terms {
        let z = t.eval(omega0, tau);
        let r = z.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        log_amp.add(r.ln());
        phase.add(z.im.atan2(z.re));
    }
    Complex64::from_polar(log_amp.value().exp(), phase.value())
}

/// `S(τ) = ∏_k S_k(τ)` on `tau`. Field-aligned nuclei use the closed form,
/// the rest the full trace.
pub fn bath_signal(bath: &BathRealization, tau: &[f64]) -> Result<EchoSignal, EchoError> {
    if tau.is_empty() || tau.iter().any(|t| !t.is_finite()) || tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EchoError::BadGrid);
    }
    let omega0 = bath.omega0();
    let terms: Vec<Term> = bath.nuclei.iter().map(Term::new).collect();
    let use_log = terms.len() > LOG_PRODUCT_THRESHOLD;

    let s: Vec<Complex64> = tau
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                Complex64::new(1.0, 0.0)
            } else if use_log {
                product_log(&terms, omega0, t)
            } else {
                product_linear(&terms, omega0, t)
            }
        })
        .collect();

    let mut warnings = Vec::new();
    if tau.len() > 1 {
        let limit = max_grid_step(max_precession(bath));
        let worst = tau.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if worst > limit * (1.0 + 1e-9) {
            warnings.push(format!(
                "under-resolved grid: step {worst:.3e} s exceeds {limit:.3e} s (20 points per fastest period)"
            ));
        }
    }

    Ok(EchoSignal {
        tau: tau.to_vec(),
        s,
        meta: SignalMeta {
            config_hash: bath.config_hash(),
            seed: bath.config.seed,
            realization: bath.realization,
            omega0,
            warnings,
        },
    })
}

/// Echo signal of a single nucleus, outside any lattice.
pub fn single_signal(n: &NucleusCoupling, tau: &[f64], meta: SignalMeta) -> Result<EchoSignal, EchoError> {
    if tau.is_empty() || tau.iter().any(|t| !t.is_finite()) || tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EchoError::BadGrid);
    }
    let term = Term::new(n);
    let s = tau.iter().map(|&t| term.eval(n.omega0, t)).collect();
    Ok(EchoSignal {
        tau: tau.to_vec(),
        s,
        meta: SignalMeta {
            omega0: n.omega0,
            ..meta
        },
    })
}

/// Amplitude and unwrapped phase of an echo signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Unwrapped phase, NaN where `lambda < PHASE_MASK_THRESHOLD`. Each
    /// unmasked run is unwrapped on its own, starting from its principal value.
    pub phi: Vec<f64>,
}

impl PhaseTrace {
    /// Least-squares slope dΦ/dτ over the unmasked points with
    /// `|τ − center| ≤ half_span`; `None` with fewer than 2 points or when the
    /// span crosses a masked region.
    pub fn slope_at(&self, center: f64, half_span: f64) -> Option<f64> {
        let idx: Vec<usize> = (0..self.tau.len())
            .filter(|&i| (self.tau[i] - center).abs() <= half_span)
            .collect();
        if idx.len() < 2 || idx.iter().any(|&i| self.phi[i].is_nan()) {
            return None;
        }
        let n = idx.len() as f64;
        let mt = idx.iter().map(|&i| self.tau[i]).sum::<f64>() / n;
        let mp = idx.iter().map(|&i| self.phi[i]).sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &i in &idx {
            let dt = self.tau[i] - mt;
            sxy += dt * (self.phi[i] - mp);
            sxx += dt * dt;
        }
        Some(sxy / sxx)
    }

    /// Phase at the grid point nearest `tau`, if defined there.
    pub fn phase_near(&self, tau: f64) -> Option<f64> {
        let i = nearest_index(&self.tau, tau)?;
        let p = self.phi[i];
        (!p.is_nan()).then_some(p)
    }
}

pub(crate) fn nearest_index(grid: &[f64], x: f64) -> Option<usize> {
    if grid.is_empty() {
        return None;
    }
    let i = grid.partition_point(|&t| t < x);
    if i == 0 {
        Some(0)
    } else if i == grid.len() {
        Some(grid.len() - 1)
    } else if (grid[i] - x) < (x - grid[i - 1]) {
        Some(i)
    } else {
        Some(i - 1)
    }
}

/// Λ = |S| and Φ = arg S unwrapped by nearest-branch continuation.
pub fn phase_trace(signal: &EchoSignal) -> PhaseTrace {
    let lambda: Vec<f64> = signal.s.iter().map(|z| z.norm()).collect();
    let mut phi = Vec::with_capacity(lambda.len());
    let mut prev: Option<f64> = None;
    for (z, &l) in signal.s.iter().zip(&lambda) {
        if l < PHASE_MASK_THRESHOLD {
            phi.push(f64::NAN);
            prev = None;
            continue;
        }
        let raw = z.im.atan2(z.re);
        let value = match prev {
            None => raw,
            Some(p) => {
                let two_pi = 2.0 * std::f64::consts::PI;
                raw + two_pi * ((p - raw) / two_pi).round()
            }
        };
        phi.push(value);
        prev = Some(value);
    }
    PhaseTrace {
        tau: signal.tau.clone(),
        lambda,
        phi,
    }
}

/// Rotates a nucleus's initial Bloch direction about n̂₀ by `phase`.
pub fn precessed_polarization_axis(n: &NucleusCoupling, start: Vec3, phase: f64) -> Vec3 {
    Su2::rotation(n.n0, phase).rotate_bloch(&start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{build_bath, BathConfig, PolarizationSpec};
    use std::f64::consts::PI;

    fn nucleus(omega0: f64, omega1: f64, tilt: f64, p: f64) -> NucleusCoupling {
        NucleusCoupling::synthetic(omega0, omega1, tilt, &PolarizationSpec::along_field(p)).unwrap()
    }

    fn small_bath(b: f64, n: f64, p: f64, seed: u64) -> BathRealization {
        let mut cfg = BathConfig::hollow_sphere(b, n, seed);
        cfg.r_max_nm = 2.5;
        build_bath(&cfg, &PolarizationSpec::along_field(p), 0).unwrap()
    }

    #[test]
    fn zero_time_is_unity() {
        let n = nucleus(1.0, 6.0, 0.7, 0.5);
        assert_eq!(pseudo_spin_exact(&n, 0.0), Complex64::new(1.0, 0.0));
        assert_eq!(pseudo_spin_closed(&n, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn parallel_axes_refocus() {
        let n = nucleus(1.0, 1.8, 0.0, 0.9);
        for k in 0..50 {
            let z = pseudo_spin_exact(&n, 0.37 * k as f64);
            assert!((z - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn fig1_geometry_closed_matches_trace() {
        // |n0 × n1|² = 0.5, ω₁ = 6ω₀, ω₀τ = π
        let n = nucleus(1.0, 6.0, PI / 4.0, 0.0);
        assert!((n.mixing() - 0.5).abs() < 1e-15);
        let exact = pseudo_spin_exact(&n, PI);
        let closed = pseudo_spin_closed(&n, PI).unwrap();
        assert!((exact - closed).norm() < 1e-12);
        // sin²(3π) = 0 → full refocus at this τ
        assert!((exact - 1.0).norm() < 1e-12);
    }

    #[test]
    fn unpolarized_closed_form_is_real_envelope() {
        let n = nucleus(1.0, 6.0, 0.8, 0.0);
        for k in 1..200 {
            let t = 0.05 * k as f64;
            let z = pseudo_spin_closed(&n, t).unwrap();
            assert_eq!(z.im, 0.0);
            let (s0, s1) = ((0.5 * t).sin(), (3.0 * t).sin());
            let envelope = 1.0 - 2.0 * n.mixing() * s0 * s0 * s1 * s1;
            assert!((z.re - envelope).abs() < 1e-14);
            assert!(z.re <= 1.0);
        }
    }

    #[test]
    fn misaligned_polarization_rejected_by_closed_form() {
        let n = nucleus(1.0, 3.0, 0.5, 0.0).with_polarization(1.0, Vec3::X);
        assert!(matches!(pseudo_spin_closed(&n, 1.0), Err(EchoError::NotAlongField { .. })));
        // antiparallel is accepted and equals P → −P
        let anti = nucleus(1.0, 3.0, 0.5, 0.0).with_polarization(0.7, -Vec3::Z);
        let flipped = nucleus(1.0, 3.0, 0.5, -0.7);
        let t = 2.3;
        assert!((pseudo_spin_closed(&anti, t).unwrap() - pseudo_spin_closed(&flipped, t).unwrap()).norm() < 1e-15);
        assert!((pseudo_spin_exact(&anti, t) - pseudo_spin_closed(&anti, t).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn empty_bath_is_unity() {
        let mut bath = small_bath(10.0, 0.01, 1.0, 0);
        bath.nuclei.clear();
        let sig = bath_signal(&bath, &uniform_grid(0.0, 1e-4, 50)).unwrap();
        assert!(sig.s.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn single_nucleus_bath_matches_trace() {
        let mut bath = small_bath(10.0, 0.05, 0.6, 3);
        bath.nuclei.truncate(1);
        let n = bath.nuclei[0];
        let grid = uniform_grid(0.0, 2e-4, 300);
        let sig = bath_signal(&bath, &grid).unwrap();
        for (t, z) in grid.iter().zip(&sig.s) {
            assert!((pseudo_spin_exact(&n, *t) - z).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_time_of_bath_is_exactly_one() {
        let bath = small_bath(10.0, 0.3, 1.0, 4);
        assert!(bath.len() > LOG_PRODUCT_THRESHOLD);
        let sig = bath_signal(&bath, &[0.0, 1e-6]).unwrap();
        assert_eq!(sig.s[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn log_and_linear_products_agree() {
        let bath = small_bath(20.0, 0.3, 0.8, 5);
        assert!(bath.len() > LOG_PRODUCT_THRESHOLD);
        let terms: Vec<Term> = bath.nuclei.iter().map(Term::new).collect();
        for k in 1..40 {
            let t = 2.5e-6 * k as f64;
            let a = product_linear(&terms, bath.omega0(), t);
            let b = product_log(&terms, bath.omega0(), t);
            assert!((a - b).norm() < 1e-9 * a.norm().max(1e-300) + 1e-15, "{a} {b}");
        }
    }

    #[test]
    fn under_resolved_grid_is_flagged() {
        let bath = small_bath(10.0, 0.05, 1.0, 6);
        let sig = bath_signal(&bath, &uniform_grid(0.0, 1e-4, 5)).unwrap();
        assert_eq!(sig.meta.warnings.len(), 1);
        let fine = resolved_grid(&bath, 0.0, 1e-4, 10);
        assert!(bath_signal(&bath, &fine).unwrap().meta.warnings.is_empty());
    }

    #[test]
    fn bad_grid_rejected() {
        let bath = small_bath(10.0, 0.05, 1.0, 6);
        assert_eq!(bath_signal(&bath, &[]), Err(EchoError::BadGrid));
        assert_eq!(bath_signal(&bath, &[1.0, 0.5]), Err(EchoError::BadGrid));
    }

    #[test]
    fn revival_rate_simple_cases() {
        let mut bath = small_bath(10.0, 0.05, 0.0, 7);
        assert_eq!(revival_rate_analytic(&bath), 0.0);
        bath.nuclei = vec![nucleus(bath.omega0(), 2.0 * bath.omega0(), PI / 2.0, 1.0)];
        let expected = -0.5 * bath.omega0();
        assert!((revival_rate_analytic(&bath) - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn phase_of_unpolarized_weak_bath_is_zero() {
        // weak coupling: every |n0×n1|² < ½ keeps Re S_k > 0
        let bath = small_bath(200.0, 0.1, 0.0, 8);
        assert!(bath.nuclei.iter().all(|n| n.mixing() < 0.5));
        let grid = resolved_grid(&bath, 0.0, 2.0 * PI / bath.omega0() * 1.5, 200);
        let trace = phase_trace(&bath_signal(&bath, &grid).unwrap());
        assert!(trace.phi.iter().filter(|p| !p.is_nan()).all(|p| *p == 0.0));
    }

    #[test]
    fn phase_is_masked_where_amplitude_vanishes() {
        // |n0×n1|² = ½ and ω₁ = ω₀: S = 1 − 2·½·1·1 = 0 at ω₀τ = π
        let n = nucleus(1.0, 1.0, PI / 4.0, 0.0);
        let sig = single_signal(&n, &[PI - 0.5, PI, PI + 0.5], SignalMeta::default()).unwrap();
        let trace = phase_trace(&sig);
        assert!(trace.lambda[1] < PHASE_MASK_THRESHOLD);
        assert!(trace.phi[1].is_nan());
        assert!(!trace.phi[0].is_nan() && !trace.phi[2].is_nan());
    }

    #[test]
    fn unwrap_removes_jumps() {
        // pure rotation e^{i 5τ} sampled finely crosses ±π repeatedly
        let tau = uniform_grid(0.0, 10.0, 2001);
        let s = tau.iter().map(|t| Complex64::from_polar(0.5, 5.0 * t)).collect();
        let sig = EchoSignal {
            tau: tau.clone(),
            s,
            meta: SignalMeta::default(),
        };
        let trace = phase_trace(&sig);
        for (t, p) in tau.iter().zip(&trace.phi) {
            assert!((p - 5.0 * t).abs() < 1e-9);
        }
        assert!((trace.slope_at(5.0, 0.1).unwrap() - 5.0).abs() < 1e-9);
    }
}
