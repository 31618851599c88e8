use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::solve3;
use super::spectrum::{spectrum, Channel, Window};
use super::sweep::{run_sweep, SweepResult, SweepSpec};
use super::AnalysisError;
use crate::bath::NucleusCoupling;
use crate::echo::{precessed_polarization_axis, pseudo_spin_exact, single_signal, SignalMeta};
use crate::numeric::{linear_regression, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SingleObservable {
    /// Q at one free-evolution time.
    QuadratureAt { tau: f64 },
    /// Q spectral coefficient at the ω₁ bin, projected on its P = 1 phase.
    SpectralPeak { tau: Vec<f64>, window: Window },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub polarization: f64,
    pub value: f64,
    /// Interquartile range across realizations, bath scans only.
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationScan {
    pub points: Vec<ScanPoint>,
    /// Regression over the finite points; `None` with fewer than two.
    pub fit: Option<LinearFit>,
}

/// `∂Q/∂P` of a single nucleus polarized along n̂₀: `−k sin²(ω₁τ/2) sin(ω₀τ)`.
pub fn q_slope_analytic(n: &NucleusCoupling, tau: f64) -> f64 {
    let s1 = (0.5 * n.omega1 * tau).sin();
    -n.mixing() * s1 * s1 * (n.omega0 * tau).sin()
}

fn check_polarizations(values: &[f64]) -> Result<(), AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::InvalidInput("no polarization values".into()));
    }
    if let Some(p) = values.iter().find(|p| !(p.is_finite() && p.abs() <= 1.0)) {
        return Err(AnalysisError::InvalidInput(format!("polarization {p} outside [-1, 1]")));
    }
    Ok(())
}

fn regress(points: &[ScanPoint]) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.value.is_finite())
        .map(|p| (p.polarization, p.value))
        .unzip();
    linear_regression(&x, &y)
}

/// Single-nucleus observable as a function of the polarization degree,
/// keeping the nucleus's polarization axis.
pub fn polarization_scan_single(
    n: &NucleusCoupling,
    p_values: &[f64],
    observable: &SingleObservable,
) -> Result<PolarizationScan, AnalysisError> {
    check_polarizations(p_values)?;
    let axis = n.polarization_axis;
    let values: Vec<f64> = match observable {
        SingleObservable::QuadratureAt { tau } => p_values
            .iter()
            .map(|&p| pseudo_spin_exact(&n.with_polarization(p, axis), *tau).im)
            .collect(),
        SingleObservable::SpectralPeak { tau, window } => {
            let coefficient = |p: f64| -> Result<num_complex::Complex64, AnalysisError> {
                let sig = single_signal(&n.with_polarization(p, axis), tau, SignalMeta::default())?;
                Ok(spectrum(&sig, *window)?.at(Channel::Q, n.omega1 / (2.0 * PI)))
            };
            let reference = coefficient(1.0)?;
            let unit = if reference.norm() > 0.0 { reference.conj() / reference.norm() } else { 1.0.into() };
            p_values
                .iter()
                .map(|&p| coefficient(p).map(|c| (c * unit).re))
                .collect::<Result<_, _>>()?
        }
    };
    let points: Vec<ScanPoint> = p_values
        .iter()
        .zip(values)
        .map(|(&polarization, value)| ScanPoint {
            polarization,
            value,
            spread: None,
        })
        .collect();
    let fit = regress(&points);
    Ok(PolarizationScan { points, fit })
}

/// Median ϖ_fit against P for one (B, n) bath. The sweep's polarization axis is
/// the scan; it must hold a single field and abundance.
pub fn polarization_scan_bath(
    spec: &SweepSpec,
    workers: Option<usize>,
) -> Result<(PolarizationScan, SweepResult), AnalysisError> {
    if spec.grid.b_gauss.len() != 1 || spec.grid.abundance.len() != 1 {
        return Err(AnalysisError::InvalidInput(
            "a polarization scan needs exactly one field and one abundance".into(),
        ));
    }
    check_polarizations(&spec.grid.polarization)?;
    let sweep = run_sweep(spec, workers)?;
    let points: Vec<ScanPoint> = sweep
        .cells
        .iter()
        .map(|c| ScanPoint {
            polarization: c.polarization,
            value: c.median_varpi,
            spread: Some(c.iqr_varpi),
        })
        .collect();
    let fit = regress(&points);
    Ok((PolarizationScan { points, fit }, sweep))
}

/// `y ≈ offset + amplitude · cos(ω x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub angular_frequency: f64,
    pub r_squared: f64,
}

impl SinusoidFit {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.angular_frequency
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.amplitude * (self.angular_frequency * x + self.phase).cos()
    }
}

fn sinusoid_at(x: &[f64], y: &[f64], omega: f64) -> Option<(f64, [f64; 3])> {
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let (s, c) = (omega * xi).sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            b[i] += row[i] * yi;
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(a, b)?;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let (s, c) = (omega * xi).sin_cos();
            (yi - coef[0] - coef[1] * c - coef[2] * s).powi(2)
        })
        .sum();
    Some((sse, coef))
}

/// Least-squares sinusoid with free angular frequency in `[omega_lo, omega_hi]`.
pub fn fit_sinusoid(x: &[f64], y: &[f64], omega_lo: f64, omega_hi: f64) -> Option<SinusoidFit> {
    if x.len() != y.len() || x.len() < 4 || !(omega_lo > 0.0 && omega_hi > omega_lo) {
        return None;
    }
    const SCAN: usize = 2000;
    let step = (omega_hi - omega_lo) / SCAN as f64;
    let sse = |w: f64| sinusoid_at(x, y, w).map_or(f64::INFINITY, |r| r.0);
    let best = (0..=SCAN)
        .map(|i| omega_lo + step * i as f64)
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))?;

    // golden-section refinement inside the neighbouring scan cells
    let (mut a, mut b) = ((best - step).max(omega_lo), (best + step).min(omega_hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sse(d);
        }
    }
    let omega = 0.5 * (a + b);
    let (residual, coef) = sinusoid_at(x, y, omega)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    Some(SinusoidFit {
        offset: coef[0],
        amplitude: coef[1].hypot(coef[2]),
        phase: (-coef[2]).atan2(coef[1]),
        angular_frequency: omega,
        r_squared: if total > 0.0 { 1.0 - residual / total } else { 1.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionScan {
    pub phases: Vec<f64>,
    /// Precession delays `phase/ω₀`, seconds.
    pub delays: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Phase of the projection reference in the complex spectral plane.
    pub reference_phase: f64,
    /// Sinusoid fitted against precession phase.
    pub fit: Option<SinusoidFit>,
}

impl DirectionScan {
    /// Fitted modulation period on the delay axis, seconds.
    pub fn period_delay(&self, omega0: f64) -> Option<f64> {
        self.fit.map(|f| f.period() / omega0)
    }
}

/// Q amplitude at the ω₁ spectral bin as the initial polarization, an
/// eigenstate of H₁ along n̂₁, is precessed about n̂₀ by each phase.
pub fn direction_scan(
    n: &NucleusCoupling,
    phases: &[f64],
    tau: &[f64],
    window: Window,
) -> Result<DirectionScan, AnalysisError> {
    if phases.is_empty() {
        return Err(AnalysisError::InvalidInput("no precession phases".into()));
    }
    if n.polarization == 0.0 {
        return Err(AnalysisError::InvalidInput("direction scan of an unpolarized nucleus".into()));
    }
    let f1 = n.omega1 / (2.0 * PI);
    let coefficients = phases
        .iter()
        .map(|&phase| {
            let axis = precessed_polarization_axis(n, n.n1, phase);
            let sig = single_signal(&n.with_polarization(n.polarization, axis), tau, SignalMeta::default())?;
            Ok(spectrum(&sig, window)?.at(Channel::Q, f1))
        })
        .collect::<Result<Vec<num_complex::Complex64>, AnalysisError>>()?;

    let reference = coefficients
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let reference_phase = reference.arg();
    let rotate = num_complex::Complex64::from_polar(1.0, -reference_phase);
    let amplitudes: Vec<f64> = coefficients.iter().map(|c| (c * rotate).re).collect();
    let fit = fit_sinusoid(phases, &amplitudes, 0.25, 4.0);
    Ok(DirectionScan {
        phases: phases.to_vec(),
        delays: phases.iter().map(|p| p / n.omega0).collect(),
        amplitudes,
        reference_phase,
        fit,
    })
}
