use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::echo::{phase_trace, EchoSignal, PhaseTrace};

/// Minimum number of grid points inside a fit window.
pub const MIN_WINDOW_POINTS: usize = 30;

const MAX_ITERATIONS: usize = 400;
const SEED_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];
const LOG_DT_MIN: f64 = -2.302_585_092_994_046;
const LOG_DT_MAX: f64 = 2.302_585_092_994_046;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFailureKind {
    RevivalOutsideGrid,
    WindowTooSmall,
    NoOscillation,
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub window_start: f64,
    pub window_end: f64,
    pub n_points: usize,
    pub max_abs_q: f64,
    pub best_cost: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("revival fit failed ({kind:?}): {detail}")]
pub struct FitFailure {
    pub kind: FitFailureKind,
    pub detail: String,
    pub diagnostics: FitDiagnostics,
}

impl FitFailure {
    fn new(kind: FitFailureKind, detail: impl Into<String>, diagnostics: FitDiagnostics) -> Self {
        Self {
            kind,
            detail: detail.into(),
            diagnostics,
        }
    }
}

/// Fit window around one revival, all times on the τ axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevivalWindow {
    /// 1 for the first revival.
    pub order: usize,
    /// `order · 2π/ω₀`.
    pub t_nominal: f64,
    /// Envelope maximum near `t_nominal`.
    pub t_peak: f64,
    pub lambda_peak: f64,
    pub lambda_trough: f64,
    /// Half of the full width at half depth.
    pub collapse_width: f64,
    /// False when the half-depth crossings were not found and the width fell
    /// back to `2π/(8ω₀)`.
    pub collapse_resolved: bool,
    pub start: f64,
    pub end: f64,
    pub i_start: usize,
    pub i_end: usize,
}

impl RevivalWindow {
    pub fn n_points(&self) -> usize {
        self.i_end - self.i_start + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    /// Expected |ϖ| in rad/s, seeds the multi-start.
    pub varpi_hint: Option<f64>,
}

/// Result of fitting `Q ≈ e^{−((τ−t_r)/ΔT)²} C sin(ϖ(τ−t_r) + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevivalFit {
    pub window: RevivalWindow,
    /// Fitted revival centre, τ axis.
    pub t_r: f64,
    /// Same instant on the total-time axis, 2 t_r.
    pub t_r_total: f64,
    /// Signed oscillation rate dΦ/dτ in rad/s.
    pub varpi: f64,
    pub delta_t: f64,
    /// Fitted oscillation amplitude C.
    pub amplitude: f64,
    pub phase: f64,
    /// Peak |model| over the window divided by Λ(t_r), in [0, 1].
    pub contrast: f64,
    pub lambda_at_revival: f64,
    /// Measured dΦ/dτ at the envelope peak, if the phase is defined there.
    pub phase_rate_measured: Option<f64>,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// `exp(−(π/(ϖΔT))²)` clamped to [0, 1]; 0 when ϖΔT vanishes.
pub fn contrast_estimate(varpi: f64, delta_t: f64) -> f64 {
    let x = varpi.abs() * delta_t.abs();
    if !(x > 0.0) || !x.is_finite() {
        return if x.is_infinite() { 1.0 } else { 0.0 };
    }
    (-(PI / x).powi(2)).exp().clamp(0.0, 1.0)
}

/// Finds revival `order` (1-based) of `signal` and the window around it.
pub fn locate_revival(signal: &EchoSignal, order: usize) -> Result<RevivalWindow, FitFailure> {
    let trace = phase_trace(signal);
    locate_in_trace(&trace, signal.meta.omega0, order)
}

fn locate_in_trace(trace: &PhaseTrace, omega0: f64, order: usize) -> Result<RevivalWindow, FitFailure> {
    let tau = &trace.tau;
    let lambda = &trace.lambda;
    let fail = |kind, detail: String| FitFailure::new(kind, detail, FitDiagnostics::default());
    if order == 0 || !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(fail(
            FitFailureKind::RevivalOutsideGrid,
            format!("revival order {order} at ω₀ = {omega0} is undefined"),
        ));
    }
    let period = 2.0 * PI / omega0;
    let t_nominal = order as f64 * period;
    let (lo, hi) = (t_nominal - 0.25 * period, t_nominal + 0.25 * period);
    let (Some(&first), Some(&last)) = (tau.first(), tau.last()) else {
        return Err(fail(FitFailureKind::RevivalOutsideGrid, "empty grid".into()));
    };
    if t_nominal < first || t_nominal > last {
        return Err(fail(
            FitFailureKind::RevivalOutsideGrid,
            format!("revival at τ = {t_nominal:.6e} s lies outside [{first:.6e}, {last:.6e}]"),
        ));
    }

    let peak = (0..tau.len())
        .filter(|&i| tau[i] >= lo && tau[i] <= hi)
        .max_by(|&a, &b| {
            lambda[a]
                .total_cmp(&lambda[b])
                .then_with(|| (tau[b] - t_nominal).abs().total_cmp(&(tau[a] - t_nominal).abs()))
        })
        .expect("grid covers the nominal revival");
    let t_peak = tau[peak];
    let lambda_peak = lambda[peak];

    let (tlo, thi) = (t_peak - 0.5 * period, t_peak + 0.5 * period);
    let lambda_trough = (0..tau.len())
        .filter(|&i| tau[i] >= tlo && tau[i] <= thi)
        .map(|i| lambda[i])
        .fold(f64::INFINITY, f64::min);
    let level = 0.5 * (lambda_peak + lambda_trough);
    let depth_ok = lambda_peak - lambda_trough > 0.05 * lambda_peak;

    let left = (0..peak).rev().take_while(|&i| tau[i] >= tlo).find(|&i| lambda[i] < level);
    let right = (peak + 1..tau.len()).take_while(|&i| tau[i] <= thi).find(|&i| lambda[i] < level);
    let (collapse_width, collapse_resolved) = match (left, right, depth_ok) {
        (Some(l), Some(r), true) => {
            let cross = |inside: usize, outside: usize| {
                let (a, b) = (lambda[inside], lambda[outside]);
                let f = if a != b { (a - level) / (a - b) } else { 0.5 };
                tau[inside] + f * (tau[outside] - tau[inside])
            };
            (0.5 * (cross(r - 1, r) - cross(l + 1, l)), true)
        }
        _ => (period / 8.0, false),
    };

    let start = (t_peak - 2.0 * collapse_width).max(tlo);
    let end = (t_peak + 2.0 * collapse_width).min(thi);
    let i_start = tau.partition_point(|&t| t < start);
    let i_end = tau.partition_point(|&t| t <= end).saturating_sub(1);
    let window = RevivalWindow {
        order,
        t_nominal,
        t_peak,
        lambda_peak,
        lambda_trough,
        collapse_width,
        collapse_resolved,
        start,
        end,
        i_start,
        i_end,
    };
    if i_end < i_start || window.n_points() < MIN_WINDOW_POINTS {
        return Err(FitFailure::new(
            FitFailureKind::WindowTooSmall,
            format!(
                "window [{start:.6e}, {end:.6e}] holds {} points, need {MIN_WINDOW_POINTS}",
                if i_end < i_start { 0 } else { window.n_points() }
            ),
            FitDiagnostics {
                window_start: start,
                window_end: end,
                ..Default::default()
            },
        ));
    }
    Ok(window)
}

/// Separable least-squares problem in scaled time `u = (τ − t_peak)/w`.
struct Problem<'a> {
    u: &'a [f64],
    y: &'a [f64],
    /// Bound on √(a² + b²).
    bound: f64,
}

impl Problem<'_> {
    fn basis(&self, theta: &[f64; 3]) -> (Vec<f64>, Vec<f64>) {
        let [c, om, ldt] = *theta;
        let dt = ldt.exp();
        self.u
            .iter()
            .map(|&u| {
                let x = u - c;
                let e = (-(x / dt).powi(2)).exp();
                let (s, co) = (om * x).sin_cos();
                (e * s, e * co)
            })
            .unzip()
    }

    fn amplitudes(&self, gs: &[f64], gc: &[f64]) -> (f64, f64) {
        let (mut ss, mut sc, mut cc, mut hs, mut hc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((s, c), y) in gs.iter().zip(gc).zip(self.y) {
            ss += s * s;
            sc += s * c;
            cc += c * c;
            hs += s * y;
            hc += c * y;
        }
        let solve = |lam: f64| {
            let (a11, a22) = (ss + lam, cc + lam);
            let det = a11 * a22 - sc * sc;
            if det.abs() <= 1e-300 {
                return (0.0, 0.0);
            }
            ((a22 * hs - sc * hc) / det, (a11 * hc - sc * hs) / det)
        };
        let ridge = 1e-12 * (ss + cc);
        let v = solve(ridge);
        if v.0.hypot(v.1) <= self.bound {
            return v;
        }
        // ‖(G + λI)⁻¹h‖ decreases in λ; ‖h‖/bound is a valid upper end.
        let (mut lo, mut hi) = (ridge, hs.hypot(hc) / self.bound + ridge);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let m = solve(mid);
            if m.0.hypot(m.1) > self.bound {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        solve(hi)
    }

    fn evaluate(&self, theta: &[f64; 3]) -> (Vec<f64>, (f64, f64)) {
        let (gs, gc) = self.basis(theta);
        let (a, b) = self.amplitudes(&gs, &gc);
        let r = self
            .y
            .iter()
            .zip(gs.iter().zip(&gc))
            .map(|(y, (s, c))| y - a * s - b * c)
            .collect();
        (r, (a, b))
    }

}

struct LmOutcome {
    theta: [f64; 3],
    cost: f64,
    iterations: usize,
    converged: bool,
}

pub(super) fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn levenberg_marquardt(problem: &Problem, start: [f64; 3], om_max: f64) -> LmOutcome {
    // centre within the inner half of the window, ΔT within [0.1, 10] collapse widths
    let bounds = [(-1.0, 1.0), (-om_max, om_max), (LOG_DT_MIN, LOG_DT_MAX)];
    let clamp = |t: [f64; 3]| -> [f64; 3] { std::array::from_fn(|j| t[j].clamp(bounds[j].0, bounds[j].1)) };
    let mut theta = clamp(start);
    let (mut r, _) = problem.evaluate(&theta);
    let mut cost = 0.5 * r.iter().map(|x| x * x).sum::<f64>();
    let mut lambda = 1e-3;

    for iter in 1..=MAX_ITERATIONS {
        let mut jac = vec![[0.0; 3]; r.len()];
        for j in 0..3 {
            let h = 1e-6 * theta[j].abs().max(1.0);
            let (mut tp, mut tm) = (theta, theta);
            tp[j] += h;
            tm[j] -= h;
            let (rp, _) = problem.evaluate(&tp);
            let (rm, _) = problem.evaluate(&tm);
            for (row, (p, m)) in jac.iter_mut().zip(rp.iter().zip(&rm)) {
                row[j] = (p - m) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..3 {
                jtr[a] += row[a] * ri;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }

        // parameters held on a bound by the gradient drop out of this step
        let held: [bool; 3] = std::array::from_fn(|j| {
            let (lo, hi) = bounds[j];
            (theta[j] <= lo && jtr[j] > 0.0) || (theta[j] >= hi && jtr[j] < 0.0)
        });
        let mut accepted = None;
        for _ in 0..30 {
            let mut lhs = jtj;
            let mut rhs = [-jtr[0], -jtr[1], -jtr[2]];
            for d in 0..3 {
                lhs[d][d] += lambda * jtj[d][d].max(1e-12);
            }
            for j in (0..3).filter(|&j| held[j]) {
                for k in 0..3 {
                    lhs[j][k] = 0.0;
                    lhs[k][j] = 0.0;
                }
                lhs[j][j] = 1.0;
                rhs[j] = 0.0;
            }
            let Some(step) = solve3(lhs, rhs) else {
                lambda *= 4.0;
                continue;
            };
            let trial = clamp([theta[0] + step[0], theta[1] + step[1], theta[2] + step[2]]);
            let (rt, _) = problem.evaluate(&trial);
            let ct = 0.5 * rt.iter().map(|x| x * x).sum::<f64>();
            if ct.is_finite() && ct < cost {
                accepted = Some((trial, rt, ct));
                lambda = (lambda / 3.0).max(1e-12);
                break;
            }
            lambda *= 4.0;
        }

        let Some((trial, rt, ct)) = accepted else {
            // no descent direction left at working precision
            return LmOutcome {
                theta,
                cost,
                iterations: iter,
                converged: true,
            };
        };
        let rel_drop = (cost - ct) / cost.max(1e-300);
        let step_norm = (0..3).map(|k| (trial[k] - theta[k]).powi(2)).sum::<f64>().sqrt();
        let theta_norm = trial.iter().map(|s| s * s).sum::<f64>().sqrt();
        theta = trial;
        r = rt;
        cost = ct;
        if rel_drop < 1e-12 && step_norm < 1e-9 * (theta_norm + 1e-9) {
            return LmOutcome {
                theta,
                cost,
                iterations: iter,
                converged: true,
            };
        }
    }
    LmOutcome {
        theta,
        cost,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let i = x.partition_point(|&t| t < at);
    if i == 0 {
        return y[0];
    }
    if i >= x.len() {
        return y[x.len() - 1];
    }
    let f = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + f * (y[i] - y[i - 1])
}

/// Locates revival `order` and fits the quadrature inside its window.
pub fn fit_revival(signal: &EchoSignal, order: usize, options: &FitOptions) -> Result<RevivalFit, FitFailure> {
    let trace = phase_trace(signal);
    let window = locate_in_trace(&trace, signal.meta.omega0, order)?;
    let range = window.i_start..=window.i_end;
    let tau = &signal.tau[range.clone()];
    let q: Vec<f64> = signal.s[range.clone()].iter().map(|z| z.im).collect();
    let lambda_max = trace.lambda[range].iter().copied().fold(0.0, f64::max);
    let max_abs_q = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let w = window.collapse_width;

    let mut diagnostics = FitDiagnostics {
        window_start: window.start,
        window_end: window.end,
        n_points: window.n_points(),
        max_abs_q,
        best_cost: f64::NAN,
        iterations: 0,
    };
    if !(max_abs_q > 1e-12 * lambda_max.max(1e-300)) || max_abs_q < 1e-14 {
        return Err(FitFailure::new(
            FitFailureKind::NoOscillation,
            format!("quadrature is flat in the window (max |Q| = {max_abs_q:.3e})"),
            diagnostics,
        ));
    }

    let probe_span = (0.1 * w).max(1.5 * (tau[tau.len() - 1] - tau[0]) / (tau.len() - 1) as f64);
    let phase_rate_measured = trace.slope_at(window.t_peak, probe_span);

    let u: Vec<f64> = tau.iter().map(|t| (t - window.t_peak) / w).collect();
    let span_u = u[u.len() - 1] - u[0];
    let du = span_u / (u.len() - 1) as f64;
    let om_max = PI / du;
    let hint_scaled = options
        .varpi_hint
        .or(phase_rate_measured)
        .map(|h| h.abs() * w)
        .filter(|h| *h > 1e-6 && h.is_finite())
        .unwrap_or(2.0 * PI / span_u);

    let problem = Problem {
        u: &u,
        y: &q,
        bound: lambda_max,
    };
    let mut best: Option<LmOutcome> = None;
    let mut total_iterations = 0;
    for f in SEED_FACTORS {
        let outcome = levenberg_marquardt(&problem, [0.0, (f * hint_scaled).min(0.9 * om_max), 0.0], om_max);
        total_iterations += outcome.iterations;
        if best.as_ref().is_none_or(|b| {
            (outcome.converged && !b.converged) || (outcome.converged == b.converged && outcome.cost < b.cost)
        }) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    diagnostics.best_cost = best.cost;
    diagnostics.iterations = total_iterations;
    if !best.converged || !best.cost.is_finite() {
        return Err(FitFailure::new(
            FitFailureKind::NonConvergence,
            format!("no start converged within {MAX_ITERATIONS} iterations"),
            diagnostics,
        ));
    }

    let [c, om, ldt] = best.theta;
    let (residuals, (a, b)) = problem.evaluate(&best.theta);
    let (gs, gc) = problem.basis(&best.theta);
    let model_peak = gs.iter().zip(&gc).map(|(s, co)| (a * s + b * co).abs()).fold(0.0, f64::max);

    let t_r = window.t_peak + c * w;
    let delta_t = ldt.exp() * w;
    let lambda_at_revival = interpolate(&trace.tau, &trace.lambda, t_r);

    // (a, b) are the sine and cosine amplitudes: C sin(x + φ) = C cos φ sin x + C sin φ cos x.
    let mut varpi = om.abs() / w;
    let mut phase = b.atan2(a);
    if om < 0.0 {
        phase = PI - phase;
    }
    let sign = phase_rate_measured
        .filter(|s| *s != 0.0)
        .or(options.varpi_hint.filter(|h| *h != 0.0))
        .map_or(1.0, f64::signum);
    if sign < 0.0 {
        varpi = -varpi;
        phase = PI - phase;
    }
    let phase = (phase + PI).rem_euclid(2.0 * PI) - PI;

    let contrast = if lambda_at_revival > 0.0 {
        (model_peak / lambda_at_revival).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();

    Ok(RevivalFit {
        window,
        t_r,
        t_r_total: 2.0 * t_r,
        varpi,
        delta_t,
        amplitude: a.hypot(b),
        phase,
        contrast,
        lambda_at_revival,
        phase_rate_measured,
        residual_rms,
        iterations: best.iterations,
    })
}
