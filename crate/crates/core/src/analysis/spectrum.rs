use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::echo::EchoSignal;

/// Relative spacing deviation tolerated before a grid counts as non-uniform.
pub const UNIFORM_GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n < 2 => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    I,
    Q,
}

/// Two-sided spectrum of both quadratures, frequencies ascending.
///
/// Amplitudes are scaled as `X(f) = dτ Σ_n w_n x_n e^{−2πi f τ_n}` so that
/// `Σ |X|² df = Σ |w x|² dτ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Cycles per second of the τ axis.
    pub frequency_hz: Vec<f64>,
    pub i: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub window: Window,
    pub dtau: f64,
}

impl Spectrum {
    pub fn channel(&self, channel: Channel) -> &[Complex64] {
        match channel {
            Channel::I => &self.i,
            Channel::Q => &self.q,
        }
    }

    pub fn df(&self) -> f64 {
        1.0 / (self.frequency_hz.len() as f64 * self.dtau)
    }

    /// Index of the bin nearest `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        crate::echo::nearest_index(&self.frequency_hz, freq_hz).unwrap_or(0)
    }

    /// Coefficient at the bin nearest `freq_hz`.
    pub fn at(&self, channel: Channel, freq_hz: f64) -> Complex64 {
        self.channel(channel)[self.bin_of(freq_hz)]
    }

    /// Largest-modulus bin with `lo ≤ f ≤ hi`.
    pub fn peak_in(&self, channel: Channel, lo_hz: f64, hi_hz: f64) -> Option<(f64, Complex64)> {
        let data = self.channel(channel);
        self.frequency_hz
            .iter()
            .zip(data)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(f, z)| (*f, *z))
    }

    /// Σ |X|² df for one channel.
    pub fn energy(&self, channel: Channel) -> f64 {
        self.channel(channel).iter().map(|z| z.norm_sqr()).sum::<f64>() * self.df()
    }
}

/// Windowed DFT of the I and Q channels. The grid must be uniform.
pub fn spectrum(signal: &EchoSignal, window: Window) -> Result<Spectrum, AnalysisError> {
    let n = signal.len();
    if n < 2 {
        return Err(AnalysisError::TooFewPoints { needed: 2, got: n });
    }
    let dev = signal.grid_nonuniformity().unwrap_or(0.0);
    if dev > UNIFORM_GRID_TOL {
        return Err(AnalysisError::NonUniformGrid(dev));
    }
    let dtau = (signal.tau[n - 1] - signal.tau[0]) / (n - 1) as f64;
    let w = window.weights(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let transform = |values: Vec<f64>| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values
            .iter()
            .zip(&w)
            .map(|(x, wk)| Complex64::new(x * wk, 0.0))
            .collect();
        fft.process(&mut buf);
        // ascending frequency order: negative half first
        let half = n.div_ceil(2);
        let mut out = Vec::with_capacity(n);
        out.extend(buf[half..].iter().map(|z| z * dtau));
        out.extend(buf[..half].iter().map(|z| z * dtau));
        out
    };

    let i = transform(signal.in_phase());
    let q = transform(signal.quadrature());
    let negatives = (n - n.div_ceil(2)) as i64;
    let df = 1.0 / (n as f64 * dtau);
    let frequency_hz = (0..n as i64).map(|k| (k - negatives) as f64 * df).collect();

    Ok(Spectrum {
        frequency_hz,
        i,
        q,
        window,
        dtau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::{uniform_grid, SignalMeta};

    fn signal_from(tau: Vec<f64>, f: impl Fn(f64) -> Complex64) -> EchoSignal {
        let s = tau.iter().map(|t| f(*t)).collect();
        EchoSignal {
            tau,
            s,
            meta: SignalMeta::default(),
        }
    }

    #[test]
    fn frequencies_ascend_and_include_zero() {
        for n in [8usize, 9] {
            let sig = signal_from(uniform_grid(0.0, (n - 1) as f64, n), |_| Complex64::new(1.0, 0.0));
            let sp = spectrum(&sig, Window::Rectangular).unwrap();
            assert!(sp.frequency_hz.windows(2).all(|w| w[1] > w[0]));
            assert!(sp.frequency_hz.contains(&0.0));
            let dc = sp.at(Channel::I, 0.0);
            assert!((dc.re - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_peak_lands_on_its_bin() {
        let f0 = 13_000.0;
        let sig = signal_from(uniform_grid(0.0, 1e-3, 1000), |t| {
            Complex64::new((2.0 * std::f64::consts::PI * f0 * t).cos(), 0.0)
        });
        let sp = spectrum(&sig, Window::Hann).unwrap();
        let (f, _) = sp.peak_in(Channel::I, 1.0, 1e6).unwrap();
        assert!((f - f0).abs() <= sp.df());
    }

    #[test]
    fn parseval_holds_for_both_windows() {
        let tau = uniform_grid(0.0, 2e-4, 777);
        let sig = signal_from(tau, |t| Complex64::new((3e4 * t).sin() + 0.2, (9e4 * t).cos() * (-t * 1e4).exp()));
        for window in [Window::Rectangular, Window::Hann] {
            let sp = spectrum(&sig, window).unwrap();
            let w = window.weights(sig.len());
            for (channel, values) in [(Channel::I, sig.in_phase()), (Channel::Q, sig.quadrature())] {
                let time_energy: f64 = values.iter().zip(&w).map(|(x, wk)| (x * wk).powi(2)).sum::<f64>() * sp.dtau;
                let freq_energy = sp.energy(channel);
                assert!(((time_energy - freq_energy) / time_energy).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let sig = signal_from(vec![0.0, 1.0, 2.5, 3.0], |_| Complex64::new(1.0, 0.0));
        assert!(matches!(spectrum(&sig, Window::Hann), Err(AnalysisError::NonUniformGrid(_))));
    }
}
