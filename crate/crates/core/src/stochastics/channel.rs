//! Density of the channel-gain estimate `ĥ = h − w_ch`, where `h` is Gamma
//! distributed and `w_ch ~ N(0, σ_ch²)`.
//!
//! There is no closed form for the Gamma/Gaussian convolution, so the density
//! is tabulated once on a uniform grid and interpolated with a four-point
//! cubic. Queries outside the table (or where the cubic undershoots in a far
//! tail) fall back to evaluating the convolution integral directly.

use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scenario::{GammaParams, SensorSpec};

use super::gamma_pdf;

pub const CHANNEL_GRID_POINTS: usize = 2048;

/// Trapezoid intervals per convolution integral (twice as many Simpson
/// intervals near the origin).
const CONV_INTERVALS: usize = 64;
/// Half-width of the convolution window, in units of σ_ch.
const CONV_HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct ChannelEstimateDensity {
    shape: f64,
    scale: f64,
    sigma: f64,
    log_norm: f64,
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl ChannelEstimateDensity {
    pub fn new(params: GammaParams, sigma_ch: f64) -> Self {
        Self::with_resolution(params, sigma_ch, CHANNEL_GRID_POINTS, CONV_INTERVALS)
    }

    /// Table with a custom node count and convolution resolution.
    pub fn with_resolution(
        params: GammaParams,
        sigma_ch: f64,
        nodes: usize,
        intervals: usize,
    ) -> Self {
        let GammaParams { shape, scale } = params;
        let log_norm = -ln_gamma(shape) - shape * scale.ln();
        let mut d = Self {
            shape,
            scale,
            sigma: sigma_ch,
            log_norm,
            lo: 0.0,
            step: 0.0,
            values: Vec::new(),
        };
        if sigma_ch == 0.0 {
            return d;
        }
        let q = Gamma::new(shape, 1.0 / scale)
            .expect("validated Gamma parameters")
            .inverse_cdf(0.9999);
        d.lo = -6.0 * sigma_ch;
        let hi = q + 6.0 * sigma_ch;
        d.step = (hi - d.lo) / (nodes - 1) as f64;
        d.values = (0..nodes)
            .map(|i| d.convolve(d.lo + i as f64 * d.step, intervals))
            .collect();
        d
    }

    fn gamma(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        ((self.shape - 1.0) * h.ln() - h / self.scale + self.log_norm).exp()
    }

    /// `∫ gamma(h) φ_σ(h − ĥ) dh` over `ĥ ± 8σ`.
    ///
    /// Away from the origin the integrand is smooth and decays at both ends
    /// of the window, where the trapezoidal rule converges geometrically.
    /// Windows that reach the origin use Simpson in a power-law variable
    /// that removes the `h^(k−1)` behaviour there.
    fn convolve(&self, h_hat: f64, intervals: usize) -> f64 {
        let s = self.sigma;
        let a = h_hat - CONV_HALF_WIDTH * s;
        let b = h_hat + CONV_HALF_WIDTH * s;
        if b <= 0.0 {
            return 0.0;
        }
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        let log_f = |x: f64| {
            let d = (x - h_hat) / s;
            (self.shape - 1.0) * x.ln() - x / self.scale + self.log_norm - 0.5 * d * d
        };
        if a <= 0.0 {
            // With x = v^m and m·k = 2·ceil(k) the Jacobian times x^(k−1)
            // is an odd integer power of v.
            let m = 2.0 * self.shape.ceil() / self.shape;
            let n = 2 * intervals;
            let top = b.powf(1.0 / m);
            let k = self.shape;
            let g = |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let ln_v = v.ln();
                let x = (m * ln_v).exp();
                let d = (x - h_hat) / s;
                let log_g = (m * k - 1.0) * ln_v - x / self.scale + self.log_norm - 0.5 * d * d;
                m * log_g.exp()
            };
            return simpson(g, 0.0, top, n) * norm;
        }
        let h = (b - a) / intervals as f64;
        let mut acc = 0.5 * (log_f(a).exp() + log_f(b).exp());
        for i in 1..intervals {
            acc += log_f(a + i as f64 * h).exp();
        }
        acc * h * norm
    }

    /// Direct evaluation of the convolution integral (slow; reference path).
    pub fn direct(&self, h_hat: f64, intervals: usize) -> f64 {
        if self.sigma == 0.0 {
            return self.gamma(h_hat);
        }
        self.convolve(h_hat, intervals)
    }

    pub fn pdf(&self, h_hat: f64) -> f64 {
        if self.sigma == 0.0 {
            return self.gamma(h_hat);
        }
        let t = (h_hat - self.lo) / self.step;
        let last = self.values.len() - 1;
        if !(t >= 1.0 && t <= (last - 1) as f64) {
            return self.convolve(h_hat, CONV_INTERVALS);
        }
        let i = (t.floor() as usize).min(last - 2);
        let x = t - i as f64;
        let (p0, p1, p2, p3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // Cubic Lagrange through nodes at -1, 0, 1, 2.
        let v = -p0 * x * (x - 1.0) * (x - 2.0) / 6.0
            + p1 * (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0
            - p2 * (x + 1.0) * x * (x - 2.0) / 2.0
            + p3 * (x + 1.0) * x * (x - 1.0) / 6.0;
        if v > 0.0 {
            v
        } else {
            self.convolve(h_hat, CONV_INTERVALS)
        }
    }

    pub fn log_pdf(&self, h_hat: f64) -> f64 {
        self.pdf(h_hat).ln()
    }

    /// Interval outside which the density carries negligible mass.
    pub fn support(&self) -> (f64, f64) {
        let q = Gamma::new(self.shape, 1.0 / self.scale)
            .expect("validated Gamma parameters")
            .inverse_cdf(1.0 - 1e-12);
        (-10.0 * self.sigma, q + 10.0 * self.sigma)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Density of the gain estimate of `sensor` in `state`.
///
/// Builds a fresh table on every call; long-running code should keep a
/// [`ChannelEstimateDensity`] (or an [`super::ObservationModel`]) instead.
pub fn channel_estimate_pdf(
    h_hat: f64,
    state: usize,
    sensor: &SensorSpec,
    sigma_ch: f64,
) -> Result<f64> {
    let channel = sensor
        .channel
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("sensor `{}` has an ideal link", sensor.name)))?;
    let params = *channel
        .get(state)
        .ok_or_else(|| Error::Domain(format!("state index {state} out of range")))?;
    gamma_pdf(1.0, params.shape, params.scale)?;
    if sigma_ch < 0.0 {
        return Err(Error::Domain("sigma_ch must be nonnegative".into()));
    }
    Ok(ChannelEstimateDensity::new(params, sigma_ch).pdf(h_hat))
}
