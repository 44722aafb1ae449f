//! Probability kernels for measurements, channel gains, channel estimates and
//! features, together with the observation samplers and the seeded RNG.

mod channel;
mod model;
mod rng;
mod sampling;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scenario::{FeatureSpec, SensorSpec};

pub use channel::{channel_estimate_pdf, ChannelEstimateDensity, CHANNEL_GRID_POINTS};
pub use model::ObservationModel;
pub use rng::Rng;
pub use sampling::{sample_model_observation, sample_slot_observations};

/// How the received-signal variance accounts for channel-estimation error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelDesign {
    /// Treats the estimate as the true gain.
    NonRobust,
    /// Adds the `m² σ_ch²` term coming from the estimation error.
    #[default]
    Intermediate,
}

pub(crate) fn log_gaussian_unchecked(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI * var).ln() + d * d / var)
}

/// Normal density with the given mean and variance.
pub fn gaussian_pdf(x: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {var}"
        )));
    }
    Ok(log_gaussian_unchecked(x, mean, var).exp())
}

pub(crate) fn log_gamma_unchecked(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
}

/// Gamma density (shape/scale parametrisation); zero for `x <= 0`.
pub fn gamma_pdf(x: f64, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::Domain(format!(
            "Gamma parameters must be positive, got shape {shape}, scale {scale}"
        )));
    }
    Ok(log_gamma_unchecked(x, shape, scale).exp())
}

/// Variance of the received sample `z` given the estimate `h_hat`.
pub fn received_variance(
    h_hat: f64,
    mean: f64,
    var: f64,
    design: ChannelDesign,
    sigma_ch: f64,
    sigma_noise: f64,
) -> f64 {
    let base = h_hat * h_hat * var + sigma_noise * sigma_noise;
    match design {
        ChannelDesign::NonRobust => base,
        ChannelDesign::Intermediate => base + mean * mean * sigma_ch * sigma_ch,
    }
}

/// Density of a received sample from `sensor` in `state` given the gain estimate.
/// Ideal-link sensors ignore `h_hat` and the noise terms.
pub fn received_pdf(
    z: f64,
    state: usize,
    h_hat: f64,
    sensor: &SensorSpec,
    design: ChannelDesign,
    sigma_ch: f64,
    sigma_noise: f64,
) -> Result<f64> {
    let p = sensor
        .measurement
        .get(state)
        .ok_or_else(|| Error::Domain(format!("state index {state} out of range")))?;
    if !sensor.has_channel() {
        return gaussian_pdf(z, p.mean, p.var);
    }
    let var = received_variance(h_hat, p.mean, p.var, design, sigma_ch, sigma_noise);
    if !(var > 0.0) {
        return Err(Error::Domain(format!(
            "received variance is {var} for state {state} at h_hat {h_hat}"
        )));
    }
    gaussian_pdf(z, h_hat * p.mean, var)
}

/// Density of a feature computed from `n_s` samples.
pub fn feature_pdf(c: f64, feature: &FeatureSpec, state: usize, n_s: u32) -> Result<f64> {
    if n_s < 1 {
        return Err(Error::Domain("feature needs at least one sample".into()));
    }
    let p = feature
        .per_state
        .get(state)
        .ok_or_else(|| Error::Domain(format!("state index {state} out of range")))?;
    gaussian_pdf(c, p.mean, feature.variance_law.variance(p.var, n_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{GaussianParams, VarianceLaw};
    use approx::assert_relative_eq;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn gaussian_values() {
        assert_relative_eq!(
            gaussian_pdf(0.0, 0.0, 1.0).unwrap(),
            0.3989422804014327,
            epsilon = 1e-12
        );
        for v in [0.01, 0.5, 3.0] {
            assert_relative_eq!(
                gaussian_pdf(2.0, 2.0, v).unwrap(),
                1.0 / (2.0 * PI * v).sqrt(),
                epsilon = 1e-12
            );
        }
        assert!(gaussian_pdf(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_integrates_to_one() {
        for (m, v) in [(0.0, 1.0), (3.0, 0.04), (-1.0, 7.0)] {
            let s = f64::sqrt(v);
            let i = trapezoid(
                |x| gaussian_pdf(x, m, v).unwrap(),
                m - 10.0 * s,
                m + 10.0 * s,
                20_000,
            );
            assert!((i - 1.0).abs() < 1e-8, "{i}");
        }
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(
            gamma_pdf(1.0, 1.0, 1.0).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_eq!(gamma_pdf(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_eq!(gamma_pdf(-1.0, 3.0, 2.0).unwrap(), 0.0);
        assert!(gamma_pdf(1.0, 0.0, 1.0).is_err());
        assert!(gamma_pdf(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_mode_by_grid_search() {
        for (k, th) in [(2.0, 1.0), (4.0, 0.25), (9.5, 0.3)] {
            let step = 1e-4;
            let (mut best, mut arg) = (0.0, 0.0);
            for i in 1..200_000 {
                let x = i as f64 * step;
                let f = gamma_pdf(x, k, th).unwrap();
                if f > best {
                    best = f;
                    arg = x;
                }
            }
            assert!((arg - (k - 1.0) * th).abs() <= step, "{arg}");
        }
    }

    fn radio() -> SensorSpec {
        SensorSpec {
            name: "r".into(),
            cost: 1.0,
            measurement: vec![GaussianParams {
                mean: 2.0,
                var: 0.25,
            }],
            channel: Some(vec![crate::scenario::GammaParams {
                shape: 4.0,
                scale: 0.25,
            }]),
            features: vec![],
            enabled: true,
        }
    }

    #[test]
    fn received_pdf_designs() {
        let s = radio();
        let inter = received_pdf(2.0, 0, 1.0, &s, ChannelDesign::Intermediate, 0.05, 0.05).unwrap();
        assert_relative_eq!(inter, 1.0 / (2.0 * PI * 0.2625).sqrt(), epsilon = 1e-12);
        let nr = received_pdf(2.0, 0, 1.0, &s, ChannelDesign::NonRobust, 0.05, 0.05).unwrap();
        assert_relative_eq!(nr, 1.0 / (2.0 * PI * 0.2525).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn received_pdf_ideal_link_ignores_estimate() {
        let mut s = radio();
        s.channel = None;
        for h in [-0.3, 0.0, 1.0, 4.0] {
            assert_eq!(
                received_pdf(1.7, 0, h, &s, ChannelDesign::Intermediate, 0.05, 0.05).unwrap(),
                gaussian_pdf(1.7, 2.0, 0.25).unwrap()
            );
        }
    }

    #[test]
    fn intermediate_variance_dominates() {
        for (m, sc) in [(2.0, 0.05), (0.0, 0.05), (2.0, 0.0), (-1.0, 0.3)] {
            let a = received_variance(0.7, m, 0.3, ChannelDesign::Intermediate, sc, 0.1);
            let b = received_variance(0.7, m, 0.3, ChannelDesign::NonRobust, sc, 0.1);
            assert!(a >= b);
            assert_eq!(a == b, m * sc == 0.0);
        }
    }

    #[test]
    fn feature_scaling() {
        let f = FeatureSpec {
            name: "f".into(),
            per_state: vec![GaussianParams {
                mean: 0.5,
                var: 0.2,
            }],
            variance_law: VarianceLaw::InverseSamples,
        };
        let p1 = feature_pdf(0.5, &f, 0, 1).unwrap();
        let p4 = feature_pdf(0.5, &f, 0, 4).unwrap();
        assert_relative_eq!(p1, gaussian_pdf(0.5, 0.5, 0.2).unwrap(), epsilon = 1e-14);
        assert_relative_eq!(p4, 2.0 * p1, epsilon = 1e-12);
        assert!(feature_pdf(0.5, &f, 0, 0).is_err());
    }
}
