//! Cached per-state likelihoods for one scenario and channel design.

use crate::filter::LikelihoodMask;
use crate::scenario::ScenarioConfig;

use super::channel::ChannelEstimateDensity;
use super::{log_gaussian_unchecked, received_variance, ChannelDesign};

/// Observation densities for a scenario, with the channel-estimate tables
/// built once. Shared read-only between threads.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    config: ScenarioConfig,
    design: ChannelDesign,
    channel: Vec<Option<Vec<ChannelEstimateDensity>>>,
}

impl ObservationModel {
    pub fn new(config: &ScenarioConfig, design: ChannelDesign) -> Self {
        let channel = config
            .sensors
            .iter()
            .map(|s| {
                s.channel.as_ref().map(|per_state| {
                    per_state
                        .iter()
                        .map(|&p| ChannelEstimateDensity::new(p, config.sigma_ch))
                        .collect()
                })
            })
            .collect();
        Self {
            config: config.clone(),
            design,
            channel,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn design(&self) -> ChannelDesign {
        self.design
    }

    pub fn n_states(&self) -> usize {
        self.config.n_states()
    }

    /// Density of the gain estimate; `None` for ideal-link sensors.
    pub fn channel_density(&self, sensor: usize, state: usize) -> Option<&ChannelEstimateDensity> {
        self.channel[sensor].as_ref().map(|t| &t[state])
    }

    pub fn received_variance(&self, sensor: usize, state: usize, h_hat: f64) -> f64 {
        let p = self.config.sensors[sensor].measurement[state];
        received_variance(
            h_hat,
            p.mean,
            p.var,
            self.design,
            self.config.sigma_ch,
            self.config.sigma_noise,
        )
    }

    fn log_received(&self, sensor: usize, state: usize, z: f64, h_hat: f64) -> f64 {
        let p = self.config.sensors[sensor].measurement[state];
        if self.channel[sensor].is_none() {
            return log_gaussian_unchecked(z, p.mean, p.var);
        }
        let var = self.received_variance(sensor, state, h_hat);
        if var > 0.0 {
            log_gaussian_unchecked(z, h_hat * p.mean, var)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Adds the per-state log-likelihood of one `(z, ĥ)` sample to `out`.
    pub fn add_sample_log_likelihood(
        &self,
        sensor: usize,
        z: f64,
        h_hat: f64,
        mask: LikelihoodMask,
        out: &mut [f64],
    ) {
        let use_z = mask != LikelihoodMask::ChannelOnly;
        let use_h = mask != LikelihoodMask::MeasurementsOnly;
        for (i, acc) in out.iter_mut().enumerate() {
            if use_z {
                *acc += self.log_received(sensor, i, z, h_hat);
            }
            if use_h {
                if let Some(tables) = &self.channel[sensor] {
                    *acc += tables[i].log_pdf(h_hat);
                }
            }
        }
    }

    /// Adds the per-state log-likelihood of a sensor's feature values to `out`.
    pub fn add_feature_log_likelihood(
        &self,
        sensor: usize,
        features: &[f64],
        n_s: u32,
        mask: LikelihoodMask,
        out: &mut [f64],
    ) {
        if mask == LikelihoodMask::MeasurementsOnly || n_s == 0 {
            return;
        }
        for (spec, &c) in self.config.sensors[sensor].features.iter().zip(features) {
            for (i, acc) in out.iter_mut().enumerate() {
                let p = spec.per_state[i];
                *acc += log_gaussian_unchecked(c, p.mean, spec.variance_law.variance(p.var, n_s));
            }
        }
    }
}
