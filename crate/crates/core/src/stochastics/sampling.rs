//! Observation samplers.
//!
//! [`sample_slot_observations`] follows the physical signal chain
//! (`z = h·y + w_noise`, `ĥ = h − w_ch`) and drives the simulator.
//! [`sample_model_observation`] draws from the likelihood model the filter
//! uses (`ĥ` from its convolution law, `z | ĥ` Gaussian) and gives every
//! sample its own keyed substream, so that actions sharing a prefix of samples
//! share the draws. The solver relies on the latter.

use crate::error::Result;
use crate::filter::{Sample, SensorObservation, SlotObservation};
use crate::reward::Action;
use crate::scenario::ScenarioConfig;

use super::{ObservationModel, Rng};

/// Label offset separating feature substreams from sample substreams.
const FEATURE_LABEL: u64 = 1 << 32;

/// One slot of physical observations for `action` while the process is in `state`.
///
/// Draw order: sensors in config order, samples in index order, then every
/// sensor's features.
pub fn sample_slot_observations(
    rng: &mut Rng,
    state: usize,
    action: &Action,
    config: &ScenarioConfig,
) -> Result<SlotObservation> {
    action.check_feasible(config)?;
    let mut sensors = Vec::with_capacity(config.n_sensors());
    for (spec, &n) in config.sensors.iter().zip(action.counts()) {
        let m = spec.measurement[state];
        let mut samples = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let y = rng.normal(m.mean, m.var.sqrt());
            let sample = match &spec.channel {
                None => Sample { z: y, h_hat: 1.0 },
                Some(per_state) => {
                    let g = per_state[state];
                    let h = rng.gamma(g.shape, g.scale);
                    let w_ch = rng.normal(0.0, config.sigma_ch);
                    let w_noise = rng.normal(0.0, config.sigma_noise);
                    Sample {
                        z: h * y + w_noise,
                        h_hat: h - w_ch,
                    }
                }
            };
            samples.push(sample);
        }
        sensors.push(SensorObservation {
            samples,
            features: Vec::new(),
        });
    }
    for ((spec, obs), &n) in config.sensors.iter().zip(&mut sensors).zip(action.counts()) {
        if n == 0 {
            continue;
        }
        obs.features = spec
            .features
            .iter()
            .map(|f| {
                let p = f.per_state[state];
                rng.normal(p.mean, f.variance_law.variance(p.var, n).sqrt())
            })
            .collect();
    }
    Ok(SlotObservation {
        action: action.clone(),
        sensors,
    })
}

/// Draws sample `index` of `sensor` from the model law, using the substream
/// `base.substream(&[sensor, index])`.
pub(crate) fn model_sample(
    base: &Rng,
    model: &ObservationModel,
    state: usize,
    sensor: usize,
    index: u32,
) -> Sample {
    let spec = &model.config().sensors[sensor];
    let mut rng = base.substream(&[sensor as u64, u64::from(index)]);
    let m = spec.measurement[state];
    match &spec.channel {
        None => Sample {
            z: m.mean + m.var.sqrt() * rng.standard_normal(),
            h_hat: 1.0,
        },
        Some(per_state) => {
            let g = per_state[state];
            let h = rng.gamma(g.shape, g.scale);
            let w = rng.normal(0.0, model.config().sigma_ch);
            let h_hat = h - w;
            let var = model.received_variance(sensor, state, h_hat).max(0.0);
            Sample {
                z: h_hat * m.mean + var.sqrt() * rng.standard_normal(),
                h_hat,
            }
        }
    }
}

/// Standard-normal driver of feature `feature` of `sensor`; scaled by the
/// caller so that all sample counts share it.
pub(crate) fn model_feature_driver(base: &Rng, sensor: usize, feature: usize) -> f64 {
    base.substream(&[FEATURE_LABEL + sensor as u64, feature as u64])
        .standard_normal()
}

/// One slot drawn from the filter's own likelihood model.
pub fn sample_model_observation(
    base: &Rng,
    model: &ObservationModel,
    state: usize,
    action: &Action,
) -> Result<SlotObservation> {
    let config = model.config();
    action.check_feasible(config)?;
    let sensors = config
        .sensors
        .iter()
        .zip(action.counts())
        .enumerate()
        .map(|(s, (spec, &n))| {
            let samples = (0..n)
                .map(|u| model_sample(base, model, state, s, u))
                .collect();
            let features = if n == 0 {
                Vec::new()
            } else {
                spec.features
                    .iter()
                    .enumerate()
                    .map(|(f, fs)| {
                        let p = fs.per_state[state];
                        p.mean
                            + fs.variance_law.variance(p.var, n).sqrt()
                                * model_feature_driver(base, s, f)
                    })
                    .collect()
            };
            SensorObservation { samples, features }
        })
        .collect();
    Ok(SlotObservation {
        action: action.clone(),
        sensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::tiny;

    #[test]
    fn empty_action_gives_empty_observation() {
        let mut c = tiny();
        c.min_samples = 0;
        let mut rng = Rng::new(1);
        let obs = sample_slot_observations(&mut rng, 0, &Action(vec![0, 0]), &c).unwrap();
        assert!(obs
            .sensors
            .iter()
            .all(|s| s.samples.is_empty() && s.features.is_empty()));
    }

    #[test]
    fn noiseless_unit_gain_passes_measurement_through() {
        let mut c = tiny();
        c.sigma_ch = 0.0;
        c.sigma_noise = 0.0;
        let mut rng = Rng::new(5);
        let obs = sample_slot_observations(&mut rng, 1, &Action(vec![2, 0]), &c).unwrap();
        let mut replay = Rng::new(5);
        for s in &obs.sensors[0].samples {
            assert_eq!(s.z, replay.normal(1.0, 1.0));
            assert_eq!(s.h_hat, 1.0);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let c = tiny();
        let a = Action(vec![1, 1]);
        let run = || {
            let mut rng = Rng::new(42);
            serde_json::to_string(&sample_slot_observations(&mut rng, 1, &a, &c).unwrap()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn infeasible_action_rejected() {
        let c = tiny();
        let mut rng = Rng::new(0);
        assert!(sample_slot_observations(&mut rng, 0, &Action(vec![2, 1]), &c).is_err());
    }

    #[test]
    fn model_samples_share_prefixes_across_actions() {
        let c = tiny();
        let model = ObservationModel::new(&c, Default::default());
        let base = Rng::new(9).substream(&[0, 3]);
        let a = sample_model_observation(&base, &model, 1, &Action(vec![0, 1])).unwrap();
        let b = sample_model_observation(&base, &model, 1, &Action(vec![0, 2])).unwrap();
        assert_eq!(a.sensors[1].samples[0], b.sensors[1].samples[0]);
    }
}
