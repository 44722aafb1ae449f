//! Belief tracking over the hidden states.
//!
//! A slot update predicts through the transition matrix and then folds in one
//! received sample at a time, followed by the channel features of every
//! sampled sensor. Likelihoods are accumulated in log space and normalised at
//! the end of each fold step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::Action;
use crate::scenario::ScenarioConfig;
use crate::stochastics::{feature_pdf, received_pdf, ObservationModel};

/// Probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

const BELIEF_INPUT_TOLERANCE: f64 = 1e-9;

impl Belief {
    /// Validates and renormalises `probs`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(format!("invalid belief {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_INPUT_TOLERANCE {
            return Err(Error::Domain(format!("belief sums to {sum}")));
        }
        Ok(Self::normalized(probs))
    }

    pub(crate) fn normalized(mut probs: Vec<f64>) -> Self {
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        Belief(probs)
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Belief(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, state: usize) -> Self {
        let mut p = vec![0.0; n];
        p[state] = 1.0;
        Belief(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Which parts of an observation enter the likelihood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMask {
    #[default]
    Full,
    MeasurementsOnly,
    ChannelOnly,
}

/// One received sample and the gain estimate it was decoded with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub z: f64,
    pub h_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorObservation {
    pub samples: Vec<Sample>,
    /// Feature values; empty when the sensor was not sampled.
    pub features: Vec<f64>,
}

/// Everything received in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotObservation {
    pub action: Action,
    pub sensors: Vec<SensorObservation>,
}

impl SlotObservation {
    pub fn is_empty(&self) -> bool {
        self.sensors.iter().all(|s| s.samples.is_empty())
    }
}

/// `out(i) = Σ_j T[j][i] p(j)`.
pub fn predict(belief: &Belief, transition: &[Vec<f64>]) -> Belief {
    Belief(predict_slice(belief.probs(), transition))
}

pub(crate) fn predict_slice(p: &[f64], transition: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    for (pj, row) in p.iter().zip(transition) {
        if *pj == 0.0 {
            continue;
        }
        for (o, t) in out.iter_mut().zip(row) {
            *o += pj * t;
        }
    }
    out
}

/// Stationary distribution of a row-stochastic matrix (assumes a single
/// recurrent class).
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    // (Tᵀ − I) π = 0 with the last equation replaced by Σ π = 1.
    let mut a = DMatrix::from_fn(n, n, |i, j| {
        transition[j][i] - if i == j { 1.0 } else { 0.0 }
    });
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .map(|v| v.iter().map(|x| x.max(0.0)).collect::<Vec<_>>())
        .unwrap_or_else(|| power_stationary(transition));
    let s: f64 = pi.iter().sum();
    pi.into_iter().map(|x| x / s).collect()
}

fn power_stationary(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next = predict_slice(&p, transition);
        // Averaging with the previous iterate damps periodic chains.
        p = p.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    p
}

/// Multiplies `prior` by `exp(log_lik)` and renormalises. Returns `None` when
/// every state gets zero mass.
pub(crate) fn posterior_from_log_likelihood(prior: &[f64], log_lik: &[f64]) -> Option<Vec<f64>> {
    let mut max = f64::NEG_INFINITY;
    for (p, l) in prior.iter().zip(log_lik) {
        if *p > 0.0 && *l > max {
            max = *l;
        }
    }
    if !max.is_finite() {
        return None;
    }
    let mut out: Vec<f64> = prior
        .iter()
        .zip(log_lik)
        .map(|(p, l)| if *p > 0.0 { p * (l - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = out.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return None;
    }
    out.iter_mut().for_each(|x| *x /= sum);
    Some(out)
}

fn fold(partial: &Belief, log_lik: &[f64]) -> Result<Belief> {
    posterior_from_log_likelihood(partial.probs(), log_lik)
        .map(Belief)
        .ok_or(Error::DegenerateLikelihood)
}

/// Bayes step for one `(z, ĥ)` sample of `sensor`.
pub fn update_measurement(
    partial: &Belief,
    z: f64,
    h_hat: f64,
    sensor: usize,
    model: &ObservationModel,
    mask: LikelihoodMask,
) -> Result<Belief> {
    let mut ll = vec![0.0; partial.len()];
    model.add_sample_log_likelihood(sensor, z, h_hat, mask, &mut ll);
    fold(partial, &ll)
}

/// Bayes step for the features of `sensor`, computed from `n_s` samples.
pub fn update_features(
    partial: &Belief,
    sensor: usize,
    features: &[f64],
    n_s: u32,
    model: &ObservationModel,
    mask: LikelihoodMask,
) -> Result<Belief> {
    if mask == LikelihoodMask::MeasurementsOnly || features.is_empty() {
        return Ok(partial.clone());
    }
    if n_s == 0 {
        return Err(Error::Domain(
            "features supplied for an unsampled sensor".into(),
        ));
    }
    let mut ll = vec![0.0; partial.len()];
    model.add_feature_log_likelihood(sensor, features, n_s, mask, &mut ll);
    fold(partial, &ll)
}

fn check_shape(obs: &SlotObservation, config: &ScenarioConfig) -> Result<()> {
    if obs.sensors.len() != config.n_sensors() || obs.action.counts().len() != config.n_sensors() {
        return Err(Error::Domain(
            "observation does not match the sensor count".into(),
        ));
    }
    for (s, (o, &n)) in obs.sensors.iter().zip(obs.action.counts()).enumerate() {
        if o.samples.len() != n as usize {
            return Err(Error::Domain(format!(
                "sensor {s}: {} samples for an action requesting {n}",
                o.samples.len()
            )));
        }
    }
    Ok(())
}

/// Predicts through `T`, then folds every sample (sensor order, sample order)
/// and finally each sampled sensor's features.
pub fn slot_update(
    belief: &Belief,
    obs: &SlotObservation,
    model: &ObservationModel,
    mask: LikelihoodMask,
) -> Result<Belief> {
    let config = model.config();
    check_shape(obs, config)?;
    let mut p = predict(belief, &config.transition);
    for (s, o) in obs.sensors.iter().enumerate() {
        for sample in &o.samples {
            p = update_measurement(&p, sample.z, sample.h_hat, s, model, mask)?;
        }
    }
    for (s, o) in obs.sensors.iter().enumerate() {
        let n = obs.action.counts()[s];
        if n > 0 {
            p = update_features(&p, s, &o.features, n, model, mask)?;
        }
    }
    Ok(p)
}

/// Per-state log-likelihood of a whole slot, accumulated in canonical order.
pub(crate) fn slot_log_likelihood(
    obs: &SlotObservation,
    model: &ObservationModel,
    mask: LikelihoodMask,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (s, o) in obs.sensors.iter().enumerate() {
        for sample in &o.samples {
            model.add_sample_log_likelihood(s, sample.z, sample.h_hat, mask, out);
        }
    }
    for (s, o) in obs.sensors.iter().enumerate() {
        model.add_feature_log_likelihood(s, &o.features, obs.action.counts()[s], mask, out);
    }
}

/// Single joint Bayes step with the full slot likelihood formed as one
/// linear-space product. Reference implementation for tests.
pub fn joint_bayes_oracle(
    belief: &Belief,
    obs: &SlotObservation,
    model: &ObservationModel,
    mask: LikelihoodMask,
) -> Result<Belief> {
    let config = model.config();
    check_shape(obs, config)?;
    let prior = predict(belief, &config.transition);
    let n = config.n_states();
    let mut joint = vec![1.0; n];
    for (i, lik) in joint.iter_mut().enumerate() {
        for (s, (spec, o)) in config.sensors.iter().zip(&obs.sensors).enumerate() {
            for sample in &o.samples {
                if mask != LikelihoodMask::ChannelOnly {
                    *lik *= received_pdf(
                        sample.z,
                        i,
                        sample.h_hat,
                        spec,
                        model.design(),
                        config.sigma_ch,
                        config.sigma_noise,
                    )?;
                }
                if mask != LikelihoodMask::MeasurementsOnly {
                    if let Some(d) = model.channel_density(s, i) {
                        *lik *= d.pdf(sample.h_hat);
                    }
                }
            }
            let n_s = obs.action.counts()[s];
            if mask != LikelihoodMask::MeasurementsOnly && n_s > 0 {
                for (f, &c) in spec.features.iter().zip(&o.features) {
                    *lik *= feature_pdf(c, f, i, n_s)?;
                }
            }
        }
    }
    let post: Vec<f64> = prior
        .probs()
        .iter()
        .zip(&joint)
        .map(|(p, l)| p * l)
        .collect();
    let sum: f64 = post.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateLikelihood);
    }
    Ok(Belief(post.into_iter().map(|x| x / sum).collect()))
}

/// Most probable state; the lowest index wins ties.
pub fn map_estimate(belief: &Belief) -> usize {
    let mut best = 0;
    for (i, &p) in belief.probs().iter().enumerate() {
        if p > belief.probs()[best] {
            best = i;
        }
    }
    best
}
