//! Problem instances: the hidden Markov chain, the sensors that observe it,
//! their wireless links and channel features, and the per-slot sample budget.
//!
//! Scenarios are stored as JSON documents (see `docs/scenario-format.md`).
//! Loading always validates; [`validate`] reports every violated invariant as
//! data so that front ends can list them all at once.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version written into every scenario document.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Tolerance on transition-matrix row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

fn default_min_samples() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// Full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Free-form provenance note carried along with the document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub states: Vec<String>,
    /// Row-stochastic matrix; `transition[j][i]` is P(next = i | current = j).
    pub transition: Vec<Vec<f64>>,
    pub sensors: Vec<SensorSpec>,
    /// Maximum number of samples drawn in one slot.
    pub n_tot: u32,
    /// Standard deviation of the channel-estimation error.
    pub sigma_ch: f64,
    /// Standard deviation of the receiver noise.
    pub sigma_noise: f64,
    /// Minimum number of samples drawn in one slot.
    #[serde(default = "default_min_samples")]
    pub min_samples: u32,
}

/// Mean and variance of a Gaussian law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub mean: f64,
    pub var: f64,
}

/// Shape/scale parameters of a Gamma law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub name: String,
    /// Energy spent receiving one sample.
    pub cost: f64,
    /// Per-state measurement law.
    pub measurement: Vec<GaussianParams>,
    /// Per-state law of the true channel gain; `None` means an ideal link.
    #[serde(default)]
    pub channel: Option<Vec<GammaParams>>,
    #[serde(default)]
    pub features: Vec<FeatureSpec>,
    /// Disabled sensors are never allocated samples.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

impl SensorSpec {
    pub fn has_channel(&self) -> bool {
        self.channel.is_some()
    }
}

/// How a feature's variance shrinks with the number of samples it is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceLaw {
    /// Variance is the base variance divided by the sample count.
    #[default]
    InverseSamples,
}

impl VarianceLaw {
    pub fn variance(self, base: f64, n_samples: u32) -> f64 {
        match self {
            VarianceLaw::InverseSamples => base / f64::from(n_samples),
        }
    }
}

/// A channel feature extracted from the slot's gain estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    /// Per-state mean and base variance.
    pub per_state: Vec<GaussianParams>,
    #[serde(default)]
    pub variance_law: VarianceLaw,
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ScenarioConfig {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn sensor_index(&self, name: &str) -> Option<usize> {
        self.sensors.iter().position(|s| s.name == name)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let violations = validate(&config);
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Reads, parses and validates a scenario document.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    ScenarioConfig::from_json_str(&text)
}

fn check_gaussians(
    out: &mut Vec<Violation>,
    field: &str,
    params: &[GaussianParams],
    states: &[String],
    n: usize,
) {
    if params.len() != n {
        out.push(Violation::new(
            field,
            format!("expected {n} per-state entries, found {}", params.len()),
        ));
        return;
    }
    for (i, p) in params.iter().enumerate() {
        let state = states.get(i).map(String::as_str).unwrap_or("?");
        if !p.mean.is_finite() {
            out.push(Violation::new(
                field,
                format!("mean for state `{state}` is not finite"),
            ));
        }
        if !(p.var.is_finite() && p.var > 0.0) {
            out.push(Violation::new(
                field,
                format!(
                    "variance for state `{state}` must be positive, got {}",
                    p.var
                ),
            ));
        }
    }
}

/// Lists every violated invariant; empty when the configuration is valid.
pub fn validate(config: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = config.n_states();

    if config.schema_version != SCENARIO_SCHEMA_VERSION {
        out.push(Violation::new(
            "schema_version",
            format!(
                "unsupported version {} (expected {SCENARIO_SCHEMA_VERSION})",
                config.schema_version
            ),
        ));
    }
    if n < 2 {
        out.push(Violation::new("states", "at least two states are required"));
    }
    for (i, a) in config.states.iter().enumerate() {
        if config.states[..i].contains(a) {
            out.push(Violation::new("states", format!("duplicate state `{a}`")));
        }
    }

    if config.transition.len() != n {
        out.push(Violation::new(
            "transition",
            format!("expected {n} rows, found {}", config.transition.len()),
        ));
    } else {
        for (j, row) in config.transition.iter().enumerate() {
            if row.len() != n {
                out.push(Violation::new(
                    "transition",
                    format!("row {j} has {} entries, expected {n}", row.len()),
                ));
                continue;
            }
            if row.iter().any(|&t| !t.is_finite() || t < 0.0) {
                out.push(Violation::new(
                    "transition",
                    format!("row {j} has a negative or non-finite entry"),
                ));
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                out.push(Violation::new(
                    "transition",
                    format!("row {j} sums to {sum}, expected 1"),
                ));
            }
        }
    }

    if config.sensors.is_empty() {
        out.push(Violation::new("sensors", "at least one sensor is required"));
    } else if !config.sensors.iter().any(|s| s.enabled) {
        out.push(Violation::new("sensors", "every sensor is disabled"));
    }
    for (s, sensor) in config.sensors.iter().enumerate() {
        let prefix = format!("sensors[{s}]({})", sensor.name);
        if config.sensors[..s].iter().any(|o| o.name == sensor.name) {
            out.push(Violation::new(
                format!("{prefix}.name"),
                "duplicate sensor name",
            ));
        }
        if !(sensor.cost.is_finite() && sensor.cost >= 0.0) {
            out.push(Violation::new(
                format!("{prefix}.cost"),
                format!("cost must be nonnegative, got {}", sensor.cost),
            ));
        }
        check_gaussians(
            &mut out,
            &format!("{prefix}.measurement"),
            &sensor.measurement,
            &config.states,
            n,
        );
        if let Some(channel) = &sensor.channel {
            let field = format!("{prefix}.channel");
            if channel.len() != n {
                out.push(Violation::new(
                    &field,
                    format!("expected {n} per-state entries, found {}", channel.len()),
                ));
            } else {
                for (i, g) in channel.iter().enumerate() {
                    let ok = |x: f64| x.is_finite() && x > 0.0;
                    if !ok(g.shape) || !ok(g.scale) {
                        out.push(Violation::new(
                            &field,
                            format!(
                                "Gamma parameters for state `{}` must be positive",
                                config.states[i]
                            ),
                        ));
                    }
                }
            }
        }
        for (f, feature) in sensor.features.iter().enumerate() {
            check_gaussians(
                &mut out,
                &format!("{prefix}.features[{f}]({}).per_state", feature.name),
                &feature.per_state,
                &config.states,
                n,
            );
        }
    }

    if config.n_tot < config.min_samples {
        out.push(Violation::new(
            "n_tot",
            format!(
                "n_tot ({}) is below min_samples ({})",
                config.n_tot, config.min_samples
            ),
        ));
    } else if config.n_tot == 0 {
        out.push(Violation::new("n_tot", "n_tot must be positive"));
    }
    if !(config.sigma_ch.is_finite() && config.sigma_ch >= 0.0) {
        out.push(Violation::new("sigma_ch", "must be a nonnegative number"));
    }
    if !(config.sigma_noise.is_finite() && config.sigma_noise >= 0.0) {
        out.push(Violation::new(
            "sigma_noise",
            "must be a nonnegative number",
        ));
    }
    out
}
