//! Per-slot cost: estimation error of the belief plus weighted energy.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Belief;
use crate::scenario::ScenarioConfig;

/// Samples requested from each sensor in one slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(pub Vec<u32>);

impl Action {
    pub fn zeros(n_sensors: usize) -> Self {
        Action(vec![0; n_sensors])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn check_feasible(&self, config: &ScenarioConfig) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InfeasibleAction {
                action: self.0.clone(),
                reason,
            })
        };
        if self.0.len() != config.n_sensors() {
            return fail(format!(
                "expected {} sensor counts, got {}",
                config.n_sensors(),
                self.0.len()
            ));
        }
        let total = self.total();
        if total > config.n_tot {
            return fail(format!("{total} samples exceed n_tot = {}", config.n_tot));
        }
        if total < config.min_samples {
            return fail(format!(
                "{total} samples below min_samples = {}",
                config.min_samples
            ));
        }
        if let Some((_, spec)) = self
            .0
            .iter()
            .zip(&config.sensors)
            .find(|(&n, spec)| n > 0 && !spec.enabled)
        {
            return fail(format!("sensor `{}` is disabled", spec.name));
        }
        Ok(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "]")
    }
}

/// `1 − Σ p_i²`, the expected squared error of the belief used as a soft estimate.
pub fn estimation_error(belief: &Belief) -> f64 {
    estimation_error_slice(belief.probs())
}

pub(crate) fn estimation_error_slice(p: &[f64]) -> f64 {
    1.0 - p.iter().map(|x| x * x).sum::<f64>()
}

pub fn energy_cost(action: &Action, config: &ScenarioConfig) -> Result<f64> {
    action.check_feasible(config)?;
    Ok(energy_cost_unchecked(action, config))
}

pub(crate) fn energy_cost_unchecked(action: &Action, config: &ScenarioConfig) -> f64 {
    action
        .0
        .iter()
        .zip(&config.sensors)
        .map(|(&n, s)| s.cost * f64::from(n))
        .sum()
}

/// `(1 − λ) Δ(p) + λ c(u)`; a cost to be minimised.
pub fn instantaneous_reward(
    belief: &Belief,
    action: &Action,
    lambda: f64,
    config: &ScenarioConfig,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok((1.0 - lambda) * estimation_error(belief) + lambda * energy_cost(action, config)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::tiny;
    use approx::assert_relative_eq;

    fn wban_costs() -> ScenarioConfig {
        let mut c = tiny();
        let mut third = c.sensors[1].clone();
        third.name = "third".into();
        c.sensors.push(third);
        c.sensors[0].cost = 0.58;
        c.sensors[1].cost = 0.776;
        c.sensors[2].cost = 1.0;
        c.n_tot = 6;
        c
    }

    #[test]
    fn delta_values() {
        assert_eq!(estimation_error(&Belief::point(4, 2)), 0.0);
        assert_relative_eq!(estimation_error(&Belief::uniform(4)), 0.75);
        assert_relative_eq!(estimation_error(&Belief::new(vec![0.5, 0.5]).unwrap()), 0.5);
    }

    #[test]
    fn energy_values() {
        let mut c = wban_costs();
        assert_relative_eq!(energy_cost(&Action(vec![1, 0, 0]), &c).unwrap(), 0.58);
        assert_relative_eq!(
            energy_cost(&Action(vec![1, 1, 1]), &c).unwrap(),
            2.356,
            epsilon = 1e-12
        );
        assert!(energy_cost(&Action(vec![0, 0, 0]), &c).is_err());
        c.min_samples = 0;
        assert_eq!(energy_cost(&Action(vec![0, 0, 0]), &c).unwrap(), 0.0);
        assert!(energy_cost(&Action(vec![4, 3, 0]), &c).is_err());
        assert!(energy_cost(&Action(vec![1, 0]), &c).is_err());
    }

    #[test]
    fn disabled_sensor_is_infeasible() {
        let mut c = wban_costs();
        c.sensors[1].enabled = false;
        assert!(energy_cost(&Action(vec![0, 1, 0]), &c).is_err());
        assert!(energy_cost(&Action(vec![2, 0, 1]), &c).is_ok());
    }

    #[test]
    fn reward_mixes() {
        let c = wban_costs();
        let u = Belief::uniform(2);
        let a = Action(vec![1, 0, 0]);
        assert_relative_eq!(instantaneous_reward(&u, &a, 0.0, &c).unwrap(), 0.5);
        assert_relative_eq!(instantaneous_reward(&u, &a, 1.0, &c).unwrap(), 0.58);
        let u4 = Belief::uniform(4);
        let r = 0.5 * estimation_error(&u4) + 0.5 * 0.58;
        assert_relative_eq!(r, 0.665, epsilon = 1e-12);
        assert!(instantaneous_reward(&u, &a, 1.5, &c).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(Action(vec![1, 0, 2]).to_string(), "[1,0,2]");
    }
}
