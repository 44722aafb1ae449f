//! Policies that act at any belief, built from solved grid tables.
//!
//! The bounds-based policy (BBP) returns the table action at grid points and,
//! elsewhere, the action of a Freudenthal vertex drawn with probability equal
//! to its barycentric weight.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Belief, LikelihoodMask};
use crate::grid::BeliefGrid;
use crate::reward::Action;
use crate::scenario::ScenarioConfig;
use crate::solver::{lower_bound_slice, PolicyTable, Solution, Solver, SolverOptions};
use crate::stochastics::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Barycentric randomisation over the vertex actions.
    Bbp,
    /// Action of the vertex with the largest barycentric weight.
    GridVertex,
    /// Re-runs the stagewise improvement at the current belief.
    GreedyOnline,
    /// BBP over a table solved with only `sensor` enabled.
    FixedSensor { sensor: usize },
    /// BBP over a table solved (and executed) with a likelihood mask.
    Masked { mask: LikelihoodMask },
}

/// Executable policy. Immutable; the caller supplies the random stream.
#[derive(Clone)]
pub struct Policy {
    kind: PolicyKind,
    grid: BeliefGrid,
    table: PolicyTable,
    mask: LikelihoodMask,
    online: Option<Online>,
}

#[derive(Clone)]
struct Online {
    solver: Arc<Solver>,
    values: Vec<f64>,
    lambda: f64,
}

impl std::fmt::Debug for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Policy")
            .field("kind", &self.kind)
            .field("grid_points", &self.grid.len())
            .field("mask", &self.mask)
            .finish()
    }
}

impl Policy {
    fn from_solution(kind: PolicyKind, solution: &Solution) -> Self {
        Self {
            kind,
            grid: solution.table.grid.clone(),
            table: solution.policy.clone(),
            mask: solution.table.options.mask,
            online: None,
        }
    }

    pub fn bbp(solution: &Solution) -> Self {
        Self::from_solution(PolicyKind::Bbp, solution)
    }

    pub fn grid_vertex(solution: &Solution) -> Self {
        Self::from_solution(PolicyKind::GridVertex, solution)
    }

    /// BBP over a table solved on [`restrict_to_sensor`]'s output.
    pub fn fixed_sensor(sensor: usize, solution: &Solution) -> Self {
        Self::from_solution(PolicyKind::FixedSensor { sensor }, solution)
    }

    /// BBP over a table solved with a mask; the same mask filters at run time.
    pub fn masked(solution: &Solution) -> Self {
        let mask = solution.table.options.mask;
        Self::from_solution(PolicyKind::Masked { mask }, solution)
    }

    /// Stagewise improvement against the stored values, executed online.
    pub fn greedy_online(solver: Arc<Solver>, solution: &Solution) -> Self {
        let mut p = Self::from_solution(PolicyKind::GreedyOnline, solution);
        p.online = Some(Online {
            solver,
            values: solution.table.values.clone(),
            lambda: solution.table.lambda,
        });
        p
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    /// Likelihood mask the belief filter must use while executing this policy.
    pub fn mask(&self) -> LikelihoodMask {
        self.mask
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }

    pub fn grid(&self) -> &BeliefGrid {
        &self.grid
    }

    pub fn action(&self, belief: &Belief, rng: &mut Rng) -> Action {
        match &self.kind {
            PolicyKind::GridVertex => {
                let w = self.grid.barycentric(belief.probs());
                let mut best = w[0];
                for &(i, a) in &w[1..] {
                    if a > best.1 || (a == best.1 && i < best.0) {
                        best = (i, a);
                    }
                }
                self.table.actions[best.0].clone()
            }
            PolicyKind::GreedyOnline => {
                let online = self
                    .online
                    .as_ref()
                    .expect("online policy carries its solver");
                let grid = online.solver.grid();
                online
                    .solver
                    .policy_improvement(belief, online.lambda, |p| {
                        lower_bound_slice(p, grid, &online.values, online.lambda)
                    })
                    .0
            }
            _ => bbp_action(belief, &self.table, &self.grid, rng),
        }
    }
}

/// Grid-point action at grid points; otherwise a vertex action drawn with
/// probability equal to its barycentric weight.
pub fn bbp_action(
    belief: &Belief,
    table: &PolicyTable,
    grid: &BeliefGrid,
    rng: &mut Rng,
) -> Action {
    if let Some(i) = grid.grid_index(belief.probs()) {
        return table.actions[i].clone();
    }
    let w = grid.barycentric(belief.probs());
    let weights: Vec<f64> = w.iter().map(|x| x.1).collect();
    table.actions[w[rng.categorical(&weights)].0].clone()
}

/// Copy of `config` in which only `sensor` may be sampled.
pub fn restrict_to_sensor(config: &ScenarioConfig, sensor: usize) -> Result<ScenarioConfig> {
    if sensor >= config.n_sensors() {
        return Err(Error::Domain(format!("sensor index {sensor} out of range")));
    }
    let mut out = config.clone();
    for (s, spec) in out.sensors.iter_mut().enumerate() {
        spec.enabled = s == sensor;
    }
    Ok(out)
}

/// Solver options that apply `mask` in every belief update.
pub fn masked_variant(options: &SolverOptions, mask: LikelihoodMask) -> SolverOptions {
    SolverOptions {
        mask,
        ..options.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn table(actions: Vec<Vec<u32>>) -> PolicyTable {
        PolicyTable {
            k_values: vec![0.0; actions.len()],
            actions: actions.into_iter().map(Action).collect(),
        }
    }

    #[test]
    fn grid_point_is_deterministic() {
        let g = build_grid(2, 4);
        let t = table((0..5).map(|i| vec![i, 0]).collect());
        let mut rng = Rng::new(0);
        for i in 0..5 {
            for _ in 0..20 {
                assert_eq!(bbp_action(g.point(i), &t, &g, &mut rng), t.actions[i]);
            }
        }
    }

    #[test]
    fn shared_vertex_action_ignores_draw() {
        let g = build_grid(2, 4);
        let t = table(vec![
            vec![1, 0],
            vec![2, 0],
            vec![2, 0],
            vec![3, 0],
            vec![4, 0],
        ]);
        let mut rng = Rng::new(1);
        let p = Belief::new(vec![0.375, 0.625]).unwrap();
        for _ in 0..100 {
            assert_eq!(bbp_action(&p, &t, &g, &mut rng), Action(vec![2, 0]));
        }
    }

    #[test]
    fn mixture_frequencies() {
        let g = build_grid(2, 4);
        let t = table(vec![
            vec![1, 0],
            vec![0, 1],
            vec![1, 1],
            vec![2, 0],
            vec![0, 2],
        ]);
        // 0.25·b1 + 0.75·b2 with b1 = [0.25, 0.75], b2 = [0.5, 0.5].
        let p = Belief::new(vec![0.4375, 0.5625]).unwrap();
        let mut rng = Rng::new(2);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| bbp_action(&p, &t, &g, &mut rng) == t.actions[1])
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.25).abs() < 0.01, "{f}");
    }

    #[test]
    fn restriction_disables_other_sensors() {
        let c = crate::scenario::tests::tiny();
        let r = restrict_to_sensor(&c, 1).unwrap();
        assert!(!r.sensors[0].enabled && r.sensors[1].enabled);
        assert!(restrict_to_sensor(&c, 2).is_err());
        let actions = crate::solver::enumerate_actions(&r);
        assert_eq!(actions.len() as u32, r.n_tot - r.min_samples + 1);
        assert!(actions.iter().all(|a| a.counts()[0] == 0));
    }
}
