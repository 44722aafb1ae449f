//! Value iteration on the belief grid.
//!
//! Off-grid continuation values use the concavity lower bound
//! `J(p) ≥ (1−λ)Δ(p) + Σ α_i (J(b_i) − (1−λ)Δ(b_i))`, which turns the belief
//! MDP into a finite MDP over grid points whose transition weights are the
//! aggregated barycentric weights of the posteriors. Those weights depend only
//! on the scenario, the grid and the quadrature, so a [`Solver`] builds them
//! once and then solves for any λ cheaply.
//!
//! The upper bound replaces the interpolation by the envelope of tangent
//! planes of `G = J − (1−λ)Δ` at the grid points.

mod bank;
mod quadrature;
mod tangents;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{predict_slice, stationary_distribution, Belief, LikelihoodMask};
use crate::grid::BeliefGrid;
use crate::reward::{energy_cost_unchecked, estimation_error_slice, Action};
use crate::scenario::ScenarioConfig;
use crate::stochastics::{ChannelDesign, ObservationModel};

pub use bank::Estimate;
pub use quadrature::gauss_hermite;
pub use tangents::{compute_tangents_with, upper_bound_value, Tangent};

pub const TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Long-run average cost, solved by relative value iteration.
    AverageCost,
    Discounted {
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quadrature {
    /// Stratified draws: `ceil(samples / n)` observations per hidden state,
    /// shared by every action and grid point.
    MonteCarlo { samples: usize, seed: u64 },
    /// Tensor Gauss–Hermite rule with `nodes` points per dimension.
    SigmaPoint { nodes: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Improvement {
    Exhaustive,
    /// Stagewise allocation; stage ℓ may add up to `schedule[ℓ]` samples.
    Greedy {
        schedule: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mode: Mode,
    pub quadrature: Quadrature,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub improvement: Improvement,
    pub design: ChannelDesign,
    pub mask: LikelihoodMask,
}

pub const DEFAULT_MC_SAMPLES: usize = 256;
pub const DEFAULT_GAMMA: f64 = 0.95;

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: Mode::AverageCost,
            quadrature: Quadrature::MonteCarlo {
                samples: DEFAULT_MC_SAMPLES,
                seed: 0,
            },
            tolerance: 1e-5,
            max_iterations: 20_000,
            improvement: Improvement::Exhaustive,
            design: ChannelDesign::Intermediate,
            mask: LikelihoodMask::Full,
        }
    }
}

impl SolverOptions {
    pub fn check(&self, config: &ScenarioConfig) -> Result<()> {
        if let Mode::Discounted { gamma } = self.mode {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::Domain(format!(
                    "discount factor must lie in (0, 1), got {gamma}"
                )));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        if let Improvement::Greedy { schedule } = &self.improvement {
            let total: u32 = schedule.iter().sum();
            if schedule.is_empty() || total != config.n_tot {
                return Err(Error::Domain(format!(
                    "greedy schedule {schedule:?} must sum to n_tot = {}",
                    config.n_tot
                )));
            }
        }
        Ok(())
    }
}

/// Cost-to-go at every grid point, plus optional tangent data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueTable {
    pub schema_version: u32,
    pub grid: BeliefGrid,
    pub lambda: f64,
    pub options: SolverOptions,
    pub values: Vec<f64>,
    /// Average cost per slot (average-cost mode) or 0 (discounted mode).
    pub offset: f64,
    pub tangents: Option<Vec<Tangent>>,
    pub iterations: usize,
    pub span: f64,
}

/// Action chosen at every grid point and the value it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub actions: Vec<Action>,
    pub k_values: Vec<f64>,
}

/// Everything produced by one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub table: ValueTable,
    pub policy: PolicyTable,
    pub lower_bound_reward: f64,
    pub lower_bound_se: f64,
    pub upper_bound_reward: Option<f64>,
    /// Grid values of the upper-bound iteration, normalised like `table.values`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_values: Option<Vec<f64>>,
    /// Quadrature nodes that fell back to the prediction while building the model.
    pub degenerate_nodes: usize,
}

impl Solution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks that the tables fit `config`.
    pub fn check_matches(&self, config: &ScenarioConfig) -> Result<()> {
        let n = self.table.grid.n_states();
        if n != config.n_states() {
            return Err(Error::Mismatch(format!(
                "table has {n} states, scenario has {}",
                config.n_states()
            )));
        }
        if self.table.values.len() != self.table.grid.len()
            || self.policy.actions.len() != self.table.grid.len()
        {
            return Err(Error::Mismatch("table size does not match its grid".into()));
        }
        for a in &self.policy.actions {
            if a.counts().len() != config.n_sensors() {
                return Err(Error::Mismatch(format!(
                    "table actions have {} sensors, scenario has {}",
                    a.counts().len(),
                    config.n_sensors()
                )));
            }
            a.check_feasible(config)
                .map_err(|e| Error::Mismatch(e.to_string()))?;
        }
        Ok(())
    }
}

/// Feasible actions in ascending lexicographic order.
pub fn enumerate_actions(config: &ScenarioConfig) -> Vec<Action> {
    fn rec(config: &ScenarioConfig, prefix: &mut Vec<u32>, used: u32, out: &mut Vec<Action>) {
        let s = prefix.len();
        if s == config.n_sensors() {
            if used >= config.min_samples {
                out.push(Action(prefix.clone()));
            }
            return;
        }
        let max = if config.sensors[s].enabled {
            config.n_tot - used
        } else {
            0
        };
        for v in 0..=max {
            prefix.push(v);
            rec(config, prefix, used + v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if config.n_tot >= config.min_samples {
        rec(config, &mut Vec::new(), 0, &mut out);
    }
    out
}

/// `(1−λ)Δ(p) + Σ α_i (J(b_i) − (1−λ)Δ(b_i))`.
pub fn lower_bound_value(p: &Belief, table: &ValueTable, lambda: f64) -> f64 {
    lower_bound_slice(p.probs(), &table.grid, &table.values, lambda)
}

pub(crate) fn lower_bound_slice(p: &[f64], grid: &BeliefGrid, values: &[f64], lambda: f64) -> f64 {
    let w = 1.0 - lambda;
    let mut v = w * estimation_error_slice(p);
    for (i, a) in grid.barycentric(p) {
        v += a * (values[i] - w * estimation_error_slice(grid.point(i).probs()));
    }
    v
}

/// Aggregated one-step transition from a belief under one action.
#[derive(Debug, Clone)]
struct Transition {
    /// `E[Δ(p')]`.
    dbar: f64,
    /// Aggregated barycentric weights of the posteriors.
    targets: Vec<(u32, f64)>,
}

/// Prebuilt model for one scenario, grid and option set.
pub struct Solver {
    config: ScenarioConfig,
    grid: BeliefGrid,
    options: SolverOptions,
    actions: Vec<Action>,
    costs: Vec<f64>,
    bank: bank::LikelihoodBank,
    grid_delta: Vec<f64>,
    /// `transitions[b][a]`.
    transitions: Vec<Vec<Transition>>,
    degenerate: usize,
}

impl Solver {
    pub fn new(
        config: &ScenarioConfig,
        grid: &BeliefGrid,
        options: &SolverOptions,
    ) -> Result<Self> {
        options.check(config)?;
        if grid.n_states() != config.n_states() {
            return Err(Error::Mismatch(format!(
                "grid has {} states, scenario has {}",
                grid.n_states(),
                config.n_states()
            )));
        }
        let actions = enumerate_actions(config);
        if actions.is_empty() {
            return Err(Error::Domain("no feasible action".into()));
        }
        let costs = actions
            .iter()
            .map(|a| energy_cost_unchecked(a, config))
            .collect();
        let model = ObservationModel::new(config, options.design);
        let bank =
            bank::LikelihoodBank::build(&model, &actions, &options.quadrature, options.mask)?;
        let grid_delta = grid
            .points()
            .iter()
            .map(|b| estimation_error_slice(b.probs()))
            .collect();
        let mut solver = Self {
            config: config.clone(),
            grid: grid.clone(),
            options: options.clone(),
            actions,
            costs,
            bank,
            grid_delta,
            transitions: Vec::new(),
            degenerate: 0,
        };
        let built: Vec<(Vec<Transition>, usize)> = (0..grid.len())
            .into_par_iter()
            .map(|b| {
                let p = solver.grid.point(b).probs();
                let mut deg = 0;
                let row = (0..solver.actions.len())
                    .map(|a| {
                        let (t, d) = solver.transition(p, a);
                        deg += d;
                        t
                    })
                    .collect();
                (row, deg)
            })
            .collect();
        solver.degenerate = built.iter().map(|x| x.1).sum();
        solver.transitions = built.into_iter().map(|x| x.0).collect();
        Ok(solver)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn grid(&self) -> &BeliefGrid {
        &self.grid
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action_index(&self, action: &Action) -> Option<usize> {
        self.actions.binary_search(action).ok()
    }

    /// Quadrature nodes that fell back to the prediction while building the model.
    pub fn degenerate_nodes(&self) -> usize {
        self.degenerate
    }

    fn transition(&self, p: &[f64], action: usize) -> (Transition, usize) {
        let q = predict_slice(p, &self.config.transition);
        let mut dense = vec![0.0; self.grid.len()];
        let mut dbar = 0.0;
        let mut bary = Vec::with_capacity(self.grid.n_states());
        let deg = self.bank.for_each_posterior(&q, action, |_, w, post| {
            dbar += w * estimation_error_slice(post);
            self.grid.barycentric_into(post, &mut bary);
            for &(j, a) in &bary {
                dense[j] += w * a;
            }
        });
        let targets = dense
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(j, w)| (j as u32, *w))
            .collect();
        (Transition { dbar, targets }, deg)
    }

    fn beta(&self) -> f64 {
        match self.options.mode {
            Mode::AverageCost => 1.0,
            Mode::Discounted { gamma } => gamma,
        }
    }

    fn continuation(&self, t: &Transition, values: &[f64], lambda: f64) -> f64 {
        let w = 1.0 - lambda;
        let mut v = w * t.dbar;
        for &(j, a) in &t.targets {
            v += a * (values[j as usize] - w * self.grid_delta[j as usize]);
        }
        v
    }

    fn k_from_transition(
        &self,
        p: &[f64],
        a: usize,
        t: &Transition,
        values: &[f64],
        lambda: f64,
    ) -> f64 {
        (1.0 - lambda) * estimation_error_slice(p)
            + lambda * self.costs[a]
            + self.beta() * self.continuation(t, values, lambda)
    }

    /// Picks an action index by the configured improvement rule given the
    /// cost `k(a)` of every candidate.
    fn select(&self, mut k: impl FnMut(usize) -> f64) -> (usize, f64) {
        match &self.options.improvement {
            Improvement::Exhaustive => argmin((0..self.actions.len()).map(|a| (a, k(a)))),
            Improvement::Greedy { schedule } => self.greedy(schedule, k),
        }
    }

    fn greedy(&self, schedule: &[u32], mut k: impl FnMut(usize) -> f64) -> (usize, f64) {
        let s = self.config.n_sensors();
        let mut committed = vec![0u32; s];
        let mut chosen: Option<(usize, f64)> = None;
        for &stage in schedule {
            let base: u32 = committed.iter().sum();
            let candidates = self.actions.iter().enumerate().filter(|(_, a)| {
                let c = a.counts();
                c.iter().zip(&committed).all(|(x, y)| x >= y) && a.total() - base <= stage
            });
            let scored: Vec<(usize, f64)> = candidates.map(|(i, _)| (i, k(i))).collect();
            if scored.is_empty() {
                continue;
            }
            let best = argmin(scored.into_iter());
            committed = self.actions[best.0].counts().to_vec();
            chosen = Some(best);
        }
        chosen.unwrap_or_else(|| argmin((0..self.actions.len()).map(|a| (a, k(a)))))
    }

    /// Expected value of `f` at the posterior after `action` from `belief`.
    pub fn expected_future_value(
        &self,
        belief: &Belief,
        action: &Action,
        f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Estimate> {
        let a = self.index_of(action)?;
        let q = predict_slice(belief.probs(), &self.config.transition);
        Ok(self.bank.expectation(&q, a, f))
    }

    fn index_of(&self, action: &Action) -> Result<usize> {
        self.action_index(action)
            .ok_or_else(|| Error::InfeasibleAction {
                action: action.0.clone(),
                reason: "not in the feasible action set".into(),
            })
    }

    /// `K(p, u) = (1−λ)Δ(p) + λc(u) + β E[f(p')]`, with its standard error.
    pub fn q_value(
        &self,
        belief: &Belief,
        action: &Action,
        lambda: f64,
        f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Estimate> {
        let a = self.index_of(action)?;
        let e = self.expected_future_value(belief, action, f)?;
        let r = (1.0 - lambda) * estimation_error_slice(belief.probs()) + lambda * self.costs[a];
        Ok(Estimate {
            mean: r + self.beta() * e.mean,
            se: self.beta() * e.se,
            degenerate: e.degenerate,
        })
    }

    /// One improvement step at `belief` against the continuation `f`.
    pub fn policy_improvement(
        &self,
        belief: &Belief,
        lambda: f64,
        f: impl Fn(&[f64]) -> f64,
    ) -> (Action, f64) {
        let q = predict_slice(belief.probs(), &self.config.transition);
        let r0 = (1.0 - lambda) * estimation_error_slice(belief.probs());
        let (a, k) = self.select(|a| {
            r0 + lambda * self.costs[a] + self.beta() * self.bank.expectation(&q, a, &f).mean
        });
        (self.actions[a].clone(), k)
    }

    /// Relative (or discounted) value iteration with the lower-bound continuation.
    pub fn solve(&self, lambda: f64) -> Result<Solution> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        let nb = self.grid.len();
        let mut h = vec![0.0; nb];
        let mut iterations = 0;
        let (mut span, mut gain, mut gain_floor);
        let mut policy;
        loop {
            iterations += 1;
            let step: Vec<(usize, f64)> = (0..nb)
                .into_par_iter()
                .map(|b| {
                    let p = self.grid.point(b).probs();
                    self.select(|a| {
                        self.k_from_transition(p, a, &self.transitions[b][a], &h, lambda)
                    })
                })
                .collect();
            let new_h: Vec<f64> = step.iter().map(|x| x.1).collect();
            policy = step;
            let diffs: Vec<f64> = new_h.iter().zip(&h).map(|(a, b)| a - b).collect();
            let (lo, hi) = min_max(&diffs);
            match self.options.mode {
                Mode::AverageCost => {
                    span = hi - lo;
                    gain = 0.5 * (hi + lo);
                    gain_floor = lo;
                    let reference = new_h[0];
                    h = new_h.iter().map(|v| v - reference).collect();
                }
                Mode::Discounted { .. } => {
                    span = hi.abs().max(lo.abs());
                    gain = 0.0;
                    gain_floor = 0.0;
                    h = new_h;
                }
            }
            if span <= self.options.tolerance {
                break;
            }
            if iterations >= self.options.max_iterations {
                return Err(Error::NonConvergence { iterations, span });
            }
        }
        let policy_table = PolicyTable {
            actions: policy
                .iter()
                .map(|&(a, _)| self.actions[a].clone())
                .collect(),
            k_values: policy.iter().map(|&(_, k)| k).collect(),
        };
        let indices: Vec<usize> = policy.iter().map(|x| x.0).collect();
        let se = self.gain_standard_error(&indices, &h, lambda);
        let lower_bound_reward = match self.options.mode {
            // The smallest one-sweep increment never exceeds the gain.
            Mode::AverageCost => gain_floor,
            Mode::Discounted { gamma } => {
                let pi = stationary_distribution(&self.config.transition);
                (1.0 - gamma) * lower_bound_slice(&pi, &self.grid, &h, lambda)
            }
        };
        let table = ValueTable {
            schema_version: TABLE_SCHEMA_VERSION,
            grid: self.grid.clone(),
            lambda,
            options: self.options.clone(),
            values: h,
            offset: gain,
            tangents: None,
            iterations,
            span,
        };
        Ok(Solution {
            table,
            policy: policy_table,
            lower_bound_reward,
            lower_bound_se: se,
            upper_bound_reward: None,
            upper_values: None,
            degenerate_nodes: self.degenerate,
        })
    }

    /// Stationary law of the grid chain induced by `policy`.
    fn grid_stationary(&self, policy: &[usize]) -> Vec<f64> {
        let nb = self.grid.len();
        let mut pi = vec![1.0 / nb as f64; nb];
        for _ in 0..200_000 {
            let mut next = vec![0.0; nb];
            for (b, &a) in policy.iter().enumerate() {
                for &(j, w) in &self.transitions[b][a].targets {
                    next[j as usize] += pi[b] * w;
                }
            }
            let s: f64 = next.iter().sum();
            let mut change: f64 = 0.0;
            for (p, nx) in pi.iter_mut().zip(&next) {
                let v = 0.5 * (*p + nx / s);
                change = change.max((v - *p).abs());
                *p = v;
            }
            if change < 1e-13 {
                break;
            }
        }
        pi
    }

    fn gain_standard_error(&self, policy: &[usize], values: &[f64], lambda: f64) -> f64 {
        let pi = self.grid_stationary(policy);
        let beta = self.beta();
        // Collected before summing so the result does not depend on thread count.
        let terms: Vec<f64> = policy
            .par_iter()
            .enumerate()
            .map(|(b, &a)| {
                if pi[b] < 1e-12 {
                    return 0.0;
                }
                let q = predict_slice(self.grid.point(b).probs(), &self.config.transition);
                let e = self
                    .bank
                    .expectation(&q, a, |p| lower_bound_slice(p, &self.grid, values, lambda));
                (pi[b] * beta * e.se).powi(2)
            })
            .collect();
        terms.iter().sum::<f64>().sqrt()
    }

    /// Finite-difference tangents of `G = J − (1−λ)Δ` at every grid point,
    /// with `G` off the grid given by a one-step lookahead.
    pub fn compute_tangents(&self, solution: &mut Solution) {
        let lambda = solution.table.lambda;
        let values = solution.table.values.clone();
        let offset = match self.options.mode {
            Mode::AverageCost => solution.table.offset,
            Mode::Discounted { .. } => 0.0,
        };
        let g_grid: Vec<f64> = values
            .iter()
            .zip(&self.grid_delta)
            .map(|(v, d)| v - (1.0 - lambda) * d)
            .collect();
        let g = |p: &[f64]| {
            let mut ts = Vec::with_capacity(self.actions.len());
            for a in 0..self.actions.len() {
                ts.push(self.transition(p, a).0);
            }
            let (_, k) = self.select(|a| self.k_from_transition(p, a, &ts[a], &values, lambda));
            k - offset - (1.0 - lambda) * estimation_error_slice(p)
        };
        solution.table.tangents = Some(compute_tangents_with(&self.grid, &g_grid, g));
    }

    /// Long-run cost bound obtained by iterating with the tangent envelope as
    /// the continuation, floored by the grid interpolant so that it can never
    /// fall below the lower bound. Requires tangents.
    pub fn upper_bound(&self, solution: &mut Solution) -> Result<f64> {
        let tangents = solution
            .table
            .tangents
            .as_ref()
            .ok_or(Error::MissingTangents)?;
        let lambda = solution.table.lambda;
        let w = 1.0 - lambda;
        let nb = self.grid.len();
        let n = self.grid.n_states();
        // Affine pieces s_i·p + c_i with c_i = G_i − s_i·b_i; the slopes stay fixed.
        let slope_dot_point: Vec<f64> = (0..nb)
            .map(|i| dot(&tangents[i].slope, self.grid.point(i).probs()))
            .collect();
        let mut h = solution.table.values.clone();
        let beta = self.beta();
        let mut iterations = 0;
        let result = loop {
            iterations += 1;
            let c: Vec<f64> = (0..nb)
                .map(|i| h[i] - w * self.grid_delta[i] - slope_dot_point[i])
                .collect();
            let interpolate = |p: &[f64]| {
                lower_bound_slice(p, &self.grid, &h, lambda) - w * estimation_error_slice(p)
            };
            let envelope = |p: &[f64]| {
                let mut best = f64::INFINITY;
                for i in 0..nb {
                    let mut v = c[i];
                    let s = &tangents[i].slope;
                    for k in 0..n {
                        v += s[k] * p[k];
                    }
                    best = best.min(v);
                }
                // Finite-difference planes can dip below the chord of G; the
                // interpolant is a valid floor for any concave G.
                w * estimation_error_slice(p) + best.max(interpolate(p))
            };
            let new_h: Vec<f64> = (0..nb)
                .into_par_iter()
                .map(|b| {
                    let p = self.grid.point(b).probs();
                    let q = predict_slice(p, &self.config.transition);
                    let r0 = w * self.grid_delta[b];
                    self.select(|a| {
                        r0 + lambda * self.costs[a]
                            + beta * self.bank.expectation(&q, a, envelope).mean
                    })
                    .1
                })
                .collect();
            let diffs: Vec<f64> = new_h.iter().zip(&h).map(|(a, b)| a - b).collect();
            let (lo, hi) = min_max(&diffs);
            let (span, gain) = match self.options.mode {
                Mode::AverageCost => {
                    let reference = new_h[0];
                    h = new_h.iter().map(|v| v - reference).collect();
                    // The largest one-sweep increment is never below the gain.
                    (hi - lo, hi)
                }
                Mode::Discounted { .. } => {
                    h = new_h;
                    (hi.abs().max(lo.abs()), 0.0)
                }
            };
            if span <= self.options.tolerance {
                break gain;
            }
            if iterations >= self.options.max_iterations {
                return Err(Error::NonConvergence { iterations, span });
            }
        };
        let reward = match self.options.mode {
            Mode::AverageCost => result,
            Mode::Discounted { gamma } => {
                let pi = stationary_distribution(&self.config.transition);
                let table = ValueTable {
                    values: h.clone(),
                    ..solution.table.clone()
                };
                (1.0 - gamma) * upper_bound_value(&Belief::from_raw(pi), &table, lambda)?
            }
        };
        solution.upper_bound_reward = Some(reward);
        solution.upper_values = Some(h);
        Ok(reward)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// First index with the smallest value (candidates arrive in lexicographic order).
fn argmin(it: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, k) in it {
        if k < best.1 || best.0 == usize::MAX {
            best = (i, k);
        }
    }
    best
}

/// Solves for one λ with the lower-bound continuation.
pub fn value_iteration(
    config: &ScenarioConfig,
    grid: &BeliefGrid,
    lambda: f64,
    options: &SolverOptions,
) -> Result<Solution> {
    Solver::new(config, grid, options)?.solve(lambda)
}
