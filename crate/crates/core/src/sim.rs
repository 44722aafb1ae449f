//! Monte Carlo evaluation of policies and λ sweeps.
//!
//! Each episode starts from the stationary law of the chain, both for the
//! hidden state and for the belief. Per slot the policy acts on the current
//! belief, the chain moves, the sensors report and the filter updates. All
//! randomness of an episode comes from substreams of its own seed, so results
//! do not depend on how episodes are scheduled over threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{
    map_estimate, predict, slot_update, stationary_distribution, Belief, LikelihoodMask,
};
use crate::grid::build_grid;
use crate::policies::{masked_variant, restrict_to_sensor, Policy};
use crate::reward::{energy_cost_unchecked, estimation_error, Action};
use crate::scenario::ScenarioConfig;
use crate::solver::{Improvement, Solver, SolverOptions};
use crate::stochastics::{sample_slot_observations, ChannelDesign, ObservationModel, Rng};

pub const DEFAULT_HORIZON: usize = 5000;
pub const DEFAULT_EPISODES: usize = 64;
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;
/// Fraction of degenerate slots above which a warning is logged.
pub const DEGENERATE_WARN_FRACTION: f64 = 1e-3;

const ROLE_INIT: u64 = 0;
const ROLE_TRANSITION: u64 = 1;
const ROLE_OBSERVATION: u64 = 2;
const ROLE_POLICY: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub state: usize,
    pub action: Action,
    pub belief: Vec<f64>,
    pub delta: f64,
    pub energy: f64,
    pub map_estimate: usize,
    pub correct: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub horizon: usize,
    pub records: Vec<SlotRecord>,
}

/// Long-run averages over the post-burn-in slots of all episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub lambda: f64,
    pub mse: f64,
    pub energy: f64,
    /// `(1−λ)·mse + λ·energy`.
    pub reward: f64,
    pub err_prob: f64,
    /// Share of all samples taken from each sensor (zeros when none were taken).
    pub usage: Vec<f64>,
    pub se_mse: f64,
    pub se_energy: f64,
    pub se_reward: f64,
    pub se_err_prob: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub degenerate_slots: usize,
}

/// Scenario plus cached observation densities and the stationary start.
pub struct Simulator {
    config: ScenarioConfig,
    model: ObservationModel,
    stationary: Vec<f64>,
    burn_in_fraction: f64,
}

impl Simulator {
    pub fn new(config: &ScenarioConfig, design: ChannelDesign) -> Self {
        Self {
            config: config.clone(),
            model: ObservationModel::new(config, design),
            stationary: stationary_distribution(&config.transition),
            burn_in_fraction: DEFAULT_BURN_IN_FRACTION,
        }
    }

    pub fn with_burn_in_fraction(mut self, fraction: f64) -> Self {
        self.burn_in_fraction = fraction;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn burn_in(&self, horizon: usize) -> usize {
        ((horizon as f64 * self.burn_in_fraction) as usize).min(horizon.saturating_sub(1))
    }

    pub fn run_episode(&self, policy: &Policy, horizon: usize, seed: u64) -> Result<EpisodeTrace> {
        if horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        let config = &self.config;
        let n = config.n_states();
        let root = Rng::new(seed);
        let mut state = root.substream(&[ROLE_INIT]).categorical(&self.stationary);
        let mut belief = Belief::from_raw(self.stationary.clone());
        let mut records = Vec::with_capacity(horizon);
        for k in 0..horizon as u64 {
            let action = policy.action(&belief, &mut root.substream(&[ROLE_POLICY, k]));
            state = root
                .substream(&[ROLE_TRANSITION, k])
                .categorical(&config.transition[state]);
            let obs = sample_slot_observations(
                &mut root.substream(&[ROLE_OBSERVATION, k]),
                state,
                &action,
                config,
            )?;
            let (next, degenerate) = match slot_update(&belief, &obs, &self.model, policy.mask()) {
                Ok(b) => (b, false),
                Err(Error::DegenerateLikelihood) => (predict(&belief, &config.transition), true),
                Err(e) => return Err(e),
            };
            belief = next;
            let map = map_estimate(&belief);
            debug_assert_eq!(belief.len(), n);
            records.push(SlotRecord {
                state,
                energy: energy_cost_unchecked(&action, config),
                action,
                delta: estimation_error(&belief),
                map_estimate: map,
                correct: map == state,
                degenerate,
                belief: belief.probs().to_vec(),
            });
        }
        Ok(EpisodeTrace {
            seed,
            horizon,
            records,
        })
    }

    /// Seed of episode `e` under `base_seed`.
    pub fn episode_seed(base_seed: u64, e: usize) -> u64 {
        Rng::new(base_seed).substream(&[e as u64]).next_u64()
    }

    pub fn evaluate(
        &self,
        policy: &Policy,
        lambda: f64,
        episodes: usize,
        horizon: usize,
        base_seed: u64,
    ) -> Result<Metrics> {
        if episodes == 0 {
            return Err(Error::Domain("episodes must be at least 1".into()));
        }
        let burn = self.burn_in(horizon);
        let summaries: Vec<EpisodeSummary> = (0..episodes)
            .into_par_iter()
            .map(|e| {
                let trace = self.run_episode(policy, horizon, Self::episode_seed(base_seed, e))?;
                Ok(EpisodeSummary::new(
                    &trace.records[burn..],
                    self.config.n_sensors(),
                    lambda,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let metrics = aggregate(&summaries, lambda, horizon, burn, self.config.n_sensors());
        let slots = episodes * (horizon - burn);
        if metrics.degenerate_slots as f64 > DEGENERATE_WARN_FRACTION * slots as f64 {
            log::warn!(
                "{} of {} simulated slots had a degenerate likelihood",
                metrics.degenerate_slots,
                slots
            );
        }
        Ok(metrics)
    }
}

/// Per-episode sums, plus batch means for single-episode error bars.
struct EpisodeSummary {
    slots: usize,
    means: [f64; 4],
    batches: Vec<[f64; 4]>,
    samples: Vec<u64>,
    degenerate: usize,
}

const BATCHES: usize = 10;

impl EpisodeSummary {
    fn new(records: &[SlotRecord], n_sensors: usize, lambda: f64) -> Self {
        let values = |r: &SlotRecord| {
            [
                r.delta,
                r.energy,
                (1.0 - lambda) * r.delta + lambda * r.energy,
                if r.correct { 0.0 } else { 1.0 },
            ]
        };
        let mean_of = |rs: &[SlotRecord]| {
            let mut m = [0.0; 4];
            for r in rs {
                for (acc, v) in m.iter_mut().zip(values(r)) {
                    *acc += v;
                }
            }
            m.map(|x| x / rs.len().max(1) as f64)
        };
        let size = records.len() / BATCHES;
        let batches = if size == 0 {
            Vec::new()
        } else {
            records
                .chunks_exact(size)
                .take(BATCHES)
                .map(mean_of)
                .collect()
        };
        let mut samples = vec![0u64; n_sensors];
        for r in records {
            for (s, &c) in samples.iter_mut().zip(r.action.counts()) {
                *s += u64::from(c);
            }
        }
        Self {
            slots: records.len(),
            means: mean_of(records),
            batches,
            samples,
            degenerate: records.iter().filter(|r| r.degenerate).count(),
        }
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

fn aggregate(
    eps: &[EpisodeSummary],
    lambda: f64,
    horizon: usize,
    burn: usize,
    n_sensors: usize,
) -> Metrics {
    // Every episode has the same number of slots, so the mean of episode
    // means is the pooled mean.
    let groups: Vec<[f64; 4]> = if eps.len() > 1 {
        eps.iter().map(|e| e.means).collect()
    } else {
        eps[0].batches.clone()
    };
    let column = |c: usize| -> (f64, f64) {
        let pooled = eps.iter().map(|e| e.means[c]).sum::<f64>() / eps.len() as f64;
        let se = if groups.len() >= 2 {
            mean_and_se(&groups.iter().map(|g| g[c]).collect::<Vec<_>>()).1
        } else {
            0.0
        };
        (pooled, se)
    };
    let (mse, se_mse) = column(0);
    let (energy, se_energy) = column(1);
    let (_, se_reward) = column(2);
    let (err_prob, se_err_prob) = column(3);
    let mut totals = vec![0u64; n_sensors];
    for e in eps {
        for (t, s) in totals.iter_mut().zip(&e.samples) {
            *t += s;
        }
    }
    let all: u64 = totals.iter().sum();
    let usage = totals
        .iter()
        .map(|&t| if all == 0 { 0.0 } else { t as f64 / all as f64 })
        .collect();
    debug_assert!(eps.iter().all(|e| e.slots == horizon - burn));
    Metrics {
        lambda,
        mse,
        energy,
        reward: (1.0 - lambda) * mse + lambda * energy,
        err_prob,
        usage,
        se_mse,
        se_energy,
        se_reward,
        se_err_prob,
        episodes: eps.len(),
        horizon,
        burn_in: burn,
        degenerate_slots: eps.iter().map(|e| e.degenerate).sum(),
    }
}

/// One simulated episode (convenience wrapper around [`Simulator`]).
pub fn run_episode(
    config: &ScenarioConfig,
    policy: &Policy,
    horizon: usize,
    seed: u64,
    design: ChannelDesign,
) -> Result<EpisodeTrace> {
    Simulator::new(config, design).run_episode(policy, horizon, seed)
}

/// Metrics over `episodes` independent episodes (convenience wrapper).
pub fn evaluate(
    config: &ScenarioConfig,
    policy: &Policy,
    lambda: f64,
    episodes: usize,
    horizon: usize,
    base_seed: u64,
    design: ChannelDesign,
) -> Result<Metrics> {
    Simulator::new(config, design).evaluate(policy, lambda, episodes, horizon, base_seed)
}

/// Policy family compared in a λ sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Exhaustive improvement, executed at the dominant grid vertex.
    Optimal,
    /// Greedy improvement with a one-sample-per-stage schedule, executed as BBP.
    Greedy,
    /// Exhaustive improvement executed as BBP.
    Bbp,
    /// Only the named sensor may be sampled.
    Fixed(String),
    /// Measurements only.
    Ms,
    /// Channel estimates and features only.
    Ch,
}

impl SweepMode {
    pub fn label(&self) -> String {
        match self {
            SweepMode::Optimal => "optimal".into(),
            SweepMode::Greedy => "greedy".into(),
            SweepMode::Bbp => "bbp".into(),
            SweepMode::Fixed(s) => format!("fixed:{s}"),
            SweepMode::Ms => "ms".into(),
            SweepMode::Ch => "ch".into(),
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => SweepMode::Optimal,
            "greedy" => SweepMode::Greedy,
            "bbp" => SweepMode::Bbp,
            "ms" => SweepMode::Ms,
            "ch" => SweepMode::Ch,
            _ => match s.strip_prefix("fixed:") {
                Some(name) if !name.is_empty() => SweepMode::Fixed(name.to_string()),
                _ => return Err(Error::Parse(format!("unknown policy mode `{s}`"))),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub grid_resolution: u32,
    pub solver: SolverOptions,
    pub episodes: usize,
    pub horizon: usize,
    pub base_seed: u64,
    /// Whether to run the tangent upper bound for every cell.
    pub upper_bound: bool,
}

/// One (λ, mode) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mode: String,
    pub mse: f64,
    pub err_prob: f64,
    pub energy: f64,
    pub reward_lb: f64,
    pub reward_ub: f64,
    pub se_mse: f64,
    pub se_energy: f64,
    pub usage: Vec<f64>,
    /// `None` when the cell succeeded.
    pub status: Option<String>,
}

impl SweepRow {
    fn failed(lambda: f64, mode: &SweepMode, n_sensors: usize, err: &Error) -> Self {
        SweepRow {
            lambda,
            mode: mode.label(),
            mse: f64::NAN,
            err_prob: f64::NAN,
            energy: f64::NAN,
            reward_lb: f64::NAN,
            reward_ub: f64::NAN,
            se_mse: f64::NAN,
            se_energy: f64::NAN,
            usage: vec![f64::NAN; n_sensors],
            status: Some(err.to_string()),
        }
    }
}

/// Scenario and solver options that realise `mode`.
pub fn mode_inputs(
    config: &ScenarioConfig,
    mode: &SweepMode,
    options: &SolverOptions,
) -> Result<(ScenarioConfig, SolverOptions)> {
    let mut options = options.clone();
    let config = match mode {
        SweepMode::Optimal | SweepMode::Bbp => {
            options.improvement = Improvement::Exhaustive;
            config.clone()
        }
        SweepMode::Greedy => {
            options.improvement = Improvement::Greedy {
                schedule: vec![1; config.n_tot as usize],
            };
            config.clone()
        }
        SweepMode::Fixed(name) => {
            let s = config
                .sensor_index(name)
                .ok_or_else(|| Error::Domain(format!("unknown sensor `{name}`")))?;
            options.improvement = Improvement::Exhaustive;
            restrict_to_sensor(config, s)?
        }
        SweepMode::Ms => {
            options.improvement = Improvement::Exhaustive;
            options = masked_variant(&options, LikelihoodMask::MeasurementsOnly);
            config.clone()
        }
        SweepMode::Ch => {
            options.improvement = Improvement::Exhaustive;
            options = masked_variant(&options, LikelihoodMask::ChannelOnly);
            config.clone()
        }
    };
    Ok((config, options))
}

fn policy_for(
    mode: &SweepMode,
    config: &ScenarioConfig,
    solution: &crate::solver::Solution,
) -> Policy {
    match mode {
        SweepMode::Optimal => Policy::grid_vertex(solution),
        SweepMode::Greedy | SweepMode::Bbp => Policy::bbp(solution),
        SweepMode::Fixed(name) => {
            Policy::fixed_sensor(config.sensor_index(name).unwrap_or(0), solution)
        }
        SweepMode::Ms | SweepMode::Ch => Policy::masked(solution),
    }
}

fn sweep_cell(
    solver: &Solver,
    sim: &Simulator,
    mode: &SweepMode,
    lambda: f64,
    settings: &SweepSettings,
) -> Result<SweepRow> {
    let mut solution = solver.solve(lambda)?;
    let reward_ub = if settings.upper_bound {
        solver.compute_tangents(&mut solution);
        solver.upper_bound(&mut solution)?
    } else {
        f64::NAN
    };
    let policy = policy_for(mode, solver.config(), &solution);
    let m = sim.evaluate(
        &policy,
        lambda,
        settings.episodes,
        settings.horizon,
        settings.base_seed,
    )?;
    Ok(SweepRow {
        lambda,
        mode: mode.label(),
        mse: m.mse,
        err_prob: m.err_prob,
        energy: m.energy,
        reward_lb: solution.lower_bound_reward,
        reward_ub,
        se_mse: m.se_mse,
        se_energy: m.se_energy,
        usage: m.usage,
        status: None,
    })
}

/// Solves and simulates every (mode, λ) cell. Rows are ordered by mode, then
/// λ. A failing cell yields a row with `status` set instead of aborting.
pub fn pareto_sweep(
    config: &ScenarioConfig,
    lambdas: &[f64],
    modes: &[SweepMode],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Domain(format!("lambda {l} outside [0, 1]")));
    }
    let grid = build_grid(config.n_states(), settings.grid_resolution);
    let sim = Simulator::new(config, settings.solver.design);
    let mut rows = Vec::with_capacity(lambdas.len() * modes.len());
    for mode in modes {
        let built = mode_inputs(config, mode, &settings.solver)
            .and_then(|(c, o)| Solver::new(&c, &grid, &o));
        match built {
            Ok(solver) => {
                for &lambda in lambdas {
                    let row = sweep_cell(&solver, &sim, mode, lambda, settings)
                        .unwrap_or_else(|e| SweepRow::failed(lambda, mode, config.n_sensors(), &e));
                    rows.push(row);
                }
            }
            Err(e) => {
                for &lambda in lambdas {
                    rows.push(SweepRow::failed(lambda, mode, config.n_sensors(), &e));
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::scenario::tests::tiny;
    use crate::solver::{PolicyTable, Solution, ValueTable};

    /// A policy that always returns `action` on a coarse grid.
    pub(crate) fn constant_policy(
        config: &ScenarioConfig,
        action: Action,
        mask: LikelihoodMask,
    ) -> Policy {
        let grid = build_grid(config.n_states(), 1);
        let options = SolverOptions {
            mask,
            ..Default::default()
        };
        let solution = Solution {
            table: ValueTable {
                schema_version: 1,
                grid: grid.clone(),
                lambda: 0.0,
                options,
                values: vec![0.0; grid.len()],
                offset: 0.0,
                tangents: None,
                iterations: 0,
                span: 0.0,
            },
            policy: PolicyTable {
                actions: vec![action; grid.len()],
                k_values: vec![0.0; grid.len()],
            },
            lower_bound_reward: 0.0,
            lower_bound_se: 0.0,
            upper_bound_reward: None,
            upper_values: None,
            degenerate_nodes: 0,
        };
        Policy::bbp(&solution)
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let c = tiny();
        let sim = Simulator::new(&c, ChannelDesign::Intermediate);
        let p = constant_policy(&c, Action(vec![1, 1]), LikelihoodMask::Full);
        let a = sim.run_episode(&p, 200, 17).unwrap();
        let b = sim.run_episode(&p, 200, 17).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.records.len(), 200);
    }

    #[test]
    fn single_slot_at_lambda_one() {
        let c = tiny();
        let sim = Simulator::new(&c, ChannelDesign::Intermediate);
        let p = constant_policy(&c, Action(vec![1, 0]), LikelihoodMask::Full);
        let t = sim.run_episode(&p, 1, 3).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].energy, 0.5);
        let m = sim.evaluate(&p, 1.0, 4, 1, 3).unwrap();
        assert_eq!(m.reward, 0.5);
        assert_eq!(m.usage, vec![1.0, 0.0]);
    }

    #[test]
    fn uninformative_sensors_keep_stationary_belief() {
        let mut c = tiny();
        for s in &mut c.sensors {
            for m in &mut s.measurement {
                m.mean = 1.0;
            }
            s.channel = None;
            s.features.clear();
        }
        let sim = Simulator::new(&c, ChannelDesign::Intermediate);
        let p = constant_policy(&c, Action(vec![1, 1]), LikelihoodMask::Full);
        let pi = stationary_distribution(&c.transition);
        for r in sim.run_episode(&p, 50, 8).unwrap().records {
            for (a, b) in r.belief.iter().zip(&pi) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metrics_are_consistent() {
        let c = tiny();
        let sim = Simulator::new(&c, ChannelDesign::Intermediate);
        let p = constant_policy(&c, Action(vec![1, 1]), LikelihoodMask::Full);
        let m = sim.evaluate(&p, 0.3, 3, 400, 5).unwrap();
        assert!((m.reward - (0.7 * m.mse + 0.3 * m.energy)).abs() < 1e-12);
        assert!((m.usage.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.se_mse >= 0.0 && m.se_energy >= 0.0);
        let one = sim.evaluate(&p, 0.3, 1, 400, 5).unwrap();
        assert!(one.se_mse > 0.0);
    }

    #[test]
    fn episode_order_does_not_matter() {
        let c = tiny();
        let sim = Simulator::new(&c, ChannelDesign::Intermediate);
        let p = constant_policy(&c, Action(vec![0, 2]), LikelihoodMask::Full);
        let m = sim.evaluate(&p, 0.5, 6, 100, 21).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let m1 = pool.install(|| sim.evaluate(&p, 0.5, 6, 100, 21).unwrap());
        assert_eq!(m, m1);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "fixed:ACC1".parse::<SweepMode>().unwrap(),
            SweepMode::Fixed("ACC1".into())
        );
        assert_eq!("ch".parse::<SweepMode>().unwrap(), SweepMode::Ch);
        assert!("fixed:".parse::<SweepMode>().is_err());
        assert!("best".parse::<SweepMode>().is_err());
    }

    #[test]
    fn empty_mode_list_gives_empty_table() {
        let c = tiny();
        let settings = SweepSettings {
            grid_resolution: 2,
            solver: SolverOptions::default(),
            episodes: 1,
            horizon: 10,
            base_seed: 0,
            upper_bound: false,
        };
        assert!(pareto_sweep(&c, &[0.0, 1.0], &[], &settings)
            .unwrap()
            .is_empty());
    }
}
