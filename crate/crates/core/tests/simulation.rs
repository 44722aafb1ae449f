//! Statistical checks on the simulator and the sweep driver.

use std::path::PathBuf;

use chansense::filter::stationary_distribution;
use chansense::grid::build_grid;
use chansense::sim::{pareto_sweep, Simulator, SweepMode, SweepSettings};
use chansense::solver::{PolicyTable, Solution, Solver, ValueTable};
use chansense::{
    load_scenario, Action, ChannelDesign, LikelihoodMask, Policy, ScenarioConfig, SolverOptions,
};

fn shipped(name: &str) -> ScenarioConfig {
    load_scenario(
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../scenarios")
            .join(name),
    )
    .unwrap()
}

/// Policy that plays `action` everywhere.
fn constant(config: &ScenarioConfig, action: Action) -> Policy {
    let grid = build_grid(config.n_states(), 1);
    Policy::bbp(&Solution {
        table: ValueTable {
            schema_version: 1,
            grid: grid.clone(),
            lambda: 0.0,
            options: SolverOptions::default(),
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
    })
}

#[test]
fn state_occupancy_matches_stationary_law() {
    let c = shipped("wban.json");
    let pi = stationary_distribution(&c.transition);
    let sim = Simulator::new(&c, ChannelDesign::Intermediate);
    let policy = constant(&c, Action(vec![1, 0, 0]));
    let per_episode: Vec<Vec<f64>> = (0..32)
        .map(|e| {
            let trace = sim
                .run_episode(&policy, 2000, Simulator::episode_seed(5, e))
                .unwrap();
            let mut counts = vec![0.0; 4];
            for r in &trace.records[200..] {
                counts[r.state] += 1.0;
            }
            counts.iter().map(|x| x / 1800.0).collect()
        })
        .collect();
    for s in 0..4 {
        let xs: Vec<f64> = per_episode.iter().map(|v| v[s]).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        assert!((m - pi[s]).abs() <= 3.0 * se, "state {s}: {m} vs {}", pi[s]);
    }
}

#[test]
fn observations_reduce_estimation_error() {
    let mut c = shipped("wban.json");
    c.min_samples = 0;
    let sim = Simulator::new(&c, ChannelDesign::Intermediate);
    let blind = sim
        .evaluate(&constant(&c, Action(vec![0, 0, 0])), 0.0, 8, 1000, 3)
        .unwrap();
    let c1 = shipped("wban.json");
    let solver = Solver::new(&c1, &build_grid(4, 3), &SolverOptions::default()).unwrap();
    let sol = solver.solve(0.0).unwrap();
    let informed = Simulator::new(&c1, ChannelDesign::Intermediate)
        .evaluate(&Policy::bbp(&sol), 0.0, 8, 1000, 3)
        .unwrap();
    assert!(
        informed.mse <= blind.mse + 3.0 * (blind.se_mse.powi(2) + informed.se_mse.powi(2)).sqrt()
    );
    assert_eq!(blind.energy, 0.0);
    assert_eq!(blind.usage, vec![0.0, 0.0, 0.0]);
}

#[test]
fn reported_reward_is_the_weighted_sum() {
    let c = shipped("twostate.json");
    let sim = Simulator::new(&c, ChannelDesign::Intermediate);
    let m = sim
        .evaluate(&constant(&c, Action(vec![0, 1, 1])), 0.37, 4, 500, 1)
        .unwrap();
    assert!((m.reward - (0.63 * m.mse + 0.37 * m.energy)).abs() <= 1e-12);
    assert!((m.energy - 1.776).abs() < 1e-12);
}

#[test]
fn masked_policy_filters_with_its_mask() {
    let c = shipped("wban.json");
    let options = SolverOptions {
        mask: LikelihoodMask::ChannelOnly,
        ..SolverOptions::default()
    };
    let solver = Solver::new(&c, &build_grid(4, 2), &options).unwrap();
    let p = Policy::masked(&solver.solve(0.0).unwrap());
    assert_eq!(p.mask(), LikelihoodMask::ChannelOnly);
}

#[test]
fn lambda_one_sweep_rows_coincide() {
    let c = shipped("wban.json");
    let settings = SweepSettings {
        grid_resolution: 2,
        solver: SolverOptions::default(),
        episodes: 2,
        horizon: 200,
        base_seed: 11,
        upper_bound: false,
    };
    let modes: Vec<SweepMode> = [
        "optimal",
        "greedy",
        "bbp",
        "fixed:ACC1",
        "fixed:ACC2",
        "fixed:ECG",
        "ms",
        "ch",
    ]
    .iter()
    .map(|m| m.parse().unwrap())
    .collect();
    let rows = pareto_sweep(&c, &[1.0], &modes, &settings).unwrap();
    assert_eq!(rows.len(), modes.len());
    for r in &rows {
        if r.mode == "fixed:ACC2" || r.mode == "fixed:ECG" {
            // Only the restricted sensor is available.
            assert!(r.energy > 0.58);
            continue;
        }
        assert!((r.energy - 0.58).abs() < 1e-9, "{}", r.mode);
        assert_eq!(r.usage, vec![1.0, 0.0, 0.0], "{}", r.mode);
        assert!(r.status.is_none());
    }
    assert!(pareto_sweep(&c, &[1.2], &modes, &settings).is_err());
}
