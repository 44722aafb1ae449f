//! Property tests for the belief filter.

use chansense::filter::{joint_bayes_oracle, predict, slot_update, stationary_distribution};
use chansense::scenario::{GammaParams, GaussianParams};
use chansense::stochastics::sample_slot_observations;
use chansense::{
    Action, Belief, ChannelDesign, LikelihoodMask, ObservationModel, Rng, ScenarioConfig,
    SensorSpec,
};
use proptest::prelude::*;

fn config(means: &[f64], shapes: &[f64], stay: f64, n_tot: u32) -> ScenarioConfig {
    let n = means.len();
    let transition = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        stay
                    } else {
                        (1.0 - stay) / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    ScenarioConfig {
        schema_version: 1,
        note: None,
        states: (0..n).map(|i| format!("s{i}")).collect(),
        transition,
        sensors: vec![
            SensorSpec {
                name: "a".into(),
                cost: 0.5,
                measurement: means
                    .iter()
                    .map(|&m| GaussianParams { mean: m, var: 0.4 })
                    .collect(),
                channel: None,
                features: vec![],
                enabled: true,
            },
            SensorSpec {
                name: "b".into(),
                cost: 1.0,
                measurement: means
                    .iter()
                    .map(|&m| GaussianParams {
                        mean: 2.0 - m,
                        var: 0.3,
                    })
                    .collect(),
                channel: Some(
                    shapes
                        .iter()
                        .map(|&k| GammaParams {
                            shape: k,
                            scale: 0.2,
                        })
                        .collect(),
                ),
                features: vec![],
                enabled: true,
            },
        ],
        n_tot,
        sigma_ch: 0.05,
        sigma_noise: 0.05,
        min_samples: 0,
    }
}

fn scenario() -> impl Strategy<Value = (ScenarioConfig, Vec<f64>, u64)> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..3.0, n),
                prop::collection::vec(2.0f64..9.0, n),
                0.05f64..0.95,
                prop::collection::vec(0.01f64..1.0, n),
                any::<u64>(),
            )
        })
        .prop_map(|(means, shapes, stay, raw, seed)| {
            let s: f64 = raw.iter().sum();
            (
                config(&means, &shapes, stay, 4),
                raw.iter().map(|x| x / s).collect(),
                seed,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn update_matches_oracle((c, p, seed) in scenario(), na in 0u32..=2, nb in 0u32..=2) {
        let model = ObservationModel::new(&c, ChannelDesign::Intermediate);
        let belief = Belief::new(p).unwrap();
        let mut rng = Rng::new(seed);
        let state = (seed % c.n_states() as u64) as usize;
        let obs = sample_slot_observations(&mut rng, state, &Action(vec![na, nb]), &c).unwrap();
        for mask in [LikelihoodMask::Full, LikelihoodMask::MeasurementsOnly, LikelihoodMask::ChannelOnly] {
            let a = slot_update(&belief, &obs, &model, mask).unwrap();
            let b = joint_bayes_oracle(&belief, &obs, &model, mask).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
            prop_assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.probs().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn prediction_preserves_mass_and_fixes_stationary((c, p, _) in scenario()) {
        let q = predict(&Belief::new(p).unwrap(), &c.transition);
        prop_assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let pi = stationary_distribution(&c.transition);
        let next = predict(&Belief::new(pi.clone()).unwrap(), &c.transition);
        for (a, b) in next.probs().iter().zip(&pi) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn empty_slot_is_pure_prediction() {
    let c = config(&[0.0, 1.0], &[3.0, 5.0], 0.7, 2);
    let model = ObservationModel::new(&c, ChannelDesign::NonRobust);
    let b = Belief::new(vec![0.2, 0.8]).unwrap();
    let obs = sample_slot_observations(&mut Rng::new(1), 0, &Action(vec![0, 0]), &c).unwrap();
    assert_eq!(
        slot_update(&b, &obs, &model, LikelihoodMask::Full).unwrap(),
        predict(&b, &c.transition)
    );
}
