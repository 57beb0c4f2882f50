use hvac_core::control::{evaluate_sequence, BatchDynamics, RewardConfig, RuleController};
use hvac_core::dynamics::fit_norm_stats;
use hvac_core::dynamics::model::DynamicsModel;
use hvac_core::ensemble::{compute_weights, discounted_mse, Ensemble};
use hvac_core::sim::{
    rollout_episode, step_zones, synthesize_weather, BuildingConfig, OccupancySchedule, WeatherProfile,
};
use hvac_core::state::{Action, Transition};
use ndarray::Array2;
use proptest::prelude::*;

fn month(seed: u64) -> Vec<Transition> {
    let b = BuildingConfig::five_zone_office();
    let w = synthesize_weather(WeatherProfile::FresnoJul, 1, seed).unwrap();
    rollout_episode(&mut RuleController::new(5), &b, &w, &OccupancySchedule::office(5), seed, 1)
        .unwrap()
        .transitions
}

fn small_ensemble(data: &[Transition], seeds: &[u64]) -> Ensemble {
    let (i, t) = fit_norm_stats(data).unwrap();
    let models = seeds
        .iter()
        .map(|&s| DynamicsModel::xavier(5, &[16, 16], s, i.clone(), t.clone()).unwrap())
        .collect();
    Ensemble::new(models, seeds.to_vec(), 4, 0.9).unwrap()
}

#[test]
fn age_discounted_mse_example() {
    assert_eq!(discounted_mse(&[1.0, 4.0], 0.9).unwrap(), 4.41);
    assert_eq!(discounted_mse(&[], 0.9), None);
}

#[test]
fn weight_examples() {
    assert_eq!(compute_weights(&[1.0, 3.0]), vec![1.0, 0.0]);
    let w = compute_weights(&[1.0, 2.0, 3.0]);
    assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
    assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(w[2], 0.0);
    assert_eq!(compute_weights(&[2.0, 2.0, 2.0]), vec![1.0 / 3.0; 3]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn weights_form_a_probability_vector(mse in proptest::collection::vec(0.0f64..100.0, 1..10)) {
        let w = compute_weights(&mse);
        prop_assert_eq!(w.len(), mse.len());
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        let best = mse.iter().copied().fold(f64::INFINITY, f64::min);
        let top = w.iter().copied().fold(0.0, f64::max);
        for (m, v) in mse.iter().zip(&w) {
            if *m == best {
                prop_assert_eq!(*v, top);
            } else if mse.iter().filter(|x| **x == best).count() == 1 {
                prop_assert!(*v < top);
            }
        }
    }

    #[test]
    fn equal_errors_give_uniform_weights(v in 0.0f64..100.0, m in 1usize..10) {
        prop_assert_eq!(compute_weights(&vec![v; m]), vec![1.0 / m as f64; m]);
    }

    #[test]
    fn weights_follow_model_order(mse in proptest::collection::vec(0.0f64..10.0, 2..8), rot in 0usize..8) {
        let w = compute_weights(&mse);
        let r = rot % mse.len();
        let mut rotated = mse.clone();
        rotated.rotate_left(r);
        let mut expected = w.clone();
        expected.rotate_left(r);
        let got = compute_weights(&rotated);
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn ring_buffer_keeps_last_errors_and_reweights() {
    let data = month(21);
    let mut ens = small_ensemble(&data, &[1, 2, 3]);
    assert_eq!(ens.weights(), &[1.0 / 3.0; 3]);
    assert_eq!(ens.mse(), None);
    for t in &data[..10] {
        ens.record_observation(&t.state, &t.action, &t.next_state).unwrap();
    }
    let mse = ens.mse().unwrap();
    for (i, m) in mse.iter().enumerate() {
        let errors = ens.errors(i);
        assert_eq!(errors.len(), 4);
        assert_eq!(discounted_mse(&errors, 0.9).unwrap(), *m);
    }
    assert_eq!(ens.weights(), compute_weights(&mse).as_slice());
    // the last error recorded is the one for the most recent transition
    let t = &data[9];
    let model = &ens.models()[0];
    let pred = model
        .predict_next(&t.state.building_vec(), &t.action.to_vec(), &t.state.env.to_vec())
        .unwrap();
    assert_eq!(ens.errors(0)[3], model.standardized_sq_error(&pred, &t.next_state.building_vec()));
}

#[test]
fn prediction_is_a_convex_combination() {
    let data = month(22);
    let mut ens = small_ensemble(&data, &[4, 5, 6]);
    for t in &data[200..206] {
        ens.record_observation(&t.state, &t.action, &t.next_state).unwrap();
    }
    for t in data.iter().step_by(97) {
        let (b, a, e) = (t.state.building_vec(), t.action.to_vec(), t.state.env.to_vec());
        let combined = ens.predict(&b, &a, &e).unwrap();
        let each: Vec<Vec<f64>> = ens.models().iter().map(|m| m.predict_next(&b, &a, &e).unwrap()).collect();
        for (j, v) in combined.iter().enumerate() {
            let lo = each.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
            let hi = each.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
            assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
        }
    }
}

#[test]
fn degenerate_weightings_reduce_to_single_models() {
    let data = month(23);
    let t = &data[500];
    let (b, a, e) = (t.state.building_vec(), t.action.to_vec(), t.state.env.to_vec());

    let single = small_ensemble(&data, &[9]);
    assert_eq!(single.predict(&b, &a, &e).unwrap(), single.models()[0].predict_next(&b, &a, &e).unwrap());

    let mut pair = small_ensemble(&data, &[9, 10]);
    pair.set_weights(vec![1.0, 0.0]).unwrap();
    assert_eq!(pair.predict(&b, &a, &e).unwrap(), pair.models()[0].predict_next(&b, &a, &e).unwrap());

    pair.set_weights(vec![0.5, 0.5]).unwrap();
    let x = pair.models()[0].predict_next(&b, &a, &e).unwrap();
    let y = pair.models()[1].predict_next(&b, &a, &e).unwrap();
    for ((v, x), y) in pair.predict(&b, &a, &e).unwrap().iter().zip(&x).zip(&y) {
        assert!((v - (x + y) / 2.0).abs() < 1e-12);
    }
    assert!(pair.set_weights(vec![0.7, 0.7]).is_err());
}

#[test]
fn rollout_iterates_predict_with_the_forecast() {
    let data = month(24);
    let ens = small_ensemble(&data, &[1, 2]);
    let s0 = &data[300].state;
    let actions: Vec<Action> = data[300..305].iter().map(|t| t.action.clone()).collect();
    let forecast: Vec<_> = data[300..305].iter().map(|t| t.next_state.env.clone()).collect();
    assert!(ens.rollout(s0, &[], &[]).unwrap().is_empty());
    let states = ens.rollout(s0, &actions, &forecast).unwrap();
    assert_eq!(states.len(), 5);
    let mut current = s0.clone();
    for (k, (a, env)) in actions.iter().zip(&forecast).enumerate() {
        let next = ens
            .predict(&current.building_vec(), &a.to_vec(), &current.env.to_vec())
            .unwrap();
        current = current.with_building_vec(&next, env.clone());
        assert_eq!(states[k], current);
    }
    assert!(ens.rollout(s0, &actions, &forecast[..4]).is_err());
}

#[test]
fn perfect_model_rollout_matches_the_simulator() {
    let b = BuildingConfig::five_zone_office();
    let data = month(25);
    let reward = RewardConfig::for_building(&b).unwrap();
    for start in [0, 1000, 2100] {
        let s0 = &data[start].state;
        let actions: Vec<Action> = data[start..start + 5].iter().map(|t| t.action.clone()).collect();
        let forecast: Vec<_> = data[start..start + 5].iter().map(|t| t.next_state.env.clone()).collect();

        let mut building = Array2::from_shape_vec((1, 25), s0.building_vec()).unwrap();
        let mut zones = s0.zones.clone();
        let mut env = s0.env.clone();
        let mut expected_return = 0.0;
        for (k, a) in actions.iter().enumerate() {
            let row = Array2::from_shape_vec((1, 10), a.to_vec()).unwrap();
            building = b.step_batch(building.view(), row.view(), &env).unwrap();
            zones = step_zones(&b, &zones, a, &env).unwrap();
            let flat: Vec<f64> = zones.iter().flat_map(|z| z.to_array()).collect();
            assert_eq!(building.row(0).to_vec(), flat);
            // recorded transitions came from the same physics
            assert_eq!(flat, data[start + k].next_state.building_vec());
            expected_return += 0.5f64.powi(k as i32) * reward.reward_from_building_vec(&flat, &forecast[k].occupancy);
            env = forecast[k].clone();
        }
        let ret = evaluate_sequence(&b, s0, &actions, &forecast, &reward, 0.5).unwrap();
        assert!((ret - expected_return).abs() < 1e-12);
    }
}

#[test]
fn saved_ensemble_round_trips() {
    let data = month(26);
    let mut ens = small_ensemble(&data, &[3, 1, 4]);
    for t in &data[..3] {
        ens.record_observation(&t.state, &t.action, &t.next_state).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    ens.save(dir.path()).unwrap();
    let back = Ensemble::load(dir.path()).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back.seeds(), &[3, 1, 4]);
    assert_eq!(back.history(), 4);
    assert_eq!(back.discount(), 0.9);
    assert_eq!(back.models(), ens.models());
    std::fs::remove_file(dir.path().join("model_2.txt")).unwrap();
    assert!(Ensemble::load(dir.path()).is_err());
}
