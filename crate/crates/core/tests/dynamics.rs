mod common;

use hvac_core::control::RuleController;
use hvac_core::dataset::split_train_val;
use hvac_core::dynamics::model::DEFAULT_HIDDEN;
use hvac_core::dynamics::{
    fit_norm_stats, loss, train, training_set, xavier_init, DynamicsModel, MlpParams, TrainConfig,
};
use hvac_core::sim::{rollout_episode, synthesize_weather, BuildingConfig, OccupancySchedule, WeatherProfile};
use hvac_core::state::{building_dim, Transition};
use ndarray::{s, Array2};
use proptest::prelude::*;

fn month(seed: u64) -> Vec<Transition> {
    let b = BuildingConfig::five_zone_office();
    let w = synthesize_weather(WeatherProfile::FresnoJul, 1, seed).unwrap();
    let sched = OccupancySchedule::office(5);
    rollout_episode(&mut RuleController::new(5), &b, &w, &sched, seed, 1)
        .unwrap()
        .transitions
}

#[test]
fn gradients_match_finite_differences_on_small_net() {
    for seed in 0..20 {
        let worst = common::gradient_check(&[4, 8, 8, 3], 10, seed, 1e-5);
        assert!(worst < 1e-4, "seed {seed}: {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn gradients_match_on_random_architectures(
        input in 1usize..6,
        hidden in proptest::collection::vec(1usize..7, 0..3),
        output in 1usize..4,
        batch in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut dims = vec![input];
        dims.extend(hidden);
        dims.push(output);
        let worst = common::gradient_check(&dims, batch, seed, 1e-5);
        prop_assert!(worst < 1e-4, "{dims:?}: {worst}");
    }
}

#[test]
fn output_is_building_state_only() {
    let data = month(5);
    let (i, t) = fit_norm_stats(&data).unwrap();
    let m = DynamicsModel::xavier(5, &DEFAULT_HIDDEN, 1, i, t).unwrap();
    assert_eq!(m.params.output_dim(), building_dim(5));
    assert_eq!(m.params.input_dim(), 47);
    let d = &data[10];
    let b = d.state.building_vec();
    let next = m.predict_next(&b, &d.action.to_vec(), &d.state.env.to_vec()).unwrap();
    assert_eq!(next.len(), 25);
    let again = m.predict_next(&b, &d.action.to_vec(), &d.state.env.to_vec()).unwrap();
    assert_eq!(next, again);
}

#[test]
fn validation_loss_drops_within_five_epochs() {
    let data = month(11);
    let (tr, va) = split_train_val(&data, 0.8, 0).unwrap();
    let (i, t) = fit_norm_stats(&tr).unwrap();
    let train_set = training_set(&tr, &i, &t).unwrap();
    let val_set = training_set(&va, &i, &t).unwrap();
    let mut p = xavier_init(&[47, 200, 200, 25], 3).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        seed: 3,
        ..TrainConfig::default()
    };
    let curve = train(&mut p, &train_set, Some(&val_set), &cfg).unwrap();
    assert_eq!(curve.epochs().len(), 5);
    assert!(curve.last().val.unwrap() < curve.initial().val.unwrap());

    let mut q = xavier_init(&[47, 200, 200, 25], 3).unwrap();
    let again = train(&mut q, &train_set, Some(&val_set), &cfg).unwrap();
    assert_eq!(curve, again);
    assert_eq!(p, q);
}

#[test]
fn single_batch_overfits() {
    let data = month(12);
    let batch: Vec<_> = data.iter().step_by(46).take(64).cloned().collect();
    let (i, t) = fit_norm_stats(&batch).unwrap();
    let set = training_set(&batch, &i, &t).unwrap();
    let mut p = xavier_init(&[47, 200, 200, 25], 8).unwrap();
    let cfg = TrainConfig {
        epochs: common::OVERFIT_EPOCHS,
        batch_size: 64,
        seed: 8,
        ..TrainConfig::default()
    };
    let curve = train(&mut p, &set, None, &cfg).unwrap();
    // one batch per epoch, so each entry is the full-set loss before that step
    let first = curve.epochs().iter().find(|e| e.train < 1e-3);
    assert!(first.is_some(), "best {:?}", curve.epochs().iter().map(|e| e.train).fold(f64::INFINITY, f64::min));
    assert!(curve.last().train < 1e-2);
}

#[test]
fn zero_network_is_identity_on_state() {
    let data = month(13);
    let (i, t) = fit_norm_stats(&data).unwrap();
    let zero = MlpParams::zeros(&[47, 8, 25]).unwrap();
    let m = DynamicsModel::new(5, zero, i, t.clone()).unwrap();
    let d = &data[100];
    let b = d.state.building_vec();
    let next = m.predict_next(&b, &d.action.to_vec(), &d.state.env.to_vec()).unwrap();
    // zero standardized delta decodes to the mean delta
    for ((n, s), mean) in next.iter().zip(&b).zip(&t.mean) {
        assert!((n - s - mean).abs() < 1e-12);
    }
}

#[test]
fn saved_model_predicts_identically() {
    let data = month(14);
    let (i, t) = fit_norm_stats(&data).unwrap();
    let m = DynamicsModel::xavier(5, &[16, 16], 2, i, t).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    m.save(&path).unwrap();
    let back = DynamicsModel::load(&path).unwrap();
    assert_eq!(back, m);
    let x = Array2::from_shape_fn((4, 47), |(r, c)| (r * 47 + c) as f64 * 0.01);
    assert_eq!(back.predict_next_batch(x.view()).unwrap(), m.predict_next_batch(x.view()).unwrap());
    std::fs::write(&path, std::fs::read_to_string(&path).unwrap().replacen("layer 1", "layer 7", 1)).unwrap();
    assert!(DynamicsModel::load(&path).is_err());
}

#[test]
fn doubling_residuals_quadruples_loss() {
    let p = xavier_init(&[3, 4, 2], 1).unwrap();
    let x = Array2::from_shape_fn((5, 3), |(r, c)| (r as f64 - c as f64) * 0.3);
    let f = p.forward_batch(x.view()).unwrap();
    let y1 = &f + 0.25;
    let y2 = &f + 0.5;
    let l1 = loss(&p, x.view(), y1.view()).unwrap();
    let l2 = loss(&p, x.view(), y2.view()).unwrap();
    assert!((l2 - 4.0 * l1).abs() < 1e-12);
    assert_eq!(loss(&p, x.view(), f.view()).unwrap(), 0.0);
    assert_eq!(f.slice(s![.., ..]).dim(), (5, 2));
}
