#![allow(dead_code)]

use hvac_core::control::{FnEvaluator, PlannerConfig, SequenceEvaluator};
use hvac_core::sim::{BuildingConfig, ZoneParams};
use hvac_core::state::{EnvironmentState, WeatherSample};
use hvac_core::Result;
use ndarray::ArrayView3;

/// Returns of the scalar task `s' = s + a`, reward `-s'^2`, from `s0`.
pub fn quadratic_returns(s0: f64, seqs: ArrayView3<'_, f64>, gamma: f64) -> Result<Vec<f64>> {
    Ok(seqs
        .outer_iter()
        .map(|seq| {
            let (mut s, mut ret, mut disc) = (s0, 0.0, 1.0);
            for t in 0..seq.nrows() {
                s += seq[[t, 0]];
                ret -= disc * s * s;
                disc *= gamma;
            }
            ret
        })
        .collect())
}

pub fn quadratic(s0: f64) -> impl SequenceEvaluator {
    FnEvaluator(move |seqs: ArrayView3<'_, f64>, gamma| quadratic_returns(s0, seqs, gamma))
}

/// Scalar planner over `[-2, 2]`.
pub fn toy_config(samples: usize, horizon: usize) -> PlannerConfig {
    PlannerConfig {
        samples,
        horizon,
        gamma: 1.0,
        lambda: 0.1,
        sigma: vec![0.5],
        cem_sigma: vec![0.5],
        ..PlannerConfig::for_bounds(vec![(-2.0, 2.0)])
    }
}

/// Best action of the one-step task on a grid of spacing `step`.
pub fn grid_optimum(s0: f64, step: f64) -> f64 {
    let n = (4.0 / step).round() as i64;
    (0..=n)
        .map(|i| -2.0 + i as f64 * step)
        .min_by(|a, b| ((s0 + a) * (s0 + a)).total_cmp(&((s0 + b) * (s0 + b))))
        .unwrap()
}

pub fn calm_env(temp_out: f64, n_zones: usize) -> EnvironmentState {
    EnvironmentState {
        weather: WeatherSample {
            temp_out,
            rh_out: 0.4,
            ..WeatherSample::default()
        },
        occupancy: vec![false; n_zones],
    }
}

pub fn single_zone(capacitance: f64, r_out: f64) -> BuildingConfig {
    BuildingConfig::uniform(
        1,
        ZoneParams {
            capacitance,
            r_out,
            heat_capacity: 5.0,
            cool_capacity: 9.0,
            solar_aperture: 0.0,
            occupant_gain: 0.0,
        },
    )
}

/// Largest relative gap between the analytic gradient and central
/// differences with step `h`, over every parameter of a Xavier network.
pub fn gradient_check(dims: &[usize], batch: usize, seed: u64, h: f64) -> f64 {
    use hvac_core::dynamics::{loss, loss_and_gradient, xavier_init};
    use rand::{Rng, SeedableRng};

    let mut params = xavier_init(dims, seed).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    // non-zero biases so hidden units sit away from the kink at zero
    for layer in &mut params.layers {
        layer.b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let x = ndarray::Array2::from_shape_fn((batch, dims[0]), |_| rng.random_range(-1.0..1.0));
    let y = ndarray::Array2::from_shape_fn((batch, dims[dims.len() - 1]), |_| rng.random_range(-1.0..1.0));
    let (_, grad) = loss_and_gradient(&params, x.view(), y.view()).unwrap();
    let analytic: Vec<f64> = grad.iter().copied().collect();
    let mut worst: f64 = 0.0;
    for (i, g) in analytic.iter().enumerate() {
        let orig = *params.iter().nth(i).unwrap();
        *params.iter_mut().nth(i).unwrap() = orig + h;
        let up = loss(&params, x.view(), y.view()).unwrap();
        *params.iter_mut().nth(i).unwrap() = orig - h;
        let down = loss(&params, x.view(), y.view()).unwrap();
        *params.iter_mut().nth(i).unwrap() = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Full-batch epochs allowed for the 64-sample overfit check.
pub const OVERFIT_EPOCHS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toy {
    Rs,
    Cem,
    Mppi,
}

/// Mean `s²` over `steps` receding-horizon steps of the scalar task from
/// `s = 1`, re-planning every step with 200 rollouts: RS and MPPI draw
/// K = 200 once, CEM draws 40 in each of its 5 iterations.
pub fn toy_closed_loop(kind: Toy, seed: u64, horizon: usize, steps: usize) -> f64 {
    use hvac_core::control::{
        plan_cem, plan_mppi, plan_random_shooting, step_seed, ActionSequenceBuffer, Refill,
    };

    let cfg = toy_config(200, horizon);
    let mut buffer = ActionSequenceBuffer::constant(horizon, &[0.0], Refill::RepeatLast).unwrap();
    let (mut s, mut cost) = (1.0, 0.0);
    for t in 0..steps {
        let mut eval = quadratic(s);
        let plan_seed = step_seed(seed, t);
        let a = match kind {
            Toy::Rs => plan_random_shooting(&mut eval, &cfg, plan_seed).unwrap().sequence[[0, 0]],
            Toy::Cem => {
                let cem = hvac_core::control::PlannerConfig {
                    samples: cfg.samples / cfg.cem_iterations,
                    ..cfg.clone()
                };
                let init = ndarray::Array2::zeros((horizon, 1));
                plan_cem(&mut eval, &cem, init.view(), plan_seed).unwrap().sequence[[0, 0]]
            }
            Toy::Mppi => plan_mppi(&mut eval, &cfg, &mut buffer, plan_seed).unwrap().action[0],
        };
        s += a;
        cost += s * s;
    }
    cost / steps as f64
}

/// Final action of `iterations` one-step MPPI updates from `a = 0`.
pub fn toy_mppi_action(s0: f64, seed: u64, iterations: usize) -> f64 {
    use hvac_core::control::{plan_mppi, step_seed, ActionSequenceBuffer, Refill};

    let cfg = toy_config(200, 1);
    let mut buffer = ActionSequenceBuffer::constant(1, &[0.0], Refill::RepeatLast).unwrap();
    let mut eval = quadratic(s0);
    let mut a = 0.0;
    for i in 0..iterations {
        a = plan_mppi(&mut eval, &cfg, &mut buffer, step_seed(seed, i)).unwrap().action[0];
    }
    a
}
