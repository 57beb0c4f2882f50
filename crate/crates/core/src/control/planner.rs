//! Sampling-based trajectory optimizers: random shooting, CEM and MPPI.
//!
//! Planners only see a [`SequenceEvaluator`], which scores a batch of action
//! sequences (`K × H × A`) by discounted return. All randomness comes from the
//! plan seed: sample `k` draws from its own ChaCha stream, so results do not
//! depend on evaluation order.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::state::ActionBounds;

pub trait SequenceEvaluator {
    /// `Σ_t γ^t r_t` for every sequence in `sequences` (`K × H × A`).
    fn returns(&mut self, sequences: ArrayView3<'_, f64>, gamma: f64) -> Result<Vec<f64>>;
}

/// Adapts a closure to [`SequenceEvaluator`].
pub struct FnEvaluator<F>(pub F);

impl<F> SequenceEvaluator for FnEvaluator<F>
where
    F: FnMut(ArrayView3<'_, f64>, f64) -> Result<Vec<f64>>,
{
    fn returns(&mut self, sequences: ArrayView3<'_, f64>, gamma: f64) -> Result<Vec<f64>> {
        (self.0)(sequences, gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// K
    pub samples: usize,
    /// H
    pub horizon: usize,
    pub gamma: f64,
    /// MPPI temperature.
    pub lambda: f64,
    /// MPPI noise standard deviation per action dimension.
    pub sigma: Vec<f64>,
    pub cem_iterations: usize,
    pub elite_fraction: f64,
    /// Initial CEM standard deviation per action dimension.
    pub cem_sigma: Vec<f64>,
    /// Inclusive `(min, max)` per action dimension.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

/// CEM stops refitting once every standard deviation falls below this.
pub const CEM_MIN_STD: f64 = 1e-6;

impl PlannerConfig {
    /// Defaults: K = 1000, H = 20, γ = 0.99, λ = 1, MPPI σ at 10% and CEM σ
    /// at 25% of each dimension's range, 5 CEM iterations with 10% elites.
    pub fn for_bounds(bounds: Vec<(f64, f64)>) -> Self {
        let range = |f: f64| bounds.iter().map(|(lo, hi)| f * (hi - lo)).collect::<Vec<_>>();
        Self {
            samples: 1000,
            horizon: 20,
            gamma: 0.99,
            lambda: 1.0,
            sigma: range(0.1),
            cem_iterations: 5,
            elite_fraction: 0.1,
            cem_sigma: range(0.25),
            bounds,
            seed: 0,
        }
    }

    pub fn hvac(n_zones: usize) -> Self {
        Self::for_bounds(ActionBounds::default().per_dim(n_zones))
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.len()
    }

    /// `J = ⌈elite_fraction · K⌉`, at least 1.
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.samples as f64).ceil() as usize).clamp(1, self.samples)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.action_dim();
        check_dim(a, self.sigma.len())?;
        check_dim(a, self.cem_sigma.len())?;
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.samples == 0 || self.horizon == 0 {
            return bad("K and H must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        if !(self.lambda > 0.0) {
            return bad("MPPI temperature must be positive");
        }
        if self.sigma.iter().any(|s| !(*s > 0.0)) {
            return bad("MPPI noise must be positive");
        }
        if self.cem_sigma.iter().any(|s| !(*s >= 0.0)) {
            return bad("CEM initial deviation must be non-negative");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return bad("elite fraction must lie in (0, 1]");
        }
        if self.bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
            return bad("action bounds must satisfy min <= max");
        }
        Ok(())
    }

    fn clip_row(&self, row: &mut [f64]) {
        for (v, (lo, hi)) in row.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Independent stream for sample `k` of a plan call.
fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for control step `step` of a run seeded with `base`.
pub fn step_seed(base: u64, step: usize) -> u64 {
    base ^ (step as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Returned sequence plus its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// `H × A`
    pub sequence: Array2<f64>,
    /// Return of `sequence` where the planner evaluated it (random shooting),
    /// otherwise `None`.
    pub value: Option<f64>,
}

fn check_returns(returns: &[f64], k: usize) -> Result<()> {
    check_dim(k, returns.len())?;
    match returns.iter().position(|r| !r.is_finite()) {
        Some(sample) => Err(Error::NonFiniteCost { sample }),
        None => Ok(()),
    }
}

/// Index of the largest return; ties go to the lowest index.
fn argmax(returns: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in returns.iter().enumerate() {
        if r > returns[best] {
            best = i;
        }
    }
    best
}

/// Best of K sequences drawn uniformly within the bounds.
pub fn plan_random_shooting(eval: &mut dyn SequenceEvaluator, cfg: &PlannerConfig, seed: u64) -> Result<Plan> {
    cfg.validate()?;
    let (k, h, a) = (cfg.samples, cfg.horizon, cfg.action_dim());
    let mut seqs = Array3::zeros((k, h, a));
    for (i, mut seq) in seqs.outer_iter_mut().enumerate() {
        let mut rng = sample_rng(seed, i as u64);
        for mut step in seq.outer_iter_mut() {
            for (v, (lo, hi)) in step.iter_mut().zip(&cfg.bounds) {
                *v = rng.random_range(*lo..=*hi);
            }
        }
    }
    let returns = eval.returns(seqs.view(), cfg.gamma)?;
    check_returns(&returns, k)?;
    let best = argmax(&returns);
    Ok(Plan {
        sequence: seqs.index_axis(Axis(0), best).to_owned(),
        value: Some(returns[best]),
    })
}

/// Cross-entropy method: refit a diagonal Gaussian to the top `J` sequences
/// for `cem_iterations` rounds and return the final mean. Starts from
/// `init_mean` (`H × A`) with `cfg.cem_sigma`; stops early once the spread
/// collapses below [`CEM_MIN_STD`].
pub fn plan_cem(
    eval: &mut dyn SequenceEvaluator,
    cfg: &PlannerConfig,
    init_mean: ArrayView2<'_, f64>,
    seed: u64,
) -> Result<Plan> {
    cfg.validate()?;
    let (k, h, a) = (cfg.samples, cfg.horizon, cfg.action_dim());
    check_dim(h, init_mean.nrows())?;
    check_dim(a, init_mean.ncols())?;
    let mut mean = init_mean.to_owned();
    let mut std = Array2::from_shape_fn((h, a), |(_, j)| cfg.cem_sigma[j]);
    let n_elite = cfg.elite_count();
    let mut seqs = Array3::zeros((k, h, a));

    for iter in 0..cfg.cem_iterations {
        if std.iter().all(|s| *s < CEM_MIN_STD) {
            break;
        }
        for (i, mut seq) in seqs.outer_iter_mut().enumerate() {
            let mut rng = sample_rng(seed, (iter * k + i) as u64);
            for t in 0..h {
                for j in 0..a {
                    let z: f64 = rng.sample(StandardNormal);
                    seq[[t, j]] = mean[[t, j]] + std[[t, j]] * z;
                }
                cfg.clip_row(seq.index_axis_mut(Axis(0), t).as_slice_mut().expect("contiguous"));
            }
        }
        let returns = eval.returns(seqs.view(), cfg.gamma)?;
        check_returns(&returns, k)?;
        let mut order: Vec<usize> = (0..k).collect();
        // stable: equal returns keep index order
        order.sort_by(|&x, &y| returns[y].total_cmp(&returns[x]));
        let elites = seqs.select(Axis(0), &order[..n_elite]);
        mean = elites.mean_axis(Axis(0)).expect("at least one elite");
        std = elites.std_axis(Axis(0), 0.0);
    }
    Ok(Plan {
        sequence: mean,
        value: None,
    })
}

/// What MPPI writes into the freed last slot after shifting.
#[derive(Debug, Clone, PartialEq)]
pub enum Refill {
    /// A fixed action, e.g. the default controller's choice.
    Value(Vec<f64>),
    /// Repeat the previous last entry.
    RepeatLast,
}

/// MPPI's nominal control sequence, warm-started between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequenceBuffer {
    actions: Array2<f64>,
    pub refill: Refill,
}

impl ActionSequenceBuffer {
    /// Every step set to `init`.
    pub fn constant(horizon: usize, init: &[f64], refill: Refill) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if let Refill::Value(v) = &refill {
            check_dim(init.len(), v.len())?;
        }
        let a = init.len();
        Ok(Self {
            actions: Array2::from_shape_fn((horizon, a), |(_, j)| init[j]),
            refill,
        })
    }

    pub fn from_actions(actions: Array2<f64>, refill: Refill) -> Result<Self> {
        if actions.nrows() == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if let Refill::Value(v) = &refill {
            check_dim(actions.ncols(), v.len())?;
        }
        Ok(Self { actions, refill })
    }

    pub fn horizon(&self) -> usize {
        self.actions.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.actions.ncols()
    }

    pub fn actions(&self) -> ArrayView2<'_, f64> {
        self.actions.view()
    }

    pub fn first(&self) -> Vec<f64> {
        self.actions.row(0).to_vec()
    }

    /// Drops the first action and refills the tail.
    pub fn shift(&mut self) {
        let h = self.horizon();
        for t in 1..h {
            let next = self.actions.row(t).to_owned();
            self.actions.row_mut(t - 1).assign(&next);
        }
        if let Refill::Value(v) = &self.refill {
            self.actions.row_mut(h - 1).assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
    }
}

/// `ω_k = exp(−(C_k − β)/λ) / η`, `β = min_k C_k`, `η = Σ_k exp(−(C_k − β)/λ)`.
/// The minimum-cost sample contributes `exp(0) = 1`, so `η ≥ 1`.
pub fn mppi_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let beta = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = costs.iter().map(|c| (-(c - beta) / lambda).exp()).collect();
    let eta: f64 = w.iter().sum();
    w.iter().map(|v| v / eta).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiStep {
    /// Updated first action, to be executed.
    pub action: Vec<f64>,
    /// Sample weights ω.
    pub weights: Vec<f64>,
    /// Sample costs, `−return`.
    pub costs: Vec<f64>,
}

/// One MPPI iteration. Perturbs the buffer with Gaussian noise, clips each
/// perturbed action to the bounds, scores the K rollouts, updates the whole
/// sequence by the ω-weighted noise (the noise actually applied after
/// clipping), re-clips, returns the new first action and shifts the buffer.
pub fn plan_mppi(
    eval: &mut dyn SequenceEvaluator,
    cfg: &PlannerConfig,
    buffer: &mut ActionSequenceBuffer,
    seed: u64,
) -> Result<MppiStep> {
    cfg.validate()?;
    let (k, h, a) = (cfg.samples, cfg.horizon, cfg.action_dim());
    check_dim(h, buffer.horizon())?;
    check_dim(a, buffer.action_dim())?;
    let nominal = buffer.actions.clone();
    let mut seqs = Array3::zeros((k, h, a));
    for (i, mut seq) in seqs.outer_iter_mut().enumerate() {
        let mut rng = sample_rng(seed, i as u64);
        for t in 0..h {
            for j in 0..a {
                let eps: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.sigma[j];
                seq[[t, j]] = nominal[[t, j]] + eps;
            }
            cfg.clip_row(seq.index_axis_mut(Axis(0), t).as_slice_mut().expect("contiguous"));
        }
    }
    let returns = eval.returns(seqs.view(), cfg.gamma)?;
    check_returns(&returns, k)?;
    let costs: Vec<f64> = returns.iter().map(|r| -r).collect();
    let weights = mppi_weights(&costs, cfg.lambda);

    // fixed sample order keeps the reduction deterministic
    let mut update = Array2::<f64>::zeros((h, a));
    for (seq, &w) in seqs.outer_iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        update.scaled_add(w, &(&seq - &nominal));
    }
    let mut updated = nominal + update;
    for mut row in updated.rows_mut() {
        cfg.clip_row(row.as_slice_mut().expect("contiguous"));
    }
    buffer.actions = updated;
    let action = buffer.first();
    buffer.shift();
    Ok(MppiStep {
        action,
        weights,
        costs,
    })
}
