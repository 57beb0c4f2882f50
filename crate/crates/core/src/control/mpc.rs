//! Receding-horizon control: trajectory scoring against a dynamics model and
//! the controller that executes only the first planned action.

use ndarray::{s, Array2, ArrayView2, ArrayView3, Axis};

use crate::control::planner::{
    plan_cem, plan_mppi, plan_random_shooting, step_seed, ActionSequenceBuffer, PlannerConfig,
    Refill, SequenceEvaluator,
};
use crate::control::reward::RewardConfig;
use crate::control::rule::RuleBasedPolicy;
use crate::ensemble::Ensemble;
use crate::error::{check_dim, Error, Result};
use crate::sim::building::{step_zones, BuildingConfig};
use crate::sim::episode::{ControlContext, Controller};
use crate::state::{
    action_dim, building_dim, env_dim, Action, EnvironmentState, FullState, Transition,
    ZoneBuildingState, ZONE_DIM,
};

/// One-step building dynamics applied to a batch of states.
pub trait BatchDynamics {
    fn n_zones(&self) -> usize;

    /// Next building states (`K × 5N`) from building states (`K × 5N`) and
    /// actions (`K × 2N`) under a shared environment.
    fn step_batch(
        &self,
        building: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        env: &EnvironmentState,
    ) -> Result<Array2<f64>>;

    /// Hook for real transitions; learned models update their weights here.
    fn observe(&mut self, _transition: &Transition) -> Result<()> {
        Ok(())
    }
}

impl BatchDynamics for Ensemble {
    fn n_zones(&self) -> usize {
        Ensemble::n_zones(self)
    }

    fn step_batch(
        &self,
        building: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        env: &EnvironmentState,
    ) -> Result<Array2<f64>> {
        let n = self.n_zones();
        let (b, a, e) = (building_dim(n), action_dim(n), env_dim(n));
        check_dim(b, building.ncols())?;
        check_dim(a, actions.ncols())?;
        check_dim(building.nrows(), actions.nrows())?;
        let env_vec = env.to_vec();
        check_dim(e, env_vec.len())?;
        let mut x = Array2::zeros((building.nrows(), b + a + e));
        x.slice_mut(s![.., ..b]).assign(&building);
        x.slice_mut(s![.., b..b + a]).assign(&actions);
        x.slice_mut(s![.., b + a..]).assign(&ndarray::ArrayView1::from(&env_vec));
        self.predict_batch(x.view())
    }

    fn observe(&mut self, t: &Transition) -> Result<()> {
        self.record_observation(&t.state, &t.action, &t.next_state)
    }
}

/// The simulator's own physics, for planning with a perfect model.
impl BatchDynamics for BuildingConfig {
    fn n_zones(&self) -> usize {
        BuildingConfig::n_zones(self)
    }

    fn step_batch(
        &self,
        building: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        env: &EnvironmentState,
    ) -> Result<Array2<f64>> {
        let n = BuildingConfig::n_zones(self);
        check_dim(building_dim(n), building.ncols())?;
        check_dim(action_dim(n), actions.ncols())?;
        let mut out = Array2::zeros(building.raw_dim());
        for (i, (row, act)) in building.rows().into_iter().zip(actions.rows()).enumerate() {
            let zones: Vec<ZoneBuildingState> = row
                .to_vec()
                .chunks_exact(ZONE_DIM)
                .map(ZoneBuildingState::from_slice)
                .collect();
            let action = Action::from_slice(&act.to_vec())?;
            let next = step_zones(self, &zones, &action, env)?;
            for (z, state) in next.iter().enumerate() {
                out.slice_mut(s![i, z * ZONE_DIM..(z + 1) * ZONE_DIM])
                    .assign(&ndarray::ArrayView1::from(&state.to_array()));
            }
        }
        Ok(out)
    }
}

/// Scores action sequences by rolling them through `dynamics` from `s0`.
///
/// `forecast[k]` is the environment at step `k + 1`: the first transition
/// uses `s0.env` as input and each predicted state is scored with the
/// occupancy of the step it lands in.
pub struct RolloutEvaluator<'a, D: BatchDynamics + ?Sized> {
    pub dynamics: &'a D,
    pub s0: &'a FullState,
    pub forecast: &'a [EnvironmentState],
    pub reward: &'a RewardConfig,
}

impl<D: BatchDynamics + ?Sized> SequenceEvaluator for RolloutEvaluator<'_, D> {
    fn returns(&mut self, sequences: ArrayView3<'_, f64>, gamma: f64) -> Result<Vec<f64>> {
        let (k, h, a) = sequences.dim();
        check_dim(action_dim(self.dynamics.n_zones()), a)?;
        if self.forecast.len() < h {
            return Err(Error::InvalidInput(format!(
                "forecast covers {} steps, horizon is {h}",
                self.forecast.len()
            )));
        }
        let start = self.s0.building_vec();
        let mut building = Array2::from_shape_fn((k, start.len()), |(_, j)| start[j]);
        let mut returns = vec![0.0; k];
        let mut discount = 1.0;
        for t in 0..h {
            let env = if t == 0 { &self.s0.env } else { &self.forecast[t - 1] };
            let actions = sequences.index_axis(Axis(1), t).to_owned();
            building = self.dynamics.step_batch(building.view(), actions.view(), env)?;
            if building.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinitePrediction { step: t });
            }
            let occupancy = &self.forecast[t].occupancy;
            for (ret, row) in returns.iter_mut().zip(building.rows()) {
                let r = self
                    .reward
                    .reward_from_building_vec(row.as_slice().expect("row-major"), occupancy);
                *ret += discount * r;
            }
            discount *= gamma;
        }
        Ok(returns)
    }
}

/// `Σ_{t<H} γ^t r(ŝ_{t+1})` for one action sequence.
pub fn evaluate_sequence<D: BatchDynamics + ?Sized>(
    dynamics: &D,
    s0: &FullState,
    actions: &[Action],
    forecast: &[EnvironmentState],
    reward: &RewardConfig,
    gamma: f64,
) -> Result<f64> {
    let a = action_dim(dynamics.n_zones());
    let flat: Vec<f64> = actions.iter().flat_map(Action::to_vec).collect();
    check_dim(actions.len() * a, flat.len())?;
    let seqs = ArrayView3::from_shape((1, actions.len(), a), &flat).expect("shape checked");
    let mut eval = RolloutEvaluator {
        dynamics,
        s0,
        forecast,
        reward,
    };
    Ok(eval.returns(seqs, gamma)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    RandomShooting,
    Cem,
    Mppi,
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rs" => Ok(Self::RandomShooting),
            "cem" => Ok(Self::Cem),
            "mppi" => Ok(Self::Mppi),
            other => Err(Error::Config(format!("unknown planner `{other}`"))),
        }
    }
}

/// What the MPPI buffer holds in its freed slot after each shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefillPolicy {
    /// The rule-based action for the new last step.
    Rule,
    /// A copy of the previous last action.
    RepeatLast,
}

/// MPC over a [`BatchDynamics`] model. Random shooting and CEM plan from
/// scratch every step; MPPI keeps a warm-started buffer whose freed slot is
/// refilled with the rule-based action for that time.
pub struct MpcController<D> {
    pub dynamics: D,
    pub kind: PlannerKind,
    pub cfg: PlannerConfig,
    pub reward: RewardConfig,
    pub default_policy: RuleBasedPolicy,
    pub refill: RefillPolicy,
    buffer: Option<ActionSequenceBuffer>,
}

impl<D: BatchDynamics> MpcController<D> {
    pub fn new(dynamics: D, kind: PlannerKind, cfg: PlannerConfig, reward: RewardConfig) -> Result<Self> {
        cfg.validate()?;
        let n = dynamics.n_zones();
        check_dim(action_dim(n), cfg.action_dim())?;
        check_dim(n, reward.n_zones())?;
        Ok(Self {
            dynamics,
            kind,
            cfg,
            reward,
            default_policy: RuleBasedPolicy::campus(n),
            refill: RefillPolicy::Rule,
            buffer: None,
        })
    }

    pub fn buffer(&self) -> Option<&ActionSequenceBuffer> {
        self.buffer.as_ref()
    }

    fn default_sequence(&self, clock: &crate::sim::occupancy::SimClock) -> Array2<f64> {
        let h = self.cfg.horizon;
        let mut seq = Array2::zeros((h, self.cfg.action_dim()));
        for t in 0..h {
            let a = self.default_policy.default_action(&clock.offset(t)).to_vec();
            seq.row_mut(t).assign(&ndarray::ArrayView1::from(&a));
        }
        seq
    }

    /// Plans from `ctx` and returns the first action of the chosen sequence.
    pub fn mpc_step(&mut self, ctx: &ControlContext<'_>) -> Result<Action> {
        let h = self.cfg.horizon;
        if ctx.forecast.len() < h + 1 {
            return Err(Error::InvalidInput(format!(
                "controller needs {} forecast entries, got {}",
                h + 1,
                ctx.forecast.len()
            )));
        }
        let seed = step_seed(self.cfg.seed, ctx.clock.step);
        let mut eval = RolloutEvaluator {
            dynamics: &self.dynamics,
            s0: ctx.state,
            forecast: &ctx.forecast[1..=h],
            reward: &self.reward,
        };
        let first = match self.kind {
            PlannerKind::RandomShooting => {
                plan_random_shooting(&mut eval, &self.cfg, seed)?.sequence.row(0).to_vec()
            }
            PlannerKind::Cem => {
                let init = self.default_sequence(&ctx.clock);
                plan_cem(&mut eval, &self.cfg, init.view(), seed)?.sequence.row(0).to_vec()
            }
            PlannerKind::Mppi => {
                if self.buffer.is_none() {
                    let init = self.default_sequence(&ctx.clock);
                    self.buffer = Some(ActionSequenceBuffer::from_actions(init, Refill::RepeatLast)?);
                }
                let buffer = self.buffer.as_mut().expect("initialized above");
                buffer.refill = match self.refill {
                    RefillPolicy::Rule => Refill::Value(self.default_policy.default_action(&ctx.clock.offset(h)).to_vec()),
                    RefillPolicy::RepeatLast => Refill::RepeatLast,
                };
                plan_mppi(&mut eval, &self.cfg, buffer, seed)?.action
            }
        };
        Ok(self.default_policy.bounds.clamp(&Action::from_slice(&first)?))
    }
}

impl<D: BatchDynamics> Controller for MpcController<D> {
    fn act(&mut self, ctx: &ControlContext<'_>) -> Result<Action> {
        self.mpc_step(ctx)
    }

    fn observe(&mut self, transition: &Transition) -> Result<()> {
        self.dynamics.observe(transition)
    }

    fn forecast_horizon(&self) -> usize {
        self.cfg.horizon
    }
}
