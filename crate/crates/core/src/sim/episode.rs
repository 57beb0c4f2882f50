//! Closed-loop simulation.

use crate::control::reward::{reward, RewardConfig};
use crate::error::{check_dim, Error, Result};
use crate::sim::building::{step_zones, BuildingConfig};
use crate::sim::comfort::compute_pmv;
use crate::sim::occupancy::{OccupancySchedule, SimClock};
use crate::sim::weather::{WeatherSeries, STEPS_PER_MONTH};
use crate::state::{Action, EnvironmentState, FullState, Transition, ZoneBuildingState};

pub const INITIAL_TEMP: f64 = 23.0;
pub const INITIAL_RH: f64 = 0.45;

/// What a controller sees at each step.
#[derive(Debug)]
pub struct ControlContext<'a> {
    pub clock: SimClock,
    pub state: &'a FullState,
    /// Ground-truth environment for steps `t, t+1, ..., t+horizon`.
    pub forecast: &'a [EnvironmentState],
}

pub trait Controller {
    fn act(&mut self, ctx: &ControlContext<'_>) -> Result<Action>;

    /// Called with every real transition after it happens.
    fn observe(&mut self, _transition: &Transition) -> Result<()> {
        Ok(())
    }

    /// Number of future environment steps the controller wants in its forecast.
    fn forecast_horizon(&self) -> usize {
        0
    }
}

/// The ground-truth building plus its exogenous inputs.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: BuildingConfig,
    weather: WeatherSeries,
    occupancy: Vec<Vec<bool>>,
    state: FullState,
    step: usize,
}

impl Simulator {
    pub fn new(config: BuildingConfig, weather: WeatherSeries, occupancy: Vec<Vec<bool>>) -> Result<Self> {
        config.validate()?;
        if weather.is_empty() || occupancy.is_empty() {
            return Err(Error::InvalidInput("weather and occupancy must be non-empty".into()));
        }
        for flags in &occupancy {
            check_dim(config.n_zones(), flags.len())?;
        }
        let pmv = compute_pmv(INITIAL_TEMP, INITIAL_RH, &config.comfort)?;
        let zones = vec![
            ZoneBuildingState {
                temp_in: INITIAL_TEMP,
                rh_in: INITIAL_RH,
                pmv,
                heat_energy: 0.0,
                cool_energy: 0.0,
            };
            config.n_zones()
        ];
        let mut sim = Self {
            config,
            weather,
            occupancy,
            state: FullState {
                zones,
                env: EnvironmentState::default(),
            },
            step: 0,
        };
        sim.state.env = sim.env_at(0);
        Ok(sim)
    }

    pub fn with_schedule(
        config: BuildingConfig,
        weather: WeatherSeries,
        schedule: &OccupancySchedule,
        seed: u64,
    ) -> Result<Self> {
        let steps_per_day = config.steps_per_day();
        let occupancy = schedule.realize(weather.len(), steps_per_day, seed);
        Self::new(config, weather, occupancy)
    }

    pub fn config(&self) -> &BuildingConfig {
        &self.config
    }

    pub fn state(&self) -> &FullState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn clock(&self) -> SimClock {
        SimClock::new(self.step, self.config.steps_per_day())
    }

    pub fn weather(&self) -> &WeatherSeries {
        &self.weather
    }

    /// Exogenous environment at `step`; steps past the end hold the last value.
    pub fn env_at(&self, step: usize) -> EnvironmentState {
        EnvironmentState {
            weather: self.weather.at(step),
            occupancy: self.occupancy[step.min(self.occupancy.len() - 1)].clone(),
        }
    }

    /// Environment for `t..=t+horizon`.
    pub fn forecast(&self, horizon: usize) -> Vec<EnvironmentState> {
        (self.step..=self.step + horizon).map(|s| self.env_at(s)).collect()
    }

    pub fn step(&mut self, action: &Action) -> Result<Transition> {
        let zones = step_zones(&self.config, &self.state.zones, action, &self.state.env)?;
        let next_state = FullState {
            zones,
            env: self.env_at(self.step + 1),
        };
        let transition = Transition {
            state: std::mem::replace(&mut self.state, next_state.clone()),
            action: action.clone(),
            next_state,
            step: self.step,
        };
        self.step += 1;
        Ok(transition)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub transitions: Vec<Transition>,
    /// Reward of each transition, scored on the resulting state.
    pub rewards: Vec<f64>,
}

/// Runs `controller` in closed loop for `n_steps` steps.
pub fn rollout_steps(
    controller: &mut dyn Controller,
    sim: &mut Simulator,
    n_steps: usize,
) -> Result<EpisodeTrace> {
    let reward_cfg = RewardConfig::for_building(sim.config())?;
    let mut trace = EpisodeTrace::default();
    for _ in 0..n_steps {
        let step = sim.step_index();
        let forecast = sim.forecast(controller.forecast_horizon());
        let ctx = ControlContext {
            clock: sim.clock(),
            state: sim.state(),
            forecast: &forecast,
        };
        let action = controller.act(&ctx).map_err(|e| Error::Controller {
            step,
            source: Box::new(e),
        })?;
        let transition = sim.step(&action)?;
        controller.observe(&transition).map_err(|e| Error::Controller {
            step,
            source: Box::new(e),
        })?;
        let r = reward(
            &transition.next_state.zones,
            &transition.next_state.env.occupancy,
            &reward_cfg,
        )?;
        trace.rewards.push(r);
        trace.transitions.push(transition);
    }
    Ok(trace)
}

/// Fresh simulator over `weather`, occupancy realized from `schedule` with
/// `seed`, and a closed-loop run of `months` 2976-step months.
pub fn rollout_episode(
    controller: &mut dyn Controller,
    config: &BuildingConfig,
    weather: &WeatherSeries,
    schedule: &OccupancySchedule,
    seed: u64,
    months: usize,
) -> Result<EpisodeTrace> {
    let n_steps = months * STEPS_PER_MONTH;
    if weather.len() < n_steps {
        return Err(Error::InvalidInput(format!(
            "weather has {} steps, episode needs {n_steps}",
            weather.len()
        )));
    }
    let mut sim = Simulator::with_schedule(config.clone(), weather.clone(), schedule, seed)?;
    rollout_steps(controller, &mut sim, n_steps)
}
