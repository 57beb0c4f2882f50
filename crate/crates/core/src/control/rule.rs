//! Schedule-driven thermostat policy used for data collection and as baseline.

use crate::error::Result;
use crate::sim::episode::{ControlContext, Controller};
use crate::sim::occupancy::SimClock;
use crate::state::{fahrenheit_to_celsius, Action, ActionBounds, Setpoint};

/// Warm-up lasts the first hour after the building opens.
pub const WARMUP_HOURS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBasedPolicy {
    pub n_zones: usize,
    /// Building hours on weekdays, `[open, close)`.
    pub open_hour: f64,
    pub close_hour: f64,
    pub warmup_hours: f64,
    pub warmup: Setpoint,
    pub occupied: Setpoint,
    pub setback: Setpoint,
    /// In the hour before opening, a zone this far (°C) outside the warm-up
    /// band starts warm-up early.
    pub early_start_gap: f64,
    pub bounds: ActionBounds,
}

fn sp_f(heat: f64, cool: f64) -> Setpoint {
    Setpoint {
        heat: fahrenheit_to_celsius(heat),
        cool: fahrenheit_to_celsius(cool),
    }
}

impl RuleBasedPolicy {
    /// Weekdays 07:00-19:00 at 70/74 °F (the first hour is warm-up);
    /// otherwise setback to 65/80 °F.
    pub fn campus(n_zones: usize) -> Self {
        Self {
            n_zones,
            open_hour: 7.0,
            close_hour: 19.0,
            warmup_hours: WARMUP_HOURS,
            warmup: sp_f(70.0, 74.0),
            occupied: sp_f(70.0, 74.0),
            setback: sp_f(65.0, 80.0),
            early_start_gap: 2.0,
            bounds: ActionBounds::default(),
        }
    }

    fn building_open(&self, clock: &SimClock) -> bool {
        let h = clock.hour();
        !clock.is_weekend() && h >= self.open_hour && h < self.close_hour
    }

    fn in_warmup(&self, clock: &SimClock) -> bool {
        let h = clock.hour();
        self.building_open(clock) && h < self.open_hour + self.warmup_hours
    }

    fn pre_open(&self, clock: &SimClock) -> bool {
        let h = clock.hour();
        !clock.is_weekend() && h >= self.open_hour - self.warmup_hours && h < self.open_hour
    }

    /// Setpoint for a zone ignoring its temperature.
    pub fn scheduled(&self, clock: &SimClock) -> Setpoint {
        if self.in_warmup(clock) {
            self.warmup
        } else if self.building_open(clock) {
            self.occupied
        } else {
            self.setback
        }
    }

    /// Schedule-only action, used where no zone temperatures exist (planner
    /// initialization).
    pub fn default_action(&self, clock: &SimClock) -> Action {
        let sp = self.scheduled(clock);
        self.bounds.clamp(&Action {
            setpoints: vec![sp; self.n_zones],
        })
    }

    pub fn act(&self, clock: &SimClock, zone_temps: &[f64]) -> Action {
        let scheduled = self.scheduled(clock);
        let early = self.pre_open(clock);
        let setpoints = (0..self.n_zones)
            .map(|i| {
                let t = zone_temps.get(i).copied().unwrap_or(f64::NAN);
                let far = t > self.warmup.cool + self.early_start_gap || t < self.warmup.heat - self.early_start_gap;
                if early && far {
                    self.warmup
                } else {
                    scheduled
                }
            })
            .collect();
        self.bounds.clamp(&Action { setpoints })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleController {
    pub policy: RuleBasedPolicy,
}

impl RuleController {
    pub fn new(n_zones: usize) -> Self {
        Self {
            policy: RuleBasedPolicy::campus(n_zones),
        }
    }
}

impl Controller for RuleController {
    fn act(&mut self, ctx: &ControlContext<'_>) -> Result<Action> {
        let temps: Vec<f64> = ctx.state.zones.iter().map(|z| z.temp_in).collect();
        Ok(self.policy.act(&ctx.clock, &temps))
    }
}
