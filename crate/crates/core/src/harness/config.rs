//! Experiment configuration: flat `key = value` text, overridable key by key.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::control::mpc::{PlannerKind, RefillPolicy};
use crate::control::planner::PlannerConfig;
use crate::dynamics::train::TrainConfig;
use crate::error::{Error, Result};
use crate::harness::training::EnsembleTrainConfig;
use crate::sim::weather::{WeatherProfile, STEPS_PER_MONTH};

/// Two months of 15-minute steps.
pub const DEFAULT_WINDOW: usize = 2 * STEPS_PER_MONTH;
/// One week of 15-minute steps.
pub const DEFAULT_UPDATE_PERIOD: usize = 7 * 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Rule,
    Planner(PlannerKind),
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(Self::Rule),
            other => Ok(Self::Planner(other.parse()?)),
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rule => "rule",
            Self::Planner(PlannerKind::RandomShooting) => "rs",
            Self::Planner(PlannerKind::Cem) => "cem",
            Self::Planner(PlannerKind::Mppi) => "mppi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeatherSource {
    Synthetic(WeatherProfile),
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub weather: WeatherSource,
    /// Months of closed-loop control.
    pub months: usize,
    pub controller: ControllerKind,
    /// Seeds weather synthesis, occupancy and planning.
    pub seed: u64,
    /// Months of rule-based data collected before training.
    pub train_months: usize,
    /// Seed of the data-collection run (weather and occupancy).
    pub train_seed: u64,
    pub n_models: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Sliding-window capacity, transitions.
    pub window: usize,
    /// Steps between in-situ retrains; 0 disables them.
    pub update_period: usize,
    pub samples: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// MPPI noise as a fraction of each action range.
    pub sigma_fraction: f64,
    pub cem_iterations: usize,
    pub elite_fraction: f64,
    /// CEM initial spread as a fraction of each action range.
    pub cem_sigma_fraction: f64,
    pub refill: RefillPolicy,
    pub ensemble: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            weather: WeatherSource::Synthetic(WeatherProfile::FresnoJul),
            months: 1,
            controller: ControllerKind::Planner(PlannerKind::Mppi),
            seed: 0,
            train_months: 2,
            train_seed: 1,
            n_models: 5,
            epochs: 40,
            batch_size: 512,
            learning_rate: 1e-3,
            window: DEFAULT_WINDOW,
            update_period: DEFAULT_UPDATE_PERIOD,
            samples: 1000,
            horizon: 20,
            gamma: 0.99,
            lambda: 1.0,
            sigma_fraction: 0.1,
            cem_iterations: 5,
            elite_fraction: 0.1,
            cem_sigma_fraction: 0.25,
            refill: RefillPolicy::Rule,
            ensemble: None,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value}: {e}")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "profile" => self.weather = WeatherSource::Synthetic(value.parse()?),
            "weather_csv" => self.weather = WeatherSource::Csv(PathBuf::from(value)),
            "months" => self.months = parse(key, value)?,
            "controller" => self.controller = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "train_months" => self.train_months = parse(key, value)?,
            "train_seed" => self.train_seed = parse(key, value)?,
            "models" => self.n_models = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "update_period" => self.update_period = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "sigma_fraction" => self.sigma_fraction = parse(key, value)?,
            "cem_iterations" => self.cem_iterations = parse(key, value)?,
            "elite_fraction" => self.elite_fraction = parse(key, value)?,
            "cem_sigma_fraction" => self.cem_sigma_fraction = parse(key, value)?,
            "refill" => {
                self.refill = match value {
                    "rule" => RefillPolicy::Rule,
                    "repeat" => RefillPolicy::RepeatLast,
                    other => return Err(Error::Config(format!("unknown refill `{other}`"))),
                }
            }
            "ensemble" => self.ensemble = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys in `extra` are
    /// returned instead of applied, for callers with keys of their own.
    pub fn parse_text(text: &str, extra: &[&str]) -> Result<(Self, Vec<(String, String)>)> {
        let mut cfg = Self::default();
        let mut rest = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = key.trim();
            if extra.contains(&key) {
                rest.push((key.to_string(), value.trim().to_string()));
            } else {
                cfg.set(key, value)
                    .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
            }
        }
        Ok((cfg, rest))
    }

    pub fn load(path: &Path, extra: &[&str]) -> Result<(Self, Vec<(String, String)>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, extra)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < self.batch_size {
            return Err(Error::Config(format!(
                "window ({}) must hold at least one batch ({})",
                self.window, self.batch_size
            )));
        }
        if self.update_period > self.window {
            return Err(Error::Config(format!(
                "update period ({}) exceeds window ({})",
                self.update_period, self.window
            )));
        }
        if self.n_models == 0 {
            return Err(Error::Config("models must be at least 1".into()));
        }
        self.planner_config(0).validate()?;
        self.ensemble_train_config(0).train.validate()
    }

    /// Planner settings for a building with `n_zones` zones; 0 means five.
    pub fn planner_config(&self, n_zones: usize) -> PlannerConfig {
        let n = if n_zones == 0 { 5 } else { n_zones };
        let base = PlannerConfig::hvac(n);
        let frac = |f: f64| base.bounds.iter().map(|(lo, hi)| f * (hi - lo)).collect();
        PlannerConfig {
            samples: self.samples,
            horizon: self.horizon,
            gamma: self.gamma,
            lambda: self.lambda,
            sigma: frac(self.sigma_fraction),
            cem_iterations: self.cem_iterations,
            elite_fraction: self.elite_fraction,
            cem_sigma: frac(self.cem_sigma_fraction),
            seed: self.seed,
            ..base
        }
    }

    pub fn ensemble_train_config(&self, seed: u64) -> EnsembleTrainConfig {
        EnsembleTrainConfig {
            n_models: self.n_models,
            seed,
            train: TrainConfig {
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                epochs: self.epochs,
                seed,
                ..TrainConfig::default()
            },
            ..EnsembleTrainConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# comment\nprofile = chicago_jan\ncontroller = cem  # trailing\nsamples = 64\nrefill = repeat\n";
        let (mut cfg, rest) = ExperimentConfig::parse_text(text, &[]).unwrap();
        assert_eq!(cfg.weather, WeatherSource::Synthetic(WeatherProfile::ChicagoJan));
        assert_eq!(cfg.controller, ControllerKind::Planner(PlannerKind::Cem));
        assert_eq!(cfg.samples, 64);
        assert_eq!(cfg.refill, RefillPolicy::RepeatLast);
        assert!(rest.is_empty());
        cfg.set("samples", "32").unwrap();
        assert_eq!(cfg.samples, 32);
    }

    #[test]
    fn extra_keys_and_errors() {
        let (_, rest) = ExperimentConfig::parse_text("controllers = rule,mppi\n", &["controllers"]).unwrap();
        assert_eq!(rest, vec![("controllers".to_string(), "rule,mppi".to_string())]);
        assert!(ExperimentConfig::parse_text("bogus = 1", &[]).is_err());
        assert!(ExperimentConfig::parse_text("samples 3", &[]).is_err());
        assert!(ExperimentConfig::parse_text("samples = x", &[]).is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.window, 5952);
        assert_eq!(cfg.update_period, 672);
        let bad = ExperimentConfig {
            update_period: 10_000,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }
}
