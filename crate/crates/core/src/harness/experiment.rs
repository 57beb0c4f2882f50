//! Data collection, closed-loop runs with in-situ retraining, the
//! collect → train → run pipeline, and controller comparison.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use crate::control::mpc::MpcController;
use crate::control::planner::step_seed;
use crate::control::reward::RewardConfig;
use crate::control::rule::RuleController;
use crate::dataset::Dataset;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::harness::config::{ControllerKind, ExperimentConfig, WeatherSource};
use crate::harness::metrics::{
    compute_metrics, results_from_trace, write_metrics_csv, write_results_csv, MetricsReport,
    ResultRow,
};
use crate::harness::training::{train_ensemble, write_loss_curves, LOSS_CURVES_FILE};
use crate::sim::building::BuildingConfig;
use crate::sim::episode::{rollout_steps, EpisodeTrace, Simulator};
use crate::sim::occupancy::OccupancySchedule;
use crate::sim::weather::{load_weather_csv, synthesize_weather, WeatherSeries, STEPS_PER_MONTH};
use crate::state::Transition;

pub const DATASET_FILE: &str = "dataset.csv";
pub const ENSEMBLE_DIR: &str = "ensemble";
pub const RESULTS_FILE: &str = "results.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Occupancy draws use their own stream so they do not mirror the weather noise.
const OCCUPANCY_SEED_XOR: u64 = 0x6F63_6375_7061_6E74;

/// The five-zone office, dressed for the configured climate.
pub fn building_for(cfg: &ExperimentConfig) -> BuildingConfig {
    let mut b = BuildingConfig::five_zone_office();
    if let WeatherSource::Synthetic(p) = cfg.weather {
        b.comfort = p.comfort();
    }
    b
}

pub fn weather_for(cfg: &ExperimentConfig) -> Result<WeatherSeries> {
    let w = match &cfg.weather {
        WeatherSource::Synthetic(p) => synthesize_weather(*p, cfg.months, cfg.seed)?,
        WeatherSource::Csv(path) => load_weather_csv(path)?,
    };
    let need = cfg.months * STEPS_PER_MONTH;
    if w.len() < need {
        return Err(Error::InvalidInput(format!(
            "weather has {} steps, {} months need {need}",
            w.len(),
            cfg.months
        )));
    }
    Ok(w)
}

/// A fresh simulator at step 0; equal configs give bit-identical weather
/// and occupancy streams.
pub fn simulator_for(cfg: &ExperimentConfig) -> Result<Simulator> {
    let building = building_for(cfg);
    let schedule = OccupancySchedule::office(building.n_zones());
    Simulator::with_schedule(building, weather_for(cfg)?, &schedule, cfg.seed ^ OCCUPANCY_SEED_XOR)
}

/// Rule-based rollout over `cfg.months` months.
pub fn collect_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut sim = simulator_for(cfg)?;
    let n = sim.config().n_zones();
    let mut rule = RuleController::new(n);
    let trace = rollout_steps(&mut rule, &mut sim, cfg.months * STEPS_PER_MONTH)?;
    Ok(Dataset::new(n, trace.transitions))
}

/// The collection run that precedes training: `train_months` under `train_seed`.
pub fn collection_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        months: cfg.train_months,
        seed: cfg.train_seed,
        controller: ControllerKind::Rule,
        ..cfg.clone()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: EpisodeTrace,
    pub rows: Vec<ResultRow>,
    pub metrics: MetricsReport,
    /// Steps before which the ensemble was retrained.
    pub update_steps: Vec<usize>,
    /// The ensemble in use when the run ended.
    pub ensemble: Option<Ensemble>,
}

/// Keeps the newest `capacity` transitions.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn extend<I: IntoIterator<Item = Transition>>(&mut self, it: I) {
        for t in it {
            self.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn to_vec(&self) -> Vec<Transition> {
        self.items.iter().cloned().collect()
    }
}

/// Steps at which a run of `n_steps` retrains, given the update period.
pub fn update_schedule(n_steps: usize, period: usize) -> Vec<usize> {
    if period == 0 {
        return Vec::new();
    }
    (1..).map(|i| i * period).take_while(|&s| s < n_steps).collect()
}

/// Closed loop on the simulator. Planner controllers need `ensemble`; the
/// sliding window starts with `history` (typically the training data) and is
/// used for the from-scratch retrains every `update_period` steps.
pub fn run_control_experiment(
    cfg: &ExperimentConfig,
    ensemble: Option<Ensemble>,
    history: &[Transition],
) -> Result<RunOutput> {
    cfg.validate()?;
    let mut sim = simulator_for(cfg)?;
    let n_steps = cfg.months * STEPS_PER_MONTH;
    let n = sim.config().n_zones();

    let kind = match cfg.controller {
        ControllerKind::Rule => {
            let trace = rollout_steps(&mut RuleController::new(n), &mut sim, n_steps)?;
            return finish(trace, Vec::new(), None);
        }
        ControllerKind::Planner(kind) => kind,
    };
    let ensemble = ensemble.ok_or_else(|| Error::Config(format!("controller {} needs an ensemble", cfg.controller)))?;
    let reward = RewardConfig::for_building(sim.config())?;
    let mut mpc = MpcController::new(ensemble, kind, cfg.planner_config(n), reward)?;
    mpc.refill = cfg.refill;

    let mut window = SlidingWindow::new(cfg.window);
    window.extend(history.iter().cloned());
    let updates = update_schedule(n_steps, cfg.update_period);
    let mut trace = EpisodeTrace::default();
    let mut done = 0;
    for &at in updates.iter().chain(std::iter::once(&n_steps)) {
        if done > 0 {
            let train_cfg = cfg.ensemble_train_config(step_seed(cfg.train_seed, done));
            let trained = train_ensemble(&window.to_vec(), &train_cfg)
                .map_err(|e| Error::Controller { step: done, source: Box::new(e) })?;
            mpc.dynamics = trained.ensemble;
        }
        let chunk = rollout_steps(&mut mpc, &mut sim, at - done)?;
        window.extend(chunk.transitions.iter().cloned());
        trace.transitions.extend(chunk.transitions);
        trace.rewards.extend(chunk.rewards);
        done = at;
    }
    finish(trace, updates, Some(mpc.dynamics))
}

fn finish(trace: EpisodeTrace, update_steps: Vec<usize>, ensemble: Option<Ensemble>) -> Result<RunOutput> {
    let rows = results_from_trace(&trace);
    let metrics = compute_metrics(&rows)?;
    Ok(RunOutput {
        trace,
        rows,
        metrics,
        update_steps,
        ensemble,
    })
}

pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_results_csv(&dir.join(RESULTS_FILE), &out.rows)?;
    write_metrics_csv(&dir.join(METRICS_FILE), &out.metrics)
}

/// Trains an ensemble on `transitions` with the config's training settings
/// and writes it, with its loss curves, to `dir`.
pub fn train_and_save(cfg: &ExperimentConfig, transitions: &[Transition], dir: &Path) -> Result<Ensemble> {
    let trained = train_ensemble(transitions, &cfg.ensemble_train_config(cfg.train_seed))?;
    trained.ensemble.save(dir)?;
    write_loss_curves(&dir.join(LOSS_CURVES_FILE), &trained.curves)?;
    Ok(trained.ensemble)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dataset: PathBuf,
    pub ensemble: PathBuf,
    pub run: RunOutput,
}

/// collect → train → run, every artifact under `dir`.
pub fn run_pipeline(cfg: &ExperimentConfig, dir: &Path) -> Result<PipelineOutput> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data = collect_dataset(&collection_config(cfg))?;
    let dataset = dir.join(DATASET_FILE);
    data.write_csv(&dataset)?;
    let ens_dir = dir.join(ENSEMBLE_DIR);
    let ensemble = train_and_save(cfg, &data.transitions, &ens_dir)?;
    let run = run_control_experiment(cfg, Some(ensemble), &data.transitions)?;
    write_run(dir, &run)?;
    Ok(PipelineOutput {
        dataset,
        ensemble: ens_dir,
        run,
    })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub reports: Vec<MetricsReport>,
}

/// Runs every config on the same weather and occupancy. Planner configs share
/// `ensemble` (each run starts from a fresh copy); if none is given one is
/// trained on the first config's collection run.
pub fn compare(configs: &[ExperimentConfig], ensemble: Option<Ensemble>) -> Result<Comparison> {
    let first = configs
        .first()
        .filter(|_| configs.len() >= 2)
        .ok_or_else(|| Error::Config("compare needs at least two configs".into()))?;
    for c in &configs[1..] {
        if c.weather != first.weather || c.seed != first.seed || c.months != first.months {
            return Err(Error::Config(
                "compared configs must share weather, seed and months".into(),
            ));
        }
    }
    let needs_model = configs.iter().any(|c| c.controller != ControllerKind::Rule);
    let mut history = Vec::new();
    let ensemble = match ensemble {
        Some(e) => Some(e),
        None if needs_model => {
            let data = collect_dataset(&collection_config(first))?;
            let trained = train_ensemble(&data.transitions, &first.ensemble_train_config(first.train_seed))?;
            history = data.transitions;
            Some(trained.ensemble)
        }
        None => None,
    };
    let mut labels = Vec::new();
    let mut reports = Vec::new();
    for c in configs {
        let out = run_control_experiment(c, ensemble.clone(), &history)?;
        labels.push(c.controller.to_string());
        reports.push(out.metrics);
    }
    Ok(Comparison { labels, reports })
}

/// `(baseline - candidate) / baseline`, or 0 when both are 0.
pub fn savings(baseline: f64, candidate: f64) -> f64 {
    if baseline == candidate {
        0.0
    } else {
        (baseline - candidate) / baseline
    }
}

/// `(candidate - baseline) / |baseline|`, for higher-is-better quantities.
pub fn improvement(baseline: f64, candidate: f64) -> f64 {
    if baseline == candidate {
        0.0
    } else {
        (candidate - baseline) / baseline.abs()
    }
}

impl Comparison {
    /// One row per config, then one `delta:<label>` row per non-baseline
    /// config. Energy deltas are percentage savings against the first config,
    /// reward is percentage improvement, comfort columns are differences.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let csv = |e| Error::csv(path, e);
        w.write_record([
            "label",
            "total_kwh",
            "heat_kwh",
            "cool_kwh",
            "violation_rate",
            "pmv_mean",
            "pmv_std",
            "reward",
        ])
        .map_err(csv)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (label, m) in self.labels.iter().zip(&self.reports) {
            w.write_record([
                label.clone(),
                m.total_kwh().to_string(),
                m.total_heat_kwh.to_string(),
                m.total_cool_kwh.to_string(),
                m.violation_rate.to_string(),
                opt(m.pmv_mean),
                opt(m.pmv_std),
                m.total_reward().to_string(),
            ])
            .map_err(csv)?;
        }
        let base = &self.reports[0];
        let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| a - b);
        for (label, m) in self.labels.iter().zip(&self.reports).skip(1) {
            w.write_record([
                format!("delta:{label}"),
                (100.0 * savings(base.total_kwh(), m.total_kwh())).to_string(),
                (100.0 * savings(base.total_heat_kwh, m.total_heat_kwh)).to_string(),
                (100.0 * savings(base.total_cool_kwh, m.total_cool_kwh)).to_string(),
                (m.violation_rate - base.violation_rate).to_string(),
                opt(diff(m.pmv_mean, base.pmv_mean)),
                opt(diff(m.pmv_std, base.pmv_std)),
                (100.0 * improvement(base.total_reward(), m.total_reward())).to_string(),
            ])
            .map_err(csv)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
