//! Experiment orchestration: data collection, training, closed-loop runs,
//! metrics and comparisons.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod training;

pub use config::{ControllerKind, ExperimentConfig, WeatherSource};
pub use experiment::{
    collect_dataset, compare, run_control_experiment, run_pipeline, Comparison, RunOutput,
    SlidingWindow,
};
pub use metrics::{compute_metrics, read_results_csv, write_results_csv, MetricsReport, ResultRow};
pub use training::{train_ensemble, EnsembleTrainConfig, TrainedEnsemble};
