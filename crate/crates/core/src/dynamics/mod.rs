//! Environment-conditioned MLP that predicts building-state deltas.

pub mod adam;
pub mod mlp;
pub mod model;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{forward, gradient, loss, loss_and_gradient, xavier_init, Layer, MlpParams};
pub use model::{fit_norm_stats, training_set, DynamicsModel};
pub use train::{train, EpochLoss, LossCurve, TrainConfig, TrainingSet};
