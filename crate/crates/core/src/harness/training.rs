//! Fitting an ensemble from a transition dataset.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::split_train_val;
use crate::dynamics::model::{fit_norm_stats, training_set, DynamicsModel, DEFAULT_HIDDEN};
use crate::dynamics::train::{train, LossCurve, TrainConfig};
use crate::ensemble::{Ensemble, DEFAULT_DISCOUNT, DEFAULT_HISTORY};
use crate::error::{Error, Result};
use crate::state::Transition;

pub const LOSS_CURVES_FILE: &str = "loss_curves.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTrainConfig {
    pub n_models: usize,
    /// Seed of model `i` is `seed + i`; it drives both init and batch order.
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub train_ratio: f64,
    pub history: usize,
    pub discount: f64,
}

impl Default for EnsembleTrainConfig {
    fn default() -> Self {
        Self {
            n_models: 5,
            seed: 0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            train: TrainConfig::default(),
            train_ratio: 0.8,
            history: DEFAULT_HISTORY,
            discount: DEFAULT_DISCOUNT,
        }
    }
}

impl EnsembleTrainConfig {
    pub fn model_seeds(&self) -> Vec<u64> {
        (0..self.n_models as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEnsemble {
    pub ensemble: Ensemble,
    pub curves: Vec<LossCurve>,
}

/// Splits the data, fits normalization on the training part and trains every
/// model from its own Xavier initialization and shuffle stream.
pub fn train_ensemble(transitions: &[Transition], cfg: &EnsembleTrainConfig) -> Result<TrainedEnsemble> {
    if cfg.n_models == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let n_zones = transitions.first().ok_or(Error::EmptyDataset)?.state.n_zones();
    let (train_part, val_part) = split_train_val(transitions, cfg.train_ratio, cfg.seed)?;
    if train_part.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (input_stats, target_stats) = fit_norm_stats(&train_part)?;
    let train_set = training_set(&train_part, &input_stats, &target_stats)?;
    let val_set = training_set(&val_part, &input_stats, &target_stats)?;

    let seeds = cfg.model_seeds();
    let mut models = Vec::with_capacity(cfg.n_models);
    let mut curves = Vec::with_capacity(cfg.n_models);
    for (i, &seed) in seeds.iter().enumerate() {
        let wrap = |e| Error::Model {
            model: i,
            source: Box::new(e),
        };
        let mut model = DynamicsModel::xavier(n_zones, &cfg.hidden, seed, input_stats.clone(), target_stats.clone())
            .map_err(wrap)?;
        let train_cfg = TrainConfig { seed, ..cfg.train };
        let curve = train(&mut model.params, &train_set, Some(&val_set), &train_cfg).map_err(wrap)?;
        models.push(model);
        curves.push(curve);
    }
    Ok(TrainedEnsemble {
        ensemble: Ensemble::new(models, seeds, cfg.history, cfg.discount)?,
        curves,
    })
}

/// One row per (model, trained epoch): `model,epoch,train_loss,val_loss`.
pub fn write_loss_curves(path: &Path, curves: &[LossCurve]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "model,epoch,train_loss,val_loss").map_err(io)?;
    for (m, curve) in curves.iter().enumerate() {
        for p in curve.epochs() {
            let val = p.val.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{m},{},{},{val}", p.epoch, p.train).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
