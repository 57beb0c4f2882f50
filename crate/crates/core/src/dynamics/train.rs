//! Mini-batch Adam training.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::adam::{AdamConfig, AdamState};
use crate::dynamics::mlp::{loss, loss_and_gradient, MlpParams};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Drives the per-epoch batch order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 512,
            epochs: 40,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.beta1, self.beta2, self.epsilon];
        if self.batch_size == 0 || positive.iter().any(|v| !(*v > 0.0)) || self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::Config(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Standardized inputs and targets, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl TrainingSet {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        check_dim(x.nrows(), y.nrows())?;
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    /// 0 is the untrained network.
    pub epoch: usize,
    /// Sample-weighted mean of the mini-batch losses seen during the epoch
    /// (for epoch 0, the full-set loss).
    pub train: f64,
    /// Full validation-set loss after the epoch; `None` without validation data.
    pub val: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossCurve {
    /// Epoch 0 followed by one entry per trained epoch.
    pub points: Vec<EpochLoss>,
}

impl LossCurve {
    pub fn initial(&self) -> &EpochLoss {
        &self.points[0]
    }

    pub fn last(&self) -> &EpochLoss {
        &self.points[self.points.len() - 1]
    }

    /// Entries for trained epochs only.
    pub fn epochs(&self) -> &[EpochLoss] {
        &self.points[1..]
    }
}

fn finite_or_diverged(epoch: usize, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Divergence { epoch, loss })
    }
}

/// Trains `params` in place. Every epoch shuffles the training set with a
/// stream derived from `cfg.seed` and the epoch index, then walks it in
/// mini-batches; the final partial batch is kept.
pub fn train(
    params: &mut MlpParams,
    train_set: &TrainingSet,
    val_set: Option<&TrainingSet>,
    cfg: &TrainConfig,
) -> Result<LossCurve> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let val_set = val_set.filter(|v| !v.is_empty());
    let val_loss = |p: &MlpParams, epoch: usize| -> Result<Option<f64>> {
        val_set
            .map(|v| loss(p, v.x.view(), v.y.view()).and_then(|l| finite_or_diverged(epoch, l)))
            .transpose()
    };

    let mut curve = LossCurve::default();
    curve.points.push(EpochLoss {
        epoch: 0,
        train: finite_or_diverged(0, loss(params, train_set.x.view(), train_set.y.view())?)?,
        val: val_loss(params, 0)?,
    });

    let adam = cfg.adam();
    let mut state = AdamState::new(params);
    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_set.x.select(Axis(0), chunk);
            let y = train_set.y.select(Axis(0), chunk);
            let (l, grad) = loss_and_gradient(params, x.view(), y.view())?;
            finite_or_diverged(epoch, l)?;
            weighted += l * chunk.len() as f64;
            state.step(&adam, params, &grad);
        }
        curve.points.push(EpochLoss {
            epoch,
            train: weighted / n as f64,
            val: val_loss(params, epoch)?,
        });
    }
    if !params.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: f64::NAN,
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::mlp::xavier_init;
    use ndarray::Array2;

    fn toy_set(n: usize) -> TrainingSet {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let y = Array2::from_shape_fn((n, 1), |(i, _)| x[[i, 0]] * 0.5 - x[[i, 1]]);
        TrainingSet::new(x, y).unwrap()
    }

    #[test]
    fn zero_epochs_leave_params_unchanged() {
        let mut p = xavier_init(&[2, 8, 1], 3).unwrap();
        let before = p.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let curve = train(&mut p, &toy_set(20), None, &cfg).unwrap();
        assert_eq!(p, before);
        assert_eq!(curve.points.len(), 1);
    }

    #[test]
    fn training_is_reproducible_and_learns() {
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-2,
            seed: 9,
            ..Default::default()
        };
        let data = toy_set(100);
        let mut a = xavier_init(&[2, 16, 1], 1).unwrap();
        let mut b = a.clone();
        let ca = train(&mut a, &data, Some(&data), &cfg).unwrap();
        let cb = train(&mut b, &data, Some(&data), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        assert!(ca.last().val.unwrap() < 0.1 * ca.initial().val.unwrap());
        assert_eq!(ca.epochs().len(), 50);
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut p = xavier_init(&[2, 8, 1], 3).unwrap();
        let mut data = toy_set(10);
        data.y[[0, 0]] = f64::NAN;
        let err = train(&mut p, &data, None, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 0, .. }));
    }
}
