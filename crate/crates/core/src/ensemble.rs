//! Accuracy-weighted ensemble of dynamics models.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use crate::dataset::model_input;
use crate::dynamics::model::DynamicsModel;
use crate::error::{check_dim, Error, Result};
use crate::state::{building_dim, Action, EnvironmentState, FullState};

pub const DEFAULT_MODELS: usize = 5;
pub const DEFAULT_HISTORY: usize = 4;
pub const DEFAULT_DISCOUNT: f64 = 0.9;
pub const MANIFEST: &str = "manifest.txt";

/// `Σ_j φ^j · err(t − j)` over `errors` ordered oldest first, where the most
/// recent entry has age `j = 1`. `None` when there are no errors yet.
pub fn discounted_mse(errors: &[f64], discount: f64) -> Option<f64> {
    if errors.is_empty() {
        return None;
    }
    let mut weight = 1.0;
    let mut total = 0.0;
    for e in errors.iter().rev() {
        weight *= discount;
        total += weight * e;
    }
    Some(total)
}

/// `W_i = (1 − Norm(MSE_i)) / Σ_j (1 − Norm(MSE_j))`, min-max normalized over
/// the ensemble. Uniform when every MSE is equal.
pub fn compute_weights(mse: &[f64]) -> Vec<f64> {
    let m = mse.len();
    let min = mse.iter().copied().fold(f64::INFINITY, f64::min);
    let max = mse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![1.0 / m as f64; m];
    }
    let score: Vec<f64> = mse.iter().map(|v| 1.0 - (v - min) / (max - min)).collect();
    let total: f64 = score.iter().sum();
    score.iter().map(|s| s / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    models: Vec<DynamicsModel>,
    seeds: Vec<u64>,
    /// Per model, oldest first, at most `history` entries.
    errors: Vec<Vec<f64>>,
    history: usize,
    discount: f64,
    weights: Vec<f64>,
}

impl Ensemble {
    pub fn new(models: Vec<DynamicsModel>, seeds: Vec<u64>, history: usize, discount: f64) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one model".into()));
        }
        check_dim(models.len(), seeds.len())?;
        if history == 0 || !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::Config(format!("invalid history {history} or discount {discount}")));
        }
        let n_zones = models[0].n_zones;
        for (i, m) in models.iter().enumerate() {
            if m.n_zones != n_zones || m.params.dims() != models[0].params.dims() {
                return Err(Error::Model {
                    model: i,
                    source: Box::new(Error::InvalidInput("architecture differs from model 0".into())),
                });
            }
        }
        let m = models.len();
        Ok(Self {
            models,
            seeds,
            errors: vec![Vec::with_capacity(history + 1); m],
            history,
            discount,
            weights: vec![1.0 / m as f64; m],
        })
    }

    pub fn with_defaults(models: Vec<DynamicsModel>, seeds: Vec<u64>) -> Result<Self> {
        Self::new(models, seeds, DEFAULT_HISTORY, DEFAULT_DISCOUNT)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn n_zones(&self) -> usize {
        self.models[0].n_zones
    }

    pub fn models(&self) -> &[DynamicsModel] {
        &self.models
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Overrides the weights; they must be a probability vector.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        check_dim(self.len(), weights.len())?;
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights {weights:?} are not a probability vector")));
        }
        self.weights = weights;
        Ok(())
    }

    /// Error history of model `i`, oldest first.
    pub fn errors(&self, i: usize) -> Vec<f64> {
        self.errors[i].clone()
    }

    /// Discounted error per model, or `None` before any observation.
    pub fn mse(&self) -> Option<Vec<f64>> {
        self.errors
            .iter()
            .map(|e| discounted_mse(e, self.discount))
            .collect()
    }

    /// Drops all error history and returns to uniform weights.
    pub fn reset_history(&mut self) {
        for e in &mut self.errors {
            e.clear();
        }
        self.weights = vec![1.0 / self.len() as f64; self.len()];
    }

    /// Scores every model on a real transition and refreshes the weights.
    pub fn record_observation(&mut self, prior: &FullState, action: &Action, observed: &FullState) -> Result<()> {
        let building = prior.building_vec();
        let env = prior.env.to_vec();
        let actual = observed.building_vec();
        let a = action.to_vec();
        for (model, errors) in self.models.iter().zip(&mut self.errors) {
            let predicted = model.predict_next(&building, &a, &env)?;
            errors.push(model.standardized_sq_error(&predicted, &actual));
            if errors.len() > self.history {
                errors.remove(0);
            }
        }
        if let Some(mse) = self.mse() {
            self.weights = compute_weights(&mse);
        }
        Ok(())
    }

    /// Weighted next-building-state prediction for raw `model_input` rows.
    /// Models with zero weight are skipped; they would contribute exact zeros.
    pub fn predict_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((inputs.nrows(), building_dim(self.n_zones())));
        for (i, (model, &w)) in self.models.iter().zip(&self.weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let pred = model.predict_next_batch(inputs).map_err(|e| Error::Model {
                model: i,
                source: Box::new(e),
            })?;
            out.scaled_add(w, &pred);
        }
        Ok(out)
    }

    /// `Σ_i W_i · (s + f_i(s, a, e))` for one input.
    pub fn predict(&self, building: &[f64], action: &[f64], env: &[f64]) -> Result<Vec<f64>> {
        let input: Vec<f64> = building.iter().chain(action).chain(env).copied().collect();
        check_dim(self.models[0].params.input_dim(), input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), &input).expect("row view");
        Ok(self.predict_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Open-loop prediction of `actions.len()` steps. `forecast[k]` is the
    /// environment at step `k + 1`, so the first input uses `s0.env`. Weights
    /// stay as they are for the whole rollout.
    pub fn rollout(&self, s0: &FullState, actions: &[Action], forecast: &[EnvironmentState]) -> Result<Vec<FullState>> {
        if forecast.len() < actions.len() {
            return Err(Error::InvalidInput(format!(
                "forecast covers {} steps, rollout needs {}",
                forecast.len(),
                actions.len()
            )));
        }
        let mut states = Vec::with_capacity(actions.len());
        let mut current = s0.clone();
        for (step, (action, env)) in actions.iter().zip(forecast).enumerate() {
            let input = model_input(&current, action);
            let x = ArrayView2::from_shape((1, input.len()), &input).expect("row view");
            let next = self.predict_batch(x)?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinitePrediction { step });
            }
            current = current.with_building_vec(next.index_axis(Axis(0), 0).as_slice().expect("row"), env.clone());
            states.push(current.clone());
        }
        Ok(states)
    }

    /// Writes `model_{i}.txt` files and a manifest into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::new();
        writeln!(manifest, "models {}", self.len()).unwrap();
        writeln!(manifest, "history {}", self.history).unwrap();
        writeln!(manifest, "discount {:.16e}", self.discount).unwrap();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        writeln!(manifest, "seeds {}", seeds.join(" ")).unwrap();
        for (i, model) in self.models.iter().enumerate() {
            model.save(&dir.join(format!("model_{i}.txt")))?;
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |message: String| Error::ModelFormat {
            path: path.clone(),
            message,
        };
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) = line.split_once(' ').ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            fields.insert(key, value.trim());
        }
        let get = |key: &str| fields.get(key).copied().ok_or_else(|| bad(format!("missing `{key}`")));
        let m: usize = get("models")?.parse().map_err(|e| bad(format!("models: {e}")))?;
        let history: usize = get("history")?.parse().map_err(|e| bad(format!("history: {e}")))?;
        let discount: f64 = get("discount")?.parse().map_err(|e| bad(format!("discount: {e}")))?;
        let seeds: Vec<u64> = get("seeds")?
            .split_whitespace()
            .map(|s| s.parse().map_err(|e| bad(format!("seeds: {e}"))))
            .collect::<Result<_>>()?;
        let models = (0..m)
            .map(|i| DynamicsModel::load(&dir.join(format!("model_{i}.txt"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(models, seeds, history, discount)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_mse_age_convention() {
        // older 1, recent 4: 0.9² · 1 + 0.9 · 4
        assert_eq!(discounted_mse(&[1.0, 4.0], 0.9), Some(0.9 * 0.9 + 0.9 * 4.0));
        assert!((discounted_mse(&[1.0, 4.0], 0.9).unwrap() - 4.41).abs() < 1e-12);
        assert_eq!(discounted_mse(&[], 0.9), None);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(compute_weights(&[1.0, 3.0]), vec![1.0, 0.0]);
        let w = compute_weights(&[1.0, 2.0, 3.0]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15 && w[2] == 0.0);
        assert_eq!(compute_weights(&[2.0, 2.0, 2.0]), vec![1.0 / 3.0; 3]);
        assert_eq!(compute_weights(&[5.0]), vec![1.0]);
    }
}
