//! A trained dynamics network bundled with its normalization, plus the text
//! file format used to persist it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2};
use sha2::{Digest, Sha256};

use crate::dataset::{input_feature_names, model_input, model_target};
use crate::dynamics::mlp::{xavier_init, Layer, MlpParams};
use crate::dynamics::train::TrainingSet;
use crate::error::{check_dim, Error, Result};
use crate::norm::NormStats;
use crate::state::{action_dim, building_dim, env_dim, state_feature_names, Transition};

pub const FORMAT_HEADER: &str = "hvac-dynamics-model 1";
pub const DEFAULT_HIDDEN: [usize; 2] = [200, 200];

/// `[building (5N), action (2N), env (7 + N)]`.
pub fn input_dim(n_zones: usize) -> usize {
    building_dim(n_zones) + action_dim(n_zones) + env_dim(n_zones)
}

pub fn layer_dims(n_zones: usize, hidden: &[usize]) -> Vec<usize> {
    let mut dims = vec![input_dim(n_zones)];
    dims.extend_from_slice(hidden);
    dims.push(building_dim(n_zones));
    dims
}

/// SHA-256 over the input and target feature names, in order.
pub fn feature_hash(n_zones: usize) -> String {
    let mut h = Sha256::new();
    for name in input_feature_names(n_zones) {
        h.update(name.as_bytes());
        h.update(b"\n");
    }
    h.update(b"->\n");
    for name in &state_feature_names(n_zones)[..building_dim(n_zones)] {
        h.update(name.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Input statistics over `model_input` rows and target statistics over the
/// building-state deltas.
pub fn fit_norm_stats(transitions: &[Transition]) -> Result<(NormStats, NormStats)> {
    let inputs: Vec<Vec<f64>> = transitions.iter().map(|t| model_input(&t.state, &t.action)).collect();
    let targets: Vec<Vec<f64>> = transitions.iter().map(model_target).collect();
    Ok((
        NormStats::fit(inputs.iter().map(Vec::as_slice))?,
        NormStats::fit(targets.iter().map(Vec::as_slice))?,
    ))
}

/// Standardized training pairs for `transitions`.
pub fn training_set(transitions: &[Transition], input_stats: &NormStats, target_stats: &NormStats) -> Result<TrainingSet> {
    let n = transitions.len();
    let mut x = Array2::zeros((n, input_stats.dim()));
    let mut y = Array2::zeros((n, target_stats.dim()));
    for (i, t) in transitions.iter().enumerate() {
        let xi = input_stats.standardize(&model_input(&t.state, &t.action))?;
        let yi = target_stats.standardize(&model_target(t))?;
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&xi));
        y.row_mut(i).assign(&ndarray::ArrayView1::from(&yi));
    }
    TrainingSet::new(x, y)
}

/// Network plus the statistics that map raw features to its standardized
/// input space and its standardized output back to building-state deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsModel {
    pub n_zones: usize,
    pub params: MlpParams,
    pub input_stats: NormStats,
    pub target_stats: NormStats,
}

impl DynamicsModel {
    pub fn new(n_zones: usize, params: MlpParams, input_stats: NormStats, target_stats: NormStats) -> Result<Self> {
        check_dim(input_dim(n_zones), params.input_dim())?;
        check_dim(building_dim(n_zones), params.output_dim())?;
        check_dim(params.input_dim(), input_stats.dim())?;
        check_dim(params.output_dim(), target_stats.dim())?;
        Ok(Self {
            n_zones,
            params,
            input_stats,
            target_stats,
        })
    }

    pub fn xavier(n_zones: usize, hidden: &[usize], seed: u64, input_stats: NormStats, target_stats: NormStats) -> Result<Self> {
        let params = xavier_init(&layer_dims(n_zones, hidden), seed)?;
        Self::new(n_zones, params, input_stats, target_stats)
    }

    pub fn building_dim(&self) -> usize {
        building_dim(self.n_zones)
    }

    /// Next building states for raw `model_input` rows (`batch × input_dim`).
    pub fn predict_next_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim(self.params.input_dim(), inputs.ncols())?;
        let mut z = inputs.to_owned();
        for mut row in z.rows_mut() {
            self.input_stats
                .standardize_in_place(row.as_slice_mut().expect("owned rows are contiguous"));
        }
        let mut out = self.params.forward_batch(z.view())?;
        let b = self.building_dim();
        for (mut row, current) in out.rows_mut().into_iter().zip(inputs.slice(s![.., ..b]).rows()) {
            for (((v, m), s), c) in row
                .iter_mut()
                .zip(&self.target_stats.mean)
                .zip(&self.target_stats.std)
                .zip(current)
            {
                *v = c + (*v * s + m);
            }
        }
        Ok(out)
    }

    /// `s + destandardize(f(standardize([s, a, e])))`.
    pub fn predict_next(&self, building: &[f64], action: &[f64], env: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.building_dim(), building.len())?;
        check_dim(action_dim(self.n_zones), action.len())?;
        check_dim(env_dim(self.n_zones), env.len())?;
        let input: Vec<f64> = building.iter().chain(action).chain(env).copied().collect();
        let x = ArrayView2::from_shape((1, input.len()), &input).expect("row view");
        Ok(self.predict_next_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Squared prediction error summed over building-state components, each
    /// scaled by the target standard deviation so components are commensurate.
    pub fn standardized_sq_error(&self, predicted: &[f64], actual: &[f64]) -> f64 {
        predicted
            .iter()
            .zip(actual)
            .zip(&self.target_stats.std)
            .map(|((p, a), s)| {
                let d = (p - a) / s;
                d * d
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, key: &str, values: &[f64]| {
            out.push_str(key);
            for v in values {
                write!(out, " {v:.16e}").unwrap();
            }
            out.push('\n');
        };
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "n_zones {}", self.n_zones).unwrap();
        let dims: Vec<String> = self.params.dims().iter().map(usize::to_string).collect();
        writeln!(out, "dims {}", dims.join(" ")).unwrap();
        writeln!(out, "feature_hash {}", feature_hash(self.n_zones)).unwrap();
        line(&mut out, "input_mean", &self.input_stats.mean);
        line(&mut out, "input_std", &self.input_stats.std);
        line(&mut out, "target_mean", &self.target_stats.mean);
        line(&mut out, "target_std", &self.target_stats.std);
        for (i, layer) in self.params.layers.iter().enumerate() {
            writeln!(out, "layer {i}").unwrap();
            for row in layer.w.rows() {
                line(&mut out, "w", row.as_slice().expect("standard layout"));
            }
            line(&mut out, "b", layer.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|message| Error::ModelFormat {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().enumerate();
        let mut next = |key: &str| -> std::result::Result<(usize, Vec<&str>), String> {
            let (no, line) = lines.next().ok_or_else(|| format!("unexpected end of file, wanted `{key}`"))?;
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some(k) if k == key => Ok((no + 1, tokens.collect())),
                other => Err(format!("line {}: expected `{key}`, found {other:?}", no + 1)),
            }
        };
        let floats = |(no, tokens): (usize, Vec<&str>), n: usize| -> std::result::Result<Vec<f64>, String> {
            if tokens.len() != n {
                return Err(format!("line {no}: expected {n} values, found {}", tokens.len()));
            }
            tokens
                .iter()
                .map(|t| t.parse::<f64>().map_err(|e| format!("line {no}: {e}")))
                .collect()
        };

        let (_, version) = next("hvac-dynamics-model")?;
        if version != ["1"] {
            return Err(format!("unsupported format version {version:?}"));
        }
        let (no, t) = next("n_zones")?;
        let n_zones: usize = t
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format!("line {no}: bad zone count"))?;
        let (no, t) = next("dims")?;
        let dims: Vec<usize> = t
            .iter()
            .map(|v| v.parse().map_err(|e| format!("line {no}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let (no, t) = next("feature_hash")?;
        if t.first().copied() != Some(feature_hash(n_zones).as_str()) {
            return Err(format!("line {no}: feature ordering hash does not match this build"));
        }
        let in_dim = *dims.first().ok_or("empty dims")?;
        let out_dim = *dims.last().ok_or("empty dims")?;
        let input_stats = NormStats {
            mean: floats(next("input_mean")?, in_dim)?,
            std: floats(next("input_std")?, in_dim)?,
        };
        let target_stats = NormStats {
            mean: floats(next("target_mean")?, out_dim)?,
            std: floats(next("target_std")?, out_dim)?,
        };
        let mut params = MlpParams::zeros(&dims).map_err(|e| e.to_string())?;
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let (no, t) = next("layer")?;
            if t != [i.to_string().as_str()] {
                return Err(format!("line {no}: expected layer {i}"));
            }
            let (fan_in, fan_out) = (layer.fan_in(), layer.fan_out());
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in {
                w.extend(floats(next("w")?, fan_out)?);
            }
            *layer = Layer {
                w: Array2::from_shape_vec((fan_in, fan_out), w).expect("shape checked"),
                b: floats(next("b")?, fan_out)?.into(),
            };
        }
        Self::new(n_zones, params, input_stats, target_stats).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(seed: u64) -> DynamicsModel {
        let n = 2;
        let mut input_stats = NormStats::identity(input_dim(n));
        input_stats.mean[0] = 21.5;
        input_stats.std[0] = 1.0 / 3.0;
        let mut target_stats = NormStats::identity(building_dim(n));
        target_stats.std[3] = 0.1234567890123;
        DynamicsModel::xavier(n, &[6, 5], seed, input_stats, target_stats).unwrap()
    }

    #[test]
    fn dims_for_five_zones() {
        assert_eq!(layer_dims(5, &DEFAULT_HIDDEN), vec![47, 200, 200, 25]);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = model(3);
        let back = DynamicsModel::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        let s = [22.0, 0.5, 0.1, 0.0, 0.2, 23.0, 0.4, 0.3, 0.1, 0.0];
        let a = [20.0, 24.0, 21.0, 25.0];
        let e = [30.0, 0.3, 100.0, 400.0, 40.0, 2.0, 180.0, 1.0, 0.0];
        assert_eq!(m.predict_next(&s, &a, &e).unwrap(), back.predict_next(&s, &a, &e).unwrap());
    }

    #[test]
    fn zero_network_predicts_mean_delta() {
        let mut m = model(1);
        m.params = m.params.zeros_like();
        m.target_stats = NormStats::identity(m.building_dim());
        let s = [22.0, 0.5, 0.1, 0.0, 0.2, 23.0, 0.4, 0.3, 0.1, 0.0];
        let out = m.predict_next(&s, &[0.0; 4], &[0.0; 9]).unwrap();
        assert_eq!(out, s.to_vec());
    }

    #[test]
    fn rejects_wrong_hash() {
        let text = model(2).to_text();
        let hash = feature_hash(2);
        let bad = text.replace(&hash, &"0".repeat(hash.len()));
        assert!(DynamicsModel::from_text(&bad).unwrap_err().contains("hash"));
    }
}
