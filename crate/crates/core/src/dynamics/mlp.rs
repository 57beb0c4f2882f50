//! Fully connected network with ReLU hidden layers and a linear output.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

/// `y = x · w + b`, with `w` stored `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Validates layer dimensions: at least an input and an output, all positive.
fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidInput(format!("invalid layer dimensions {dims:?}")));
    }
    Ok(())
}

impl MlpParams {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            layers: dims
                .windows(2)
                .map(|d| Layer {
                    w: Array2::zeros((d[0], d[1])),
                    b: Array1::zeros(d[1]),
                })
                .collect(),
        })
    }

    /// Same shapes as `self`, all zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Layer::fan_out));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    /// Every parameter in layer order, weights (row-major) before biases.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Batched forward pass; `x` is `batch × input_dim`.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim(self.input_dim(), x.ncols())?;
        let last = self.layers.len() - 1;
        let mut h = affine(&self.layers[0], x);
        if last > 0 {
            relu_in_place(&mut h);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            h = affine(layer, h.view());
            if i < last {
                relu_in_place(&mut h);
            }
        }
        Ok(h)
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }
}

fn affine(layer: &Layer, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut z = x.dot(&layer.w);
    z += &layer.b;
    z
}

fn relu_in_place(h: &mut Array2<f64>) {
    h.mapv_inplace(|v| v.max(0.0));
}

/// Uniform Xavier initialization on `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn xavier_init(dims: &[usize], seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut params.layers {
        let limit = (6.0 / (layer.fan_in() + layer.fan_out()) as f64).sqrt();
        layer.w.mapv_inplace(|_| rng.random_range(-limit..=limit));
    }
    Ok(params)
}

/// Convenience wrapper over [`MlpParams::forward_one`] for already standardized
/// `[building, action, env]` pieces.
pub fn forward(params: &MlpParams, s: &[f64], a: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let input: Vec<f64> = s.iter().chain(a).chain(e).copied().collect();
    params.forward_one(&input)
}

/// Mean over the batch of `½‖y − f(x)‖²`.
pub fn loss(params: &MlpParams, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    check_batch(params, x, y)?;
    let pred = params.forward_batch(x)?;
    let sq: f64 = Zip::from(&pred).and(&y).fold(0.0, |acc, p, t| acc + (p - t) * (p - t));
    Ok(0.5 * sq / x.nrows() as f64)
}

fn check_batch(params: &MlpParams, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    check_dim(x.nrows(), y.nrows())?;
    check_dim(params.output_dim(), y.ncols())
}

/// Loss and its exact gradient by backpropagation.
pub fn loss_and_gradient(
    params: &MlpParams,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<(f64, MlpParams)> {
    check_batch(params, x, y)?;
    check_dim(params.input_dim(), x.ncols())?;
    let n_layers = params.layers.len();
    let batch = x.nrows() as f64;

    // activations[i] is the input to layer i
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
    let mut out = x.to_owned();
    for (i, layer) in params.layers.iter().enumerate() {
        let mut z = affine(layer, out.view());
        if i + 1 < n_layers {
            relu_in_place(&mut z);
        }
        activations.push(out);
        out = z;
    }

    let mut delta = out - y;
    let loss = 0.5 * delta.iter().map(|d| d * d).sum::<f64>() / batch;
    delta /= batch;

    let mut grad = params.zeros_like();
    for i in (0..n_layers).rev() {
        let a = &activations[i];
        grad.layers[i].w = a.t().dot(&delta);
        grad.layers[i].b = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut back = delta.dot(&params.layers[i].w.t());
            // ReLU derivative; the stored activation is positive exactly where z > 0
            Zip::from(&mut back).and(a).for_each(|d, &act| {
                if act <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    Ok((loss, grad))
}

/// Gradient only.
pub fn gradient(params: &MlpParams, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<MlpParams> {
    Ok(loss_and_gradient(params, x, y)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn xavier_bounds_and_zero_bias() {
        let p = xavier_init(&[47, 200, 200, 25], 1).unwrap();
        let limit = (6.0f64 / 247.0).sqrt();
        assert!(p.layers[0].w.iter().all(|w| w.abs() <= limit));
        assert!(p.layers.iter().all(|l| l.b.iter().all(|&b| b == 0.0)));
        assert_eq!(p.dims(), vec![47, 200, 200, 25]);
        assert_ne!(p, xavier_init(&[47, 200, 200, 25], 2).unwrap());
        assert_eq!(p, xavier_init(&[47, 200, 200, 25], 1).unwrap());
    }

    #[test]
    fn zero_params_predict_zero() {
        let p = MlpParams::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(p.forward_one(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn invalid_dims() {
        assert!(MlpParams::zeros(&[4]).is_err());
        assert!(MlpParams::zeros(&[4, 0, 2]).is_err());
        let p = MlpParams::zeros(&[4, 2]).unwrap();
        assert!(p.forward_one(&[1.0; 3]).is_err());
    }

    #[test]
    fn hand_computed_forward() {
        let p = MlpParams {
            layers: vec![
                Layer {
                    w: array![[1.0, -1.0], [2.0, 0.5]],
                    b: array![0.0, 0.25],
                },
                Layer {
                    w: array![[1.0], [4.0]],
                    b: array![-1.0],
                },
            ],
        };
        // hidden = relu([1 + 2, -1 + 0.5 + 0.25]) = [3, 0]
        assert_eq!(p.forward_one(&[1.0, 1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn loss_is_quadratic_in_residual() {
        let p = xavier_init(&[3, 5, 2], 4).unwrap();
        let x = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]];
        let pred = p.forward_batch(x.view()).unwrap();
        assert_eq!(loss(&p, x.view(), pred.view()).unwrap(), 0.0);
        let y1 = &pred + 0.3;
        let y2 = &pred + 0.6;
        let l1 = loss(&p, x.view(), y1.view()).unwrap();
        let l2 = loss(&p, x.view(), y2.view()).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
    }
}
