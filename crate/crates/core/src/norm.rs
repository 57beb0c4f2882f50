//! Feature standardization for the network and min-max scaling for the reward.

use crate::error::{check_dim, Error, Result};

/// Standard deviations at or below this are treated as a constant feature.
const DEGENERATE_STD: f64 = 1e-12;

/// Per-feature mean and standard deviation.
///
/// Constant features get `std = 1`, so they standardize to exactly zero
/// instead of dividing by zero (occupancy flags are constant over long windows).
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Population mean/std over `rows`, all of which must have the same length.
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter().peekable();
        let dim = iter.peek().ok_or(Error::EmptyDataset)?.len();
        let mut count = 0usize;
        let mut sum = vec![0.0; dim];
        let mut rows_kept: Vec<&[f64]> = Vec::new();
        for row in iter {
            check_dim(dim, row.len())?;
            for (s, x) in sum.iter_mut().zip(row) {
                *s += x;
            }
            rows_kept.push(row);
            count += 1;
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut var = vec![0.0; dim];
        for row in rows_kept {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > DEGENERATE_STD {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(x
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn destandardize(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(z
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect())
    }

    pub(crate) fn standardize_in_place(&self, x: &mut [f64]) {
        for ((x, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s;
        }
    }
}

/// Closed range used by `Norm(x) = (x - min) / (max - min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxBounds {
    min: f64,
    max: f64,
}

impl MinMaxBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if max > min && min.is_finite() && max.is_finite() {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidBounds { min, max })
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Scaled to [0, 1]; values outside the range are clipped.
    pub fn normalize(&self, x: f64) -> f64 {
        ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

pub fn minmax_norm(x: f64, bounds: &MinMaxBounds) -> f64 {
    bounds.normalize(x)
}
