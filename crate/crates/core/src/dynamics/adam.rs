use crate::dynamics::mlp::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates shaped like the parameters they update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` along `grad`.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut MlpParams, grad: &MlpParams) {
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction the first update is lr * g / (|g| + eps)
        let mut p = MlpParams::zeros(&[2, 1]).unwrap();
        let mut g = p.zeros_like();
        g.layers[0].w[[0, 0]] = 3.0;
        g.layers[0].w[[1, 0]] = -0.5;
        let mut state = AdamState::new(&p);
        let cfg = AdamConfig::default();
        state.step(&cfg, &mut p, &g);
        assert!((p.layers[0].w[[0, 0]] + 1e-3).abs() < 1e-9);
        assert!((p.layers[0].w[[1, 0]] - 1e-3).abs() < 1e-9);
        assert_eq!(p.layers[0].b[0], 0.0);
        assert_eq!(state.t, 1);
    }
}
