use serde::{Deserialize, Serialize};

use super::Network;

/// Anything exposing its parameters as a fixed sequence of flat slices.
/// Two values are congruent when their slice lengths match pairwise.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer state. Moments are allocated on the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self::with_config(lr, AdamConfig::default())
    }

    pub fn with_config(lr: f64, config: AdamConfig) -> Self {
        Self {
            lr,
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One descent step: `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step<P: Parameters + ?Sized, G: Parameters + ?Sized>(&mut self, params: &mut P, grads: &G) {
        let g_slices = grads.param_slices();
        let mut p_slices = params.param_slices_mut();
        assert_eq!(p_slices.len(), g_slices.len(), "incongruent parameter sets");
        if self.first.is_empty() {
            self.first = g_slices.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in p_slices
            .iter_mut()
            .zip(&g_slices)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            assert_eq!(p.len(), g.len(), "incongruent parameter tensor");
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

pub fn global_norm<G: Parameters + ?Sized>(grads: &G) -> f64 {
    grads
        .param_slices()
        .iter()
        .flat_map(|s| s.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_gradients<G: Parameters + ?Sized>(grads: &mut G, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = global_norm(grads);
    if norm > max_norm {
        let factor = max_norm / norm;
        for s in grads.param_slices_mut() {
            for v in s.iter_mut() {
                *v *= factor;
            }
        }
    }
    norm
}

/// Polyak averaging: `target ← tau · source + (1 − tau) · target`.
pub fn soft_update(target: &mut Network, source: &Network, tau: f64) {
    assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1]");
    let src = source.param_slices();
    let mut dst = target.param_slices_mut();
    assert_eq!(src.len(), dst.len(), "incongruent networks");
    for (d, s) in dst.iter_mut().zip(&src) {
        assert_eq!(d.len(), s.len(), "incongruent layer");
        for (dv, sv) in d.iter_mut().zip(s.iter()) {
            *dv = tau * sv + (1.0 - tau) * *dv;
        }
    }
}
