use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::Design;
use crate::error::{Error, Result};
use crate::nn::Parameters;

/// PV peak power and battery capacity.
pub const DESIGN_DIMS: usize = 2;

/// Sample size used for end-of-training distribution summaries.
pub const SUMMARY_SAMPLES: usize = 1000;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Mixture of `K` log-normal components with diagonal covariance.
///
/// Parameters are kept in one flat vector laid out as
/// `[logits (K) | log-space means (K x 2) | log of log-space std (K x 2)]`,
/// which is also the layout of its gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    components: usize,
    values: Vec<f64>,
}

impl MixtureParams {
    pub fn new(logits: &[f64], log_means: &[[f64; 2]], log_stds: &[[f64; 2]]) -> Result<Self> {
        let k = logits.len();
        if k == 0 {
            return Err(Error::Config("a mixture needs at least one component".into()));
        }
        if log_means.len() != k || log_stds.len() != k {
            return Err(Error::Dimension {
                expected: k,
                actual: log_means.len().min(log_stds.len()),
            });
        }
        let mut values = logits.to_vec();
        values.extend(log_means.iter().flatten());
        values.extend(log_stds.iter().flatten());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("mixture parameters must be finite".into()));
        }
        Ok(Self {
            components: k,
            values,
        })
    }

    /// Same shape, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            components: self.components,
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn logits(&self) -> &[f64] {
        &self.values[..self.components]
    }

    fn mean_index(&self, k: usize, j: usize) -> usize {
        self.components + k * DESIGN_DIMS + j
    }

    fn log_std_index(&self, k: usize, j: usize) -> usize {
        self.components * (1 + DESIGN_DIMS) + k * DESIGN_DIMS + j
    }

    /// Log-space mean of dimension `j` in component `k`.
    pub fn log_mean(&self, k: usize, j: usize) -> f64 {
        self.values[self.mean_index(k, j)]
    }

    pub fn log_mean_mut(&mut self, k: usize, j: usize) -> &mut f64 {
        let i = self.mean_index(k, j);
        &mut self.values[i]
    }

    /// Log of the log-space standard deviation.
    pub fn log_std(&self, k: usize, j: usize) -> f64 {
        self.values[self.log_std_index(k, j)]
    }

    pub fn log_std_mut(&mut self, k: usize, j: usize) -> &mut f64 {
        let i = self.log_std_index(k, j);
        &mut self.values[i]
    }

    pub fn std(&self, k: usize, j: usize) -> f64 {
        self.log_std(k, j).exp()
    }

    pub fn logit_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.values[k]
    }

    /// Component weights (softmax of the logits).
    pub fn weights(&self) -> Vec<f64> {
        let logits = self.logits();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    fn log_weights(&self) -> Vec<f64> {
        let logits = self.logits();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        logits.iter().map(|l| l - lse).collect()
    }

    /// Mixture mean of `log x` per dimension.
    pub fn mean_log(&self) -> [f64; 2] {
        let w = self.weights();
        let mut out = [0.0; 2];
        for (k, wk) in w.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += wk * self.log_mean(k, j);
            }
        }
        out
    }

    fn pick_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let w = self.weights();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            acc += wk;
            if u < acc {
                return k;
            }
        }
        w.len() - 1
    }

    /// Draws `count` designs: a component from the weights, then independent
    /// log-normal coordinates.
    pub fn sample_designs<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Design> {
        (0..count)
            .map(|_| {
                let k = self.pick_component(rng);
                let mut x = [0.0; 2];
                for (j, xj) in x.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(rng);
                    let v = (self.log_mean(k, j) + self.std(k, j) * z).exp();
                    *xj = v.clamp(f64::MIN_POSITIVE, f64::MAX);
                }
                Design {
                    pv_kwp: x[0],
                    battery_kwh: x[1],
                }
            })
            .collect()
    }

    fn log_coords(design: &Design) -> Result<[f64; 2]> {
        if !(design.pv_kwp > 0.0 && design.battery_kwh > 0.0)
            || !design.pv_kwp.is_finite()
            || !design.battery_kwh.is_finite()
        {
            return Err(Error::Domain {
                pv_kwp: design.pv_kwp,
                battery_kwh: design.battery_kwh,
            });
        }
        Ok([design.pv_kwp.ln(), design.battery_kwh.ln()])
    }

    /// Per-component joint log-densities including the log weight.
    fn component_terms(&self, log_x: &[f64; 2]) -> Vec<f64> {
        let log_w = self.log_weights();
        (0..self.components)
            .map(|k| {
                let mut acc = log_w[k];
                for (j, &lx) in log_x.iter().enumerate() {
                    let log_s = self.log_std(k, j);
                    let z = (lx - self.log_mean(k, j)) / log_s.exp();
                    acc += -lx - log_s - HALF_LN_2PI - 0.5 * z * z;
                }
                acc
            })
            .collect()
    }

    /// Log-density at a strictly positive design.
    pub fn log_prob(&self, design: &Design) -> Result<f64> {
        let log_x = Self::log_coords(design)?;
        Ok(log_sum_exp(&self.component_terms(&log_x)))
    }

    /// Log-density and its gradient with respect to every parameter.
    pub fn log_prob_grad(&self, design: &Design) -> Result<(f64, MixtureParams)> {
        let log_x = Self::log_coords(design)?;
        let terms = self.component_terms(&log_x);
        let lp = log_sum_exp(&terms);
        let w = self.weights();
        let mut grad = self.zeros_like();
        for k in 0..self.components {
            let resp = (terms[k] - lp).exp();
            grad.values[k] = resp - w[k];
            for (j, &lx) in log_x.iter().enumerate() {
                let s = self.std(k, j);
                let z = (lx - self.log_mean(k, j)) / s;
                let mi = grad.mean_index(k, j);
                grad.values[mi] = resp * z / s;
                let si = grad.log_std_index(k, j);
                grad.values[si] = resp * (z * z - 1.0);
            }
        }
        Ok((lp, grad))
    }

    /// Sample medians and quartiles per dimension.
    pub fn summarize<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> DesignSummary {
        assert!(samples >= 1, "need at least one sample");
        let designs = self.sample_designs(samples, rng);
        let mut pv: Vec<f64> = designs.iter().map(|d| d.pv_kwp).collect();
        let mut bat: Vec<f64> = designs.iter().map(|d| d.battery_kwh).collect();
        DesignSummary {
            pv_kwp: Quartiles::from_samples(&mut pv),
            battery_kwh: Quartiles::from_samples(&mut bat),
        }
    }
}

impl Parameters for MixtureParams {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.values]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.values]
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Random log-space means in `[0, 1)`, log-space std `sigma_high`, equal weights.
pub fn init_mixture<R: Rng + ?Sized>(components: usize, sigma_high: f64, rng: &mut R) -> MixtureParams {
    assert!(sigma_high > 0.0, "sigma must be positive");
    let logits = vec![0.0; components];
    let means: Vec<[f64; 2]> = (0..components)
        .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let stds = vec![[sigma_high.ln(); 2]; components];
    MixtureParams::new(&logits, &means, &stds).expect("well-formed by construction")
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn from_samples(values: &mut [f64]) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Self {
            q25: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q75: quantile(values, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub pv_kwp: Quartiles,
    pub battery_kwh: Quartiles,
}
