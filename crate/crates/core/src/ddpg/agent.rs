use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::buffer::{ReplayBuffer, Transition};
use super::features::{actor_input, critic_input, ACTION_DIM, DESIGN_FEATURES, STATE_FEATURES};
use super::FeatureScales;
use crate::error::{Error, Result};
use crate::nn::{clip_gradients, soft_update, Activation, Adam, Gradients, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgHyper {
    /// Discount factor for the critic's bootstrap target.
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Exploration noise std as a fraction of the half action range.
    pub exploration_std: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub updates_per_iteration: usize,
    pub hidden_layers: Vec<usize>,
    pub grad_clip: f64,
    /// Multiplier applied to rewards before critic regression.
    pub reward_scale: f64,
    /// Scale of the actor's initial output layer.
    pub actor_output_init: f64,
    pub features: FeatureScales,
}

impl Default for DdpgHyper {
    fn default() -> Self {
        Self {
            gamma: 0.995,
            batch_size: 256,
            buffer_capacity: 100_000,
            exploration_std: 0.1,
            tau: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            updates_per_iteration: 168,
            hidden_layers: vec![256, 256],
            grad_clip: 1.0,
            reward_scale: 1.0,
            actor_output_init: 1e-3,
            features: FeatureScales::default(),
        }
    }
}

impl DdpgHyper {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(self.exploration_std >= 0.0) {
            return fail("exploration_std must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return fail("tau must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return fail("batch size and buffer capacity must be positive");
        }
        if !(self.grad_clip > 0.0) {
            return fail("grad_clip must be positive");
        }
        if self.hidden_layers.iter().any(|&h| h == 0) {
            return fail("hidden layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub critic_loss: f64,
    /// Mean critic value of the actor's actions on the minibatch.
    pub actor_objective: f64,
}

/// Mean of `Q(s, a, x)` over a batch and `dQ/da` per row.
pub fn critic_action_gradient(
    critic: &Network,
    actor_rows: &Array2<f64>,
    actions: &Array2<f64>,
) -> (f64, Array2<f64>) {
    let n = actor_rows.nrows() as f64;
    let cache = critic
        .forward_cached(critic_input(actor_rows, actions))
        .expect("critic input width");
    let mean_q = cache.output().sum() / n;
    let ones = Array2::from_elem((actor_rows.nrows(), 1), 1.0);
    let (_, input_grad) = critic.backward(&cache, ones.view()).expect("shape");
    let da = input_grad
        .slice(s![.., STATE_FEATURES..STATE_FEATURES + ACTION_DIM])
        .to_owned();
    (mean_q, da)
}

/// Gradient of `-mean Q(s, π(s, x), x)` with respect to the actor parameters,
/// where `dq_da` returns the mean Q and the per-row action gradient.
pub fn actor_gradient<F>(actor: &Network, actor_rows: &Array2<f64>, dq_da: F) -> (f64, Gradients)
where
    F: FnOnce(&Array2<f64>) -> (f64, Array2<f64>),
{
    let n = actor_rows.nrows() as f64;
    let cache = actor.forward_cached(actor_rows.clone()).expect("actor input width");
    let (mean_q, da) = dq_da(cache.output());
    let upstream = da.mapv(|v| -v / n);
    let (grads, _) = actor.backward(&cache, upstream.view()).expect("shape");
    (mean_q, grads)
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Network,
    pub critic: Network,
    pub actor_target: Network,
    pub critic_target: Network,
    actor_opt: Adam,
    critic_opt: Adam,
    pub hyper: DdpgHyper,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(hyper: DdpgHyper, rng: &mut R) -> Result<Self> {
        hyper.validate()?;
        let mut actor_sizes = vec![STATE_FEATURES + DESIGN_FEATURES];
        actor_sizes.extend(&hyper.hidden_layers);
        actor_sizes.push(ACTION_DIM);
        let mut actor = Network::new(&actor_sizes, Activation::Relu, Activation::Tanh, rng);
        actor.scale_output_layer(hyper.actor_output_init);

        let mut critic_sizes = vec![STATE_FEATURES + ACTION_DIM + DESIGN_FEATURES];
        critic_sizes.extend(&hyper.hidden_layers);
        critic_sizes.push(1);
        let critic = Network::new(&critic_sizes, Activation::Relu, Activation::Linear, rng);

        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt: Adam::new(hyper.actor_lr),
            critic_opt: Adam::new(hyper.critic_lr),
            hyper,
        })
    }

    /// Deterministic actions in `[-1, 1]^2` for rows of `[state | design]`.
    pub fn unit_actions(&self, actor_rows: &Array2<f64>) -> Array2<f64> {
        self.actor
            .forward_batch(actor_rows.view())
            .expect("actor input width")
    }

    /// Adds Gaussian noise with std `sigma` (in unit-action space) and clips
    /// to `[-1, 1]`.
    pub fn perturb<R: Rng + ?Sized>(unit: &mut Array2<f64>, sigma: f64, rng: &mut R) {
        if sigma == 0.0 {
            return;
        }
        for v in unit.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = (*v + sigma * z).clamp(-1.0, 1.0);
        }
    }

    /// Bootstrap targets `y = scale · r + γ · Q'(s', π'(s', x), x)`. Truncated
    /// transitions are bootstrapped like any other.
    pub fn critic_targets(&self, batch: &[&Transition]) -> Vec<f64> {
        let next_rows = actor_input(batch.iter().map(|t| (&t.next_state, &t.design)));
        let next_actions = self
            .actor_target
            .forward_batch(next_rows.view())
            .expect("actor input width");
        let q_next = self
            .critic_target
            .forward_batch(critic_input(&next_rows, &next_actions).view())
            .expect("critic input width");
        batch
            .iter()
            .enumerate()
            .map(|(i, t)| self.hyper.reward_scale * t.reward + self.hyper.gamma * q_next[[i, 0]])
            .collect()
    }

    fn critic_step(&mut self, batch: &[&Transition], targets: &[f64]) -> f64 {
        let n = batch.len() as f64;
        let rows = actor_input(batch.iter().map(|t| (&t.state, &t.design)));
        let actions = Array2::from_shape_fn((batch.len(), ACTION_DIM), |(i, j)| batch[i].action[j]);
        let cache = self
            .critic
            .forward_cached(critic_input(&rows, &actions))
            .expect("critic input width");
        let q = cache.output();
        let mut loss = 0.0;
        let mut upstream = Array2::zeros((batch.len(), 1));
        for (i, &y) in targets.iter().enumerate() {
            let err = q[[i, 0]] - y;
            loss += err * err / n;
            upstream[[i, 0]] = 2.0 * err / n;
        }
        let (mut grads, _) = self.critic.backward(&cache, upstream.view()).expect("shape");
        clip_gradients(&mut grads, self.hyper.grad_clip);
        self.critic_opt.step(&mut self.critic, &grads);
        loss
    }

    /// One ascent step on `mean Q(s, π(s, x), x)` through an arbitrary action
    /// gradient; returns the objective before the step.
    pub fn actor_step_with<F>(&mut self, actor_rows: &Array2<f64>, dq_da: F) -> f64
    where
        F: FnOnce(&Array2<f64>) -> (f64, Array2<f64>),
    {
        let (objective, mut grads) = actor_gradient(&self.actor, actor_rows, dq_da);
        clip_gradients(&mut grads, self.hyper.grad_clip);
        self.actor_opt.step(&mut self.actor, &grads);
        objective
    }

    /// Critic regression, actor ascent through the critic, then soft target
    /// updates. Returns `None` without touching any parameter when the buffer
    /// holds fewer transitions than one minibatch.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        rng: &mut R,
    ) -> Option<TrainDiagnostics> {
        if buffer.len() < self.hyper.batch_size || buffer.is_empty() {
            return None;
        }
        let batch = buffer.sample(self.hyper.batch_size, rng);
        let targets = self.critic_targets(&batch);
        let critic_loss = self.critic_step(&batch, &targets);

        let rows = actor_input(batch.iter().map(|t| (&t.state, &t.design)));
        let critic = &self.critic;
        let (objective, mut grads) =
            actor_gradient(&self.actor, &rows, |a| critic_action_gradient(critic, &rows, a));
        clip_gradients(&mut grads, self.hyper.grad_clip);
        self.actor_opt.step(&mut self.actor, &grads);

        soft_update(&mut self.actor_target, &self.actor, self.hyper.tau);
        soft_update(&mut self.critic_target, &self.critic, self.hyper.tau);
        Some(TrainDiagnostics {
            critic_loss,
            actor_objective: objective,
        })
    }
}
