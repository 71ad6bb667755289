//! Dispatch controllers behind a common trait, selectable by name.
//!
//! Every controller maps a batch of `(state, design)` pairs to actions.
//! Learning controllers additionally observe transitions and train between
//! rollouts; fixed controllers ignore both hooks.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;

use crate::baselines::rule_based_action;
use crate::ddpg::{
    action_from_unit, actor_input, design_features, state_features, DdpgAgent, DdpgHyper,
    ReplayBuffer, TrainDiagnostics, Transition, ACTION_DIM,
};
use crate::env::{Action, Design, EnvConstants, EnvState};
use crate::error::{Error, Result};

/// One observed environment step as seen by a learning controller.
#[derive(Debug, Clone, Copy)]
pub struct Experience<'a> {
    pub state: &'a EnvState,
    pub design: &'a Design,
    pub action: Action,
    pub reward: f64,
    pub next_state: &'a EnvState,
    pub truncated: bool,
}

pub trait Controller: Send {
    fn name(&self) -> &'static str;

    /// Deterministic actions, one per `(state, design)` pair.
    fn act(&self, states: &[EnvState], designs: &[Design]) -> Vec<Action>;

    /// Actions used while collecting training data.
    fn explore(&self, states: &[EnvState], designs: &[Design], _rng: &mut dyn rand::RngCore) -> Vec<Action> {
        self.act(states, designs)
    }

    fn is_trainable(&self) -> bool {
        false
    }

    fn observe(&mut self, _experience: Experience<'_>) {}

    /// Runs the controller's per-iteration parameter updates.
    fn train(&mut self, _rng: &mut dyn rand::RngCore) -> Option<TrainDiagnostics> {
        None
    }

    fn agent(&self) -> Option<&DdpgAgent> {
        None
    }
}

/// Battery-first self-consumption rule with no trainable parameters.
#[derive(Debug, Clone)]
pub struct RuleBasedController {
    consts: EnvConstants,
}

impl RuleBasedController {
    pub fn new(consts: EnvConstants) -> Self {
        Self { consts }
    }
}

impl Controller for RuleBasedController {
    fn name(&self) -> &'static str {
        "rule_based"
    }

    fn act(&self, states: &[EnvState], designs: &[Design]) -> Vec<Action> {
        states
            .iter()
            .zip(designs)
            .map(|(s, d)| rule_based_action(s, d, &self.consts))
            .collect()
    }
}

/// Actor-critic controller with its replay buffer.
#[derive(Debug, Clone)]
pub struct DdpgController {
    agent: DdpgAgent,
    buffer: ReplayBuffer,
    consts: EnvConstants,
}

impl DdpgController {
    pub fn new<R: Rng + ?Sized>(hyper: DdpgHyper, consts: EnvConstants, rng: &mut R) -> Result<Self> {
        let buffer = ReplayBuffer::new(hyper.buffer_capacity);
        Ok(Self {
            agent: DdpgAgent::new(hyper, rng)?,
            buffer,
            consts,
        })
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    fn rows(&self, states: &[EnvState], designs: &[Design]) -> Array2<f64> {
        let scales = &self.agent.hyper.features;
        let feats: Vec<_> = states
            .iter()
            .zip(designs)
            .map(|(s, d)| (state_features(s, d, &self.consts, scales), design_features(d, scales)))
            .collect();
        actor_input(feats.iter().map(|(s, x)| (s, x)))
    }

    fn to_actions(&self, unit: &Array2<f64>, designs: &[Design]) -> Vec<Action> {
        designs
            .iter()
            .enumerate()
            .map(|(i, d)| action_from_unit([unit[[i, 0]], unit[[i, 1]]], d, &self.consts))
            .collect()
    }

    fn unit_of(&self, action: Action, design: &Design) -> [f64; ACTION_DIM] {
        let bounds = Action::bounds(design, &self.consts);
        let mut unit = [0.0; ACTION_DIM];
        for (u, (a, b)) in unit.iter_mut().zip([action.battery_kw, action.ev_kw].into_iter().zip(bounds)) {
            *u = if b > 0.0 { (a / b).clamp(-1.0, 1.0) } else { 0.0 };
        }
        unit
    }
}

impl Controller for DdpgController {
    fn name(&self) -> &'static str {
        "ddpg"
    }

    fn act(&self, states: &[EnvState], designs: &[Design]) -> Vec<Action> {
        let unit = self.agent.unit_actions(&self.rows(states, designs));
        self.to_actions(&unit, designs)
    }

    fn explore(&self, states: &[EnvState], designs: &[Design], rng: &mut dyn rand::RngCore) -> Vec<Action> {
        let mut unit = self.agent.unit_actions(&self.rows(states, designs));
        DdpgAgent::perturb(&mut unit, self.agent.hyper.exploration_std, rng);
        self.to_actions(&unit, designs)
    }

    fn is_trainable(&self) -> bool {
        true
    }

    fn observe(&mut self, e: Experience<'_>) {
        let scales = &self.agent.hyper.features;
        let t = Transition {
            state: state_features(e.state, e.design, &self.consts, scales),
            design: design_features(e.design, scales),
            action: self.unit_of(e.action, e.design),
            reward: e.reward,
            next_state: state_features(e.next_state, e.design, &self.consts, scales),
            truncated: e.truncated,
        };
        self.buffer.push(t);
    }

    fn train(&mut self, rng: &mut dyn rand::RngCore) -> Option<TrainDiagnostics> {
        let mut last = None;
        let mut loss_sum = 0.0;
        let mut obj_sum = 0.0;
        let mut count = 0usize;
        for _ in 0..self.agent.hyper.updates_per_iteration {
            if let Some(d) = self.agent.train_step(&self.buffer, rng) {
                loss_sum += d.critic_loss;
                obj_sum += d.actor_objective;
                count += 1;
                last = Some(d);
            }
        }
        last.map(|_| TrainDiagnostics {
            critic_loss: loss_sum / count as f64,
            actor_objective: obj_sum / count as f64,
        })
    }

    fn agent(&self) -> Option<&DdpgAgent> {
        Some(&self.agent)
    }
}

/// Everything a controller factory may need.
#[derive(Debug, Clone)]
pub struct ControllerContext<'a> {
    pub consts: EnvConstants,
    pub ddpg: &'a DdpgHyper,
    pub seed: u64,
}

pub type ControllerFactory = fn(&ControllerContext<'_>) -> Result<Box<dyn Controller>>;

/// Name-indexed controller constructors.
#[derive(Clone)]
pub struct ControllerRegistry {
    factories: BTreeMap<&'static str, ControllerFactory>,
}

impl ControllerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: ControllerFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownName {
            kind: "controller",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        factory(ctx)
    }
}

impl Default for ControllerRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("rule_based", |ctx| {
            Ok(Box::new(RuleBasedController::new(ctx.consts)))
        });
        reg.register("ddpg", |ctx| {
            let mut rng = crate::rng::stream(ctx.seed, crate::rng::Stream::NetworkInit);
            Ok(Box::new(DdpgController::new(ctx.ddpg.clone(), ctx.consts, &mut rng)?))
        });
        reg
    }
}
