//! Off-policy deterministic actor-critic learner conditioned on the design.

mod agent;
mod buffer;
mod features;

pub use agent::{
    actor_gradient, critic_action_gradient, DdpgAgent, DdpgHyper, TrainDiagnostics,
};
pub use buffer::{ReplayBuffer, Transition};
pub use features::{
    action_from_unit, actor_input, critic_input, design_features, state_features,
    FeatureScales, ACTION_DIM, DESIGN_FEATURES, STATE_FEATURES,
};
