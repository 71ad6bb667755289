//! Joint optimisation of the sizing (PV peak power, battery capacity) and the
//! dispatch policy of a building-scale PV / battery / EV energy system.
//!
//! A deterministic actor-critic controller is trained on a design-conditioned
//! hourly simulator while a log-normal mixture over designs is trained with
//! score-function gradients and an annealed entropy bonus.

pub mod baselines;
pub mod control;
pub mod data;
pub mod ddpg;
pub mod design;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
