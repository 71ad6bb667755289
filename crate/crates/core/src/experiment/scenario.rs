use std::collections::BTreeMap;

use rand::RngCore;

use crate::baselines::grid_search_design;
use crate::control::{Controller, ControllerContext, ControllerRegistry};
use crate::design::{
    design_loss, init_mixture, standardize_returns, update_design, DesignSummary, MixtureParams,
    Quartiles,
};
use crate::env::Design;
use crate::error::{Error, Result};
use crate::experiment::{EnvSpec, ExperimentConfig};
use crate::nn::Adam;
use crate::rng::{stream, Stream};

/// Where the designs of an iteration come from.
pub trait DesignSource: Send {
    fn name(&self) -> &'static str;

    fn sample(&self, count: usize, rng: &mut dyn RngCore) -> Vec<Design>;

    fn is_learnable(&self) -> bool {
        false
    }

    /// Moves the source towards high-return designs; returns the loss when
    /// an update happened.
    fn update(&mut self, _designs: &[Design], _returns: &[f64], _entropy_weight: f64) -> Result<Option<f64>> {
        Ok(None)
    }

    fn summarize(&self, samples: usize, rng: &mut dyn RngCore) -> DesignSummary;

    fn mixture(&self) -> Option<&MixtureParams> {
        None
    }
}

/// Log-normal mixture trained by score-function gradients.
#[derive(Debug, Clone)]
pub struct MixtureSource {
    params: MixtureParams,
    optimizer: Adam,
}

impl MixtureSource {
    pub fn new(params: MixtureParams, learning_rate: f64) -> Self {
        Self {
            params,
            optimizer: Adam::new(learning_rate),
        }
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }
}

impl DesignSource for MixtureSource {
    fn name(&self) -> &'static str {
        "mixture"
    }

    fn sample(&self, count: usize, rng: &mut dyn RngCore) -> Vec<Design> {
        self.params.sample_designs(count, rng)
    }

    fn is_learnable(&self) -> bool {
        true
    }

    fn update(&mut self, designs: &[Design], returns: &[f64], entropy_weight: f64) -> Result<Option<f64>> {
        let standardized = standardize_returns(returns);
        let loss = design_loss(&self.params, designs, &standardized, entropy_weight)?;
        update_design(&mut self.params, &loss.grad, &mut self.optimizer);
        Ok(Some(loss.loss))
    }

    fn summarize(&self, samples: usize, rng: &mut dyn RngCore) -> DesignSummary {
        self.params.summarize(samples, rng)
    }

    fn mixture(&self) -> Option<&MixtureParams> {
        Some(&self.params)
    }
}

/// A single design used for every episode.
#[derive(Debug, Clone, Copy)]
pub struct FixedSource {
    pub design: Design,
}

impl DesignSource for FixedSource {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn sample(&self, count: usize, _rng: &mut dyn RngCore) -> Vec<Design> {
        vec![self.design; count]
    }

    fn summarize(&self, _samples: usize, _rng: &mut dyn RngCore) -> DesignSummary {
        let q = |v: f64| Quartiles {
            q25: v,
            median: v,
            q75: v,
        };
        DesignSummary {
            pv_kwp: q(self.design.pv_kwp),
            battery_kwh: q(self.design.battery_kwh),
        }
    }
}

/// The controller and design source a scenario trains with.
pub struct Strategies {
    pub controller: Box<dyn Controller>,
    pub designs: Box<dyn DesignSource>,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;

    fn build(
        &self,
        config: &ExperimentConfig,
        env: &EnvSpec,
        seed: u64,
        controllers: &ControllerRegistry,
    ) -> Result<Strategies>;
}

fn mixture_source(config: &ExperimentConfig, seed: u64) -> Box<dyn DesignSource> {
    let mut rng = stream(seed, Stream::MixtureInit);
    let params = init_mixture(config.design.components, config.design.initial_std, &mut rng);
    Box::new(MixtureSource::new(params, config.design.learning_rate))
}

fn controller(
    name: &str,
    config: &ExperimentConfig,
    seed: u64,
    controllers: &ControllerRegistry,
) -> Result<Box<dyn Controller>> {
    controllers.build(
        name,
        &ControllerContext {
            consts: config.env,
            ddpg: &config.ddpg,
            seed,
        },
    )
}

/// Learned controller and learned design distribution.
pub struct CoOptimisation;

impl Scenario for CoOptimisation {
    fn name(&self) -> &'static str {
        "co_optimisation"
    }

    fn build(&self, config: &ExperimentConfig, _env: &EnvSpec, seed: u64, controllers: &ControllerRegistry) -> Result<Strategies> {
        Ok(Strategies {
            controller: controller("ddpg", config, seed, controllers)?,
            designs: mixture_source(config, seed),
        })
    }
}

/// Learned design distribution under the fixed expert rule.
pub struct DesignOnly;

impl Scenario for DesignOnly {
    fn name(&self) -> &'static str {
        "design_only"
    }

    fn build(&self, config: &ExperimentConfig, _env: &EnvSpec, seed: u64, controllers: &ControllerRegistry) -> Result<Strategies> {
        Ok(Strategies {
            controller: controller("rule_based", config, seed, controllers)?,
            designs: mixture_source(config, seed),
        })
    }
}

/// One design held fixed; the configured controller may still learn.
pub struct FixedDesign;

impl Scenario for FixedDesign {
    fn name(&self) -> &'static str {
        "fixed_design"
    }

    fn build(&self, config: &ExperimentConfig, env: &EnvSpec, seed: u64, controllers: &ControllerRegistry) -> Result<Strategies> {
        let design = match config.fixed_design.design {
            Some(d) => Design::new(d.pv_kwp, d.battery_kwh)?,
            None => grid_search_design(env, &config.grid)?.best,
        };
        Ok(Strategies {
            controller: controller(&config.fixed_design.controller, config, seed, controllers)?,
            designs: Box::new(FixedSource { design }),
        })
    }
}

/// Name-indexed scenarios.
pub struct ScenarioRegistry {
    scenarios: BTreeMap<&'static str, Box<dyn Scenario>>,
}

impl ScenarioRegistry {
    pub fn empty() -> Self {
        Self {
            scenarios: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, scenario: Box<dyn Scenario>) {
        self.scenarios.insert(scenario.name(), scenario);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.scenarios.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scenario> {
        self.scenarios
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "scenario",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }
}

impl Default for ScenarioRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(CoOptimisation));
        reg.register(Box::new(DesignOnly));
        reg.register(Box::new(FixedDesign));
        reg
    }
}
