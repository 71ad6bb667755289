use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::GridSearchConfig;
use crate::ddpg::DdpgHyper;
use crate::env::{Design, EnvConstants};
use crate::error::{Error, Result};

/// Top-level run configuration, read from TOML. Every field is optional in
/// the file; omitted fields take the defaults listed on each item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered scenario name. Default `"co_optimisation"`; also
    /// `"design_only"` and `"fixed_design"`.
    pub scenario: String,
    /// Outer iterations M. Default 500.
    pub iterations: usize,
    /// Designs sampled per iteration d. Default 8.
    pub designs_per_iteration: usize,
    /// Training episodes per iteration, shared round-robin among the designs.
    /// Default 32.
    pub episodes_per_iteration: usize,
    /// Training episode length T in hours. Default 168.
    pub episode_hours: usize,
    /// Seeds run by a sweep. Default 0 through 29.
    pub seeds: Vec<u64>,
    /// Episodes that share a slot across designs also share their initial day,
    /// SoC fraction and EV arrivals. Default true.
    pub common_random_numbers: bool,
    /// Default `"runs"`; the `CODESIGN_OUT_DIR` environment variable and the
    /// CLI flag take precedence.
    pub output_dir: PathBuf,
    pub evaluation: EvaluationConfig,
    pub dataset: DatasetConfig,
    pub fixed_design: FixedDesignConfig,
    pub design: DesignConfig,
    pub env: EnvConstants,
    pub ddpg: DdpgHyper,
    pub grid: GridSearchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "co_optimisation".into(),
            iterations: 500,
            designs_per_iteration: 8,
            episodes_per_iteration: 32,
            episode_hours: 168,
            seeds: (0..30).collect(),
            common_random_numbers: true,
            output_dir: PathBuf::from("runs"),
            evaluation: EvaluationConfig::default(),
            dataset: DatasetConfig::default(),
            fixed_design: FixedDesignConfig::default(),
            design: DesignConfig::default(),
            env: EnvConstants::default(),
            ddpg: DdpgHyper::default(),
            grid: GridSearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Episodes of the weekly evaluation (training split, random start,
    /// `episode_hours` long). Default 32.
    pub weekly_episodes: usize,
    /// Episodes over the whole validation split. Default 32.
    pub validation_episodes: usize,
    /// Episodes over the whole training split. Default 32.
    pub long_term_episodes: usize,
    /// Run the long-term evaluation every k-th iteration; the last iteration
    /// is always evaluated. 0 disables it. Default 1.
    pub long_term_every: usize,
    /// Samples used for the design-distribution quartiles. Default 1000.
    pub summary_samples: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            weekly_episodes: 32,
            validation_episodes: 32,
            long_term_episodes: 32,
            long_term_every: 1,
            summary_samples: crate::design::SUMMARY_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Year CSV (`hour_of_year,normalized_pv,load_kw`). When absent a
    /// synthetic year is generated. Default none.
    pub csv: Option<PathBuf>,
    /// Seed of the synthetic year. Default 0.
    pub synthetic_seed: u64,
    /// Seed placing the validation weeks. Default 0.
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedDesignConfig {
    /// The design held fixed. When absent, the grid-search optimum under
    /// `[grid]` is used. Default none.
    pub design: Option<Design>,
    /// Registered controller name. Default `"rule_based"`.
    pub controller: String,
}

impl Default for FixedDesignConfig {
    fn default() -> Self {
        Self {
            design: None,
            controller: "rule_based".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Mixture components K. Default 3.
    pub components: usize,
    /// Initial per-dimension std of every component in log space. Default 1.0.
    pub initial_std: f64,
    /// Entropy weight at iteration 0, decayed linearly to zero at M/2.
    /// Default 0.1.
    pub entropy_initial: f64,
    /// Adam step size on the mixture parameters. Default 5e-3.
    pub learning_rate: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            components: 3,
            initial_std: 1.0,
            entropy_initial: 0.1,
            learning_rate: 5e-3,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.iterations == 0 {
            return fail("iterations must be at least 1");
        }
        if self.designs_per_iteration == 0 {
            return fail("designs_per_iteration must be at least 1");
        }
        if self.episodes_per_iteration < self.designs_per_iteration {
            return fail("episodes_per_iteration must be at least designs_per_iteration");
        }
        if self.episode_hours == 0 {
            return fail("episode_hours must be at least 1");
        }
        if self.design.components == 0 {
            return fail("design.components must be at least 1");
        }
        if !(self.design.initial_std > 0.0) || !(self.design.learning_rate > 0.0) {
            return fail("design.initial_std and design.learning_rate must be positive");
        }
        if !(self.design.entropy_initial >= 0.0) {
            return fail("design.entropy_initial must be non-negative");
        }
        let e = &self.evaluation;
        if e.weekly_episodes == 0 || e.validation_episodes == 0 || e.summary_samples == 0 {
            return fail("evaluation episode and sample counts must be positive");
        }
        if e.long_term_every > 0 && e.long_term_episodes == 0 {
            return fail("evaluation.long_term_episodes must be positive");
        }
        if let Some(d) = self.fixed_design.design {
            Design::new(d.pv_kwp, d.battery_kwh)?;
        }
        self.env.validate()?;
        self.ddpg.validate()?;
        Ok(())
    }

    /// Whether iteration `i` (0-based) runs the long-term evaluation.
    pub fn long_term_due(&self, i: usize) -> bool {
        let every = self.evaluation.long_term_every;
        every > 0 && (i % every == every - 1 || i + 1 == self.iterations)
    }
}
