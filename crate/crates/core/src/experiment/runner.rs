use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{Controller, ControllerRegistry};
use crate::data::SplitKind;
use crate::design::{DesignSummary, EntropySchedule};
use crate::env::{Design, InitMode};
use crate::error::{Error, Result};
use crate::experiment::{
    evaluate, mean_std, rollout, DesignSource, EnvSpec, Episode, Evaluation, ExperimentConfig,
    ScenarioRegistry,
};
use crate::nn::write_checkpoint;
use crate::rng::{indexed, stream, Stream};

/// One row of a run's learning curve. Every field except the long-term pair
/// and the learner diagnostics is set on every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub entropy_weight: f64,
    /// Mean return of the exploratory training rollouts.
    pub rollout_mean: f64,
    pub weekly_mean: f64,
    pub weekly_std: f64,
    pub long_term_mean: Option<f64>,
    pub long_term_std: Option<f64>,
    pub validation_mean: f64,
    pub validation_std: f64,
    pub pv_q25: f64,
    pub pv_median: f64,
    pub pv_q75: f64,
    pub battery_q25: f64,
    pub battery_median: f64,
    pub battery_q75: f64,
    pub critic_loss: Option<f64>,
    pub actor_objective: Option<f64>,
    pub design_loss: Option<f64>,
}

impl IterationMetrics {
    /// Named numeric columns, in CSV order, for aggregation.
    pub fn numeric_fields(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("entropy_weight", Some(self.entropy_weight)),
            ("rollout_mean", Some(self.rollout_mean)),
            ("weekly_mean", Some(self.weekly_mean)),
            ("weekly_std", Some(self.weekly_std)),
            ("long_term_mean", self.long_term_mean),
            ("long_term_std", self.long_term_std),
            ("validation_mean", Some(self.validation_mean)),
            ("validation_std", Some(self.validation_std)),
            ("pv_q25", Some(self.pv_q25)),
            ("pv_median", Some(self.pv_median)),
            ("pv_q75", Some(self.pv_q75)),
            ("battery_q25", Some(self.battery_q25)),
            ("battery_median", Some(self.battery_median)),
            ("battery_q75", Some(self.battery_q75)),
            ("critic_loss", self.critic_loss),
            ("actor_objective", self.actor_objective),
            ("design_loss", self.design_loss),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.numeric_fields()
            .iter()
            .all(|(_, v)| v.is_none_or(f64::is_finite))
    }

    pub fn pv_iqr(&self) -> f64 {
        self.pv_q75 - self.pv_q25
    }

    pub fn battery_iqr(&self) -> f64 {
        self.battery_q75 - self.battery_q25
    }
}

/// Algorithm state of one seeded run.
pub struct Trainer {
    config: ExperimentConfig,
    scenario: String,
    seed: u64,
    env: EnvSpec,
    controller: Box<dyn Controller>,
    designs: Box<dyn DesignSource>,
    schedule: EntropySchedule,
    iteration: usize,
    initial_summary: DesignSummary,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(
        config: ExperimentConfig,
        seed: u64,
        env: EnvSpec,
        scenarios: &ScenarioRegistry,
        controllers: &ControllerRegistry,
    ) -> Result<Self> {
        config.validate()?;
        let scenario = scenarios.get(&config.scenario)?;
        let strategies = scenario.build(&config, &env, seed, controllers)?;
        let schedule = EntropySchedule::new(config.design.entropy_initial, config.iterations);
        let initial_summary = strategies.designs.summarize(
            config.evaluation.summary_samples,
            &mut stream(seed, Stream::Summary),
        );
        Ok(Self {
            scenario: scenario.name().to_string(),
            seed,
            env,
            controller: strategies.controller,
            designs: strategies.designs,
            schedule,
            iteration: 0,
            initial_summary,
            explore_rng: stream(seed, Stream::Exploration),
            replay_rng: stream(seed, Stream::Replay),
            config,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn scenario(&self) -> &str {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn controller(&self) -> &dyn Controller {
        self.controller.as_ref()
    }

    pub fn design_source(&self) -> &dyn DesignSource {
        self.designs.as_ref()
    }

    /// Quartiles of the design distribution before any update.
    pub fn initial_summary(&self) -> &DesignSummary {
        &self.initial_summary
    }

    /// With common random numbers, episode `e` shares its reset stream with
    /// every other episode of the same slot `e / d`.
    fn training_episodes(&self, designs: &[Design]) -> Vec<Episode> {
        let d = designs.len();
        let key = rand::RngCore::next_u64(&mut indexed(self.seed, Stream::Episodes, self.iteration as u64));
        (0..self.config.episodes_per_iteration)
            .map(|e| {
                let slot = if self.config.common_random_numbers { e / d } else { e };
                Episode {
                    design: designs[e % d],
                    reset_rng: indexed(key, Stream::Episodes, slot as u64),
                }
            })
            .collect()
    }

    fn sample_eval_designs(&self, count: usize) -> Vec<Design> {
        self.designs
            .sample(count, &mut indexed(self.seed, Stream::Evaluation, u64::MAX))
    }

    fn eval_seed(&self) -> u64 {
        self.seed
    }

    /// One outer iteration: collect, train the controller, update the design
    /// source, then evaluate the deterministic policy.
    pub fn run_iteration(&mut self) -> Result<IterationMetrics> {
        let cfg = &self.config;
        let i = self.iteration;
        let lambda = self.schedule.weight(i);

        let mut design_rng = indexed(self.seed, Stream::DesignSampling, i as u64);
        let designs = self.designs.sample(cfg.designs_per_iteration, &mut design_rng);
        let episodes = self.training_episodes(&designs);
        let learning = self.controller.is_trainable();
        let explore = if learning { Some(&mut self.explore_rng) } else { None };
        let collected = rollout(
            self.controller.as_ref(),
            &self.env,
            SplitKind::Training,
            cfg.episode_hours,
            InitMode::Training,
            &episodes,
            explore,
            learning,
        )?;
        let rollout_mean = mean_std(&collected.returns).0;

        let mut diagnostics = None;
        if learning {
            collected.replay_into(self.controller.as_mut(), &episodes);
            diagnostics = self.controller.train(&mut self.replay_rng);
        }

        let d = designs.len();
        let per_design: Vec<f64> = (0..d)
            .map(|k| {
                let mine: Vec<f64> = collected
                    .returns
                    .iter()
                    .skip(k)
                    .step_by(d)
                    .copied()
                    .collect();
                mean_std(&mine).0
            })
            .collect();
        let design_loss = if self.designs.is_learnable() {
            self.designs.update(&designs, &per_design, lambda)?
        } else {
            None
        };

        let cfg = &self.config;
        let ev = &cfg.evaluation;
        let weekly = evaluate(
            self.controller.as_ref(),
            &self.sample_eval_designs(ev.weekly_episodes),
            &self.env,
            SplitKind::Training,
            cfg.episode_hours,
            InitMode::Training,
            self.eval_seed(),
        )?;
        let validation = evaluate(
            self.controller.as_ref(),
            &self.sample_eval_designs(ev.validation_episodes),
            &self.env,
            SplitKind::Validation,
            self.env.data.split.hours(SplitKind::Validation),
            InitMode::Validation,
            self.eval_seed(),
        )?;
        let long_term: Option<Evaluation> = if cfg.long_term_due(i) {
            Some(evaluate(
                self.controller.as_ref(),
                &self.sample_eval_designs(ev.long_term_episodes),
                &self.env,
                SplitKind::Training,
                self.env.data.split.hours(SplitKind::Training),
                InitMode::Validation,
                self.eval_seed(),
            )?)
        } else {
            None
        };
        let summary = self
            .designs
            .summarize(ev.summary_samples, &mut stream(self.seed, Stream::Summary));

        self.iteration += 1;
        Ok(IterationMetrics {
            iteration: i,
            entropy_weight: lambda,
            rollout_mean,
            weekly_mean: weekly.mean,
            weekly_std: weekly.std,
            long_term_mean: long_term.as_ref().map(|e| e.mean),
            long_term_std: long_term.as_ref().map(|e| e.std),
            validation_mean: validation.mean,
            validation_std: validation.std,
            pv_q25: summary.pv_kwp.q25,
            pv_median: summary.pv_kwp.median,
            pv_q75: summary.pv_kwp.q75,
            battery_q25: summary.battery_kwh.q25,
            battery_median: summary.battery_kwh.median,
            battery_q75: summary.battery_kwh.q75,
            critic_loss: diagnostics.map(|d| d.critic_loss),
            actor_objective: diagnostics.map(|d| d.actor_objective),
            design_loss,
        })
    }

    /// Designs drawn from the current source for the final-distribution plot.
    pub fn final_designs(&self) -> Vec<Design> {
        self.designs.sample(
            self.config.evaluation.summary_samples,
            &mut stream(self.seed, Stream::Summary),
        )
    }
}

/// Outcome of a completed run, written last so its presence marks completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub iterations: usize,
    pub initial_design: DesignSummary,
    pub last: IterationMetrics,
}

pub const METRICS_JSONL: &str = "metrics.jsonl";
pub const METRICS_CSV: &str = "metrics.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const FINAL_DESIGNS_CSV: &str = "final_designs.csv";
pub const MIXTURE_JSON: &str = "mixture.json";
pub const ACTOR_CHECKPOINT: &str = "actor.ckpt";
pub const CRITIC_CHECKPOINT: &str = "critic.ckpt";
pub const CONFIG_TOML: &str = "config.toml";

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Runs every iteration of one seed, writing into `out_dir`:
/// per-iteration metrics (JSON lines and CSV), wall time per iteration,
/// the resolved config, final design samples, the mixture parameters and
/// network checkpoints when present, and finally the run summary.
pub fn run_experiment(
    config: &ExperimentConfig,
    seed: u64,
    env: &EnvSpec,
    out_dir: &Path,
    scenarios: &ScenarioRegistry,
    controllers: &ControllerRegistry,
) -> Result<RunSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let _ = fs::remove_file(out_dir.join(SUMMARY_JSON));
    let path = |name: &str| -> PathBuf { out_dir.join(name) };
    fs::write(path(CONFIG_TOML), config.to_toml_string()?)
        .map_err(|e| Error::io(path(CONFIG_TOML), e))?;

    let mut trainer = Trainer::new(config.clone(), seed, env.clone(), scenarios, controllers)?;
    let mut jsonl = create(&path(METRICS_JSONL))?;
    let mut csv_out = csv::Writer::from_writer(create(&path(METRICS_CSV))?);
    let mut timing = create(&path(TIMING_CSV))?;
    writeln!(timing, "iteration,wall_seconds").map_err(|e| Error::io(path(TIMING_CSV), e))?;

    let mut last = None;
    for _ in 0..config.iterations {
        let start = Instant::now();
        let m = trainer.run_iteration()?;
        let secs = start.elapsed().as_secs_f64();
        if !m.is_finite() {
            return Err(Error::Config(format!(
                "non-finite metrics at iteration {}",
                m.iteration
            )));
        }
        serde_json::to_writer(&mut jsonl, &m)?;
        writeln!(jsonl).map_err(|e| Error::io(path(METRICS_JSONL), e))?;
        csv_out.serialize(&m)?;
        writeln!(timing, "{},{secs:.6}", m.iteration).map_err(|e| Error::io(path(TIMING_CSV), e))?;
        last = Some(m);
    }
    jsonl.flush().map_err(|e| Error::io(path(METRICS_JSONL), e))?;
    csv_out.flush().map_err(|e| Error::io(path(METRICS_CSV), e))?;
    timing.flush().map_err(|e| Error::io(path(TIMING_CSV), e))?;

    let mut designs = csv::Writer::from_writer(create(&path(FINAL_DESIGNS_CSV))?);
    for d in trainer.final_designs() {
        designs.serialize(d)?;
    }
    designs.flush().map_err(|e| Error::io(path(FINAL_DESIGNS_CSV), e))?;
    if let Some(m) = trainer.design_source().mixture() {
        fs::write(path(MIXTURE_JSON), serde_json::to_string_pretty(m)?)
            .map_err(|e| Error::io(path(MIXTURE_JSON), e))?;
    }
    if let Some(agent) = trainer.controller().agent() {
        for (name, net) in [(ACTOR_CHECKPOINT, &agent.actor), (CRITIC_CHECKPOINT, &agent.critic)] {
            let mut w = create(&path(name))?;
            write_checkpoint(net, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path(name), e))?;
        }
    }

    let summary = RunSummary {
        scenario: trainer.scenario().to_string(),
        seed,
        iterations: config.iterations,
        initial_design: *trainer.initial_summary(),
        last: last.expect("at least one iteration"),
    };
    fs::write(path(SUMMARY_JSON), serde_json::to_string_pretty(&summary)?)
        .map_err(|e| Error::io(path(SUMMARY_JSON), e))?;
    Ok(summary)
}

/// Reads a run's metrics back from its JSON-lines file.
pub fn read_metrics(path: &Path) -> Result<Vec<IterationMetrics>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
