//! Training orchestration: configuration, rollouts and evaluations, the
//! scenario registry, single runs, seed sweeps and plot-ready exports.

mod config;
mod plot;
mod rollout;
mod runner;
mod scenario;
mod sweep;

pub use config::{DatasetConfig, DesignConfig, EvaluationConfig, ExperimentConfig, FixedDesignConfig};
pub use plot::{write_plot_data, DESIGN_CSV, FINAL_DESIGN_SAMPLES_CSV, FINAL_TABLE_CSV, RETURNS_CSV};
pub use rollout::{
    evaluate, evaluation_episodes, mean_std, rollout, EnvSpec, Episode, Evaluation, Rollout,
    StepRecord,
};
pub use runner::{
    read_metrics, run_experiment, IterationMetrics, RunSummary, Trainer, ACTOR_CHECKPOINT,
    CONFIG_TOML, CRITIC_CHECKPOINT, FINAL_DESIGNS_CSV, METRICS_CSV, METRICS_JSONL, MIXTURE_JSON,
    SUMMARY_JSON, TIMING_CSV,
};
pub use scenario::{
    CoOptimisation, DesignOnly, DesignSource, FixedDesign, FixedSource, MixtureSource, Scenario,
    ScenarioRegistry, Strategies,
};
pub use sweep::{
    aggregate, final_row, run_seed_sweep, seed_dir, AggregateRow, FinalRow, SeedFailure,
    SweepReport, AGGREGATE_CSV, FAILURES_JSON, FINAL_CSV,
};
pub(crate) use sweep::write_csv;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "CODESIGN_OUT_DIR";
