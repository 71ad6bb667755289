use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControllerRegistry;
use crate::design::quantile;
use crate::error::{Error, Result};
use crate::experiment::{
    mean_std, read_metrics, run_experiment, EnvSpec, ExperimentConfig, IterationMetrics,
    RunSummary, ScenarioRegistry, METRICS_JSONL, SUMMARY_JSON,
};

pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const FINAL_CSV: &str = "final.csv";
pub const FAILURES_JSON: &str = "failures.json";

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub runs: Vec<RunSummary>,
    /// Seeds whose finished results were found on disk and reused.
    pub resumed: Vec<u64>,
    pub failures: Vec<SeedFailure>,
}

/// Median and quartiles of one metric at one iteration across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub metric: String,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub n: usize,
}

/// Last-iteration returns across seeds: mean and sample std of the per-seed
/// values, one row per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub scenario: String,
    pub seeds: usize,
    pub training_mean: f64,
    pub training_std: f64,
    pub long_term_mean: Option<f64>,
    pub long_term_std: Option<f64>,
    pub validation_mean: f64,
    pub validation_std: f64,
}

fn finished(dir: &Path, config: &ExperimentConfig) -> Option<RunSummary> {
    let text = fs::read_to_string(dir.join(SUMMARY_JSON)).ok()?;
    let s: RunSummary = serde_json::from_str(&text).ok()?;
    (s.scenario == config.scenario && s.iterations == config.iterations).then_some(s)
}

/// Runs every configured seed into `out_dir/seed_<k>`. Seeds with a finished
/// summary on disk are not rerun; a failing seed is recorded and the sweep
/// moves on. Aggregates are written over the seeds that completed.
pub fn run_seed_sweep(
    config: &ExperimentConfig,
    env: &EnvSpec,
    out_dir: &Path,
    scenarios: &ScenarioRegistry,
    controllers: &ControllerRegistry,
) -> Result<SweepReport> {
    if config.seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = SweepReport::default();
    for &seed in &config.seeds {
        let dir = seed_dir(out_dir, seed);
        if let Some(done) = finished(&dir, config) {
            report.resumed.push(seed);
            report.runs.push(done);
            continue;
        }
        match run_experiment(config, seed, env, &dir, scenarios, controllers) {
            Ok(s) => report.runs.push(s),
            Err(e) => report.failures.push(SeedFailure {
                seed,
                error: e.to_string(),
            }),
        }
    }

    let mut per_seed = Vec::with_capacity(report.runs.len());
    for run in &report.runs {
        per_seed.push(read_metrics(&seed_dir(out_dir, run.seed).join(METRICS_JSONL))?);
    }
    write_csv(&out_dir.join(AGGREGATE_CSV), &aggregate(&per_seed))?;
    let finals: Vec<IterationMetrics> = report.runs.iter().map(|r| r.last.clone()).collect();
    let rows: Vec<FinalRow> = final_row(&config.scenario, &finals).into_iter().collect();
    write_csv(&out_dir.join(FINAL_CSV), &rows)?;
    let path = out_dir.join(FAILURES_JSON);
    fs::write(&path, serde_json::to_string_pretty(&report.failures)?)
        .map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn quartiles(mut values: Vec<f64>) -> (f64, f64, f64) {
    values.sort_by(f64::total_cmp);
    (
        quantile(&values, 0.5),
        quantile(&values, 0.25),
        quantile(&values, 0.75),
    )
}

/// Per-iteration median and quartiles of every numeric metric across runs.
/// Metrics missing at an iteration (e.g. a skipped long-term evaluation) are
/// aggregated over the runs that have them, and omitted when none do.
pub fn aggregate(runs: &[Vec<IterationMetrics>]) -> Vec<AggregateRow> {
    let mut table: BTreeMap<usize, Vec<(&'static str, Vec<f64>)>> = BTreeMap::new();
    for run in runs {
        for m in run {
            let row = table.entry(m.iteration).or_default();
            for (name, value) in m.numeric_fields() {
                let slot = match row.iter().position(|(n, _)| *n == name) {
                    Some(p) => p,
                    None => {
                        row.push((name, Vec::new()));
                        row.len() - 1
                    }
                };
                if let Some(v) = value {
                    row[slot].1.push(v);
                }
            }
        }
    }
    let mut out = Vec::new();
    for (iteration, row) in table {
        for (name, values) in row {
            if values.is_empty() {
                continue;
            }
            let n = values.len();
            let (median, q25, q75) = quartiles(values);
            out.push(AggregateRow {
                iteration,
                metric: name.to_string(),
                median,
                q25,
                q75,
                n,
            });
        }
    }
    out
}

pub fn final_row(scenario: &str, finals: &[IterationMetrics]) -> Option<FinalRow> {
    if finals.is_empty() {
        return None;
    }
    let pick = |f: fn(&IterationMetrics) -> f64| mean_std(&finals.iter().map(f).collect::<Vec<_>>());
    let (training_mean, training_std) = pick(|m| m.weekly_mean);
    let (validation_mean, validation_std) = pick(|m| m.validation_mean);
    let lt: Vec<f64> = finals.iter().filter_map(|m| m.long_term_mean).collect();
    let (long_term_mean, long_term_std) = if lt.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&lt);
        (Some(m), Some(s))
    };
    Some(FinalRow {
        scenario: scenario.to_string(),
        seeds: finals.len(),
        training_mean,
        training_std,
        long_term_mean,
        long_term_std,
        validation_mean,
        validation_std,
    })
}
