use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::Design;
use crate::error::{Error, Result};
use crate::experiment::{
    aggregate, final_row, read_metrics, write_csv, AggregateRow, FinalRow, RunSummary,
    FINAL_DESIGNS_CSV, METRICS_JSONL, SUMMARY_JSON,
};

pub const RETURNS_CSV: &str = "returns_by_iteration.csv";
pub const DESIGN_CSV: &str = "design_distribution_by_iteration.csv";
pub const FINAL_DESIGN_SAMPLES_CSV: &str = "final_design_samples.csv";
pub const FINAL_TABLE_CSV: &str = "final_returns.csv";

const RETURN_METRICS: [&str; 3] = ["weekly_mean", "long_term_mean", "validation_mean"];
const DESIGN_METRICS: [&str; 6] = [
    "pv_q25",
    "pv_median",
    "pv_q75",
    "battery_q25",
    "battery_median",
    "battery_q75",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScenarioRow {
    scenario: String,
    iteration: usize,
    metric: String,
    median: f64,
    q25: f64,
    q75: f64,
    n: usize,
}

impl ScenarioRow {
    fn new(scenario: &str, r: AggregateRow) -> Self {
        Self {
            scenario: scenario.to_string(),
            iteration: r.iteration,
            metric: r.metric,
            median: r.median,
            q25: r.q25,
            q75: r.q75,
            n: r.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRow {
    scenario: String,
    seed: u64,
    pv_kwp: f64,
    battery_kwh: f64,
}

fn find_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join(SUMMARY_JSON).is_file() && dir.join(METRICS_JSONL).is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        find_runs(&e, out)?;
    }
    Ok(())
}

/// Collects every finished run below `in_dir` and writes, per scenario:
/// return curves, design-distribution quartile curves, final design samples
/// and the last-iteration return table. Returns the files written.
pub fn write_plot_data(in_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    find_runs(in_dir, &mut dirs)?;
    if dirs.is_empty() {
        return Err(Error::Config(format!(
            "no finished runs found under {}",
            in_dir.display()
        )));
    }
    let mut by_scenario: BTreeMap<String, Vec<(RunSummary, PathBuf)>> = BTreeMap::new();
    for d in dirs {
        let path = d.join(SUMMARY_JSON);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let s: RunSummary = serde_json::from_str(&text)?;
        by_scenario.entry(s.scenario.clone()).or_default().push((s, d));
    }

    let mut returns = Vec::new();
    let mut design = Vec::new();
    let mut samples = Vec::new();
    let mut finals: Vec<FinalRow> = Vec::new();
    for (scenario, runs) in &by_scenario {
        let mut metrics = Vec::new();
        for (_, dir) in runs {
            metrics.push(read_metrics(&dir.join(METRICS_JSONL))?);
        }
        for row in aggregate(&metrics) {
            let target = if RETURN_METRICS.contains(&row.metric.as_str()) {
                &mut returns
            } else if DESIGN_METRICS.contains(&row.metric.as_str()) {
                &mut design
            } else {
                continue;
            };
            target.push(ScenarioRow::new(scenario, row));
        }
        for (summary, dir) in runs {
            let path = dir.join(FINAL_DESIGNS_CSV);
            if !path.is_file() {
                continue;
            }
            let mut r = csv::Reader::from_path(&path)?;
            for d in r.deserialize::<Design>() {
                let d = d?;
                samples.push(SampleRow {
                    scenario: scenario.clone(),
                    seed: summary.seed,
                    pv_kwp: d.pv_kwp,
                    battery_kwh: d.battery_kwh,
                });
            }
        }
        let last: Vec<_> = runs.iter().map(|(s, _)| s.last.clone()).collect();
        finals.extend(final_row(scenario, &last));
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files: Vec<PathBuf> = [RETURNS_CSV, DESIGN_CSV, FINAL_DESIGN_SAMPLES_CSV, FINAL_TABLE_CSV]
        .iter()
        .map(|n| out_dir.join(n))
        .collect();
    write_csv(&files[0], &returns)?;
    write_csv(&files[1], &design)?;
    write_csv(&files[2], &samples)?;
    write_csv(&files[3], &finals)?;
    Ok(files)
}
