use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn codesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codesign"))
        .args(args)
        .env_remove("CODESIGN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn tiny_config(dir: &Path, csv: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.toml");
    let text = format!(
        r#"
iterations = 2
designs_per_iteration = 2
episodes_per_iteration = 2
episode_hours = 24
seeds = [0, 1]

[evaluation]
weekly_episodes = 2
validation_episodes = 2
long_term_every = 0
summary_samples = 50

[dataset]
csv = "{}"

[ddpg]
hidden_layers = [8]
batch_size = 8

[grid]
horizon = 48
episodes = 1

[grid.lattice]
pv_kwp = [1.0, 4.0]
battery_kwh = [0.0, 5.0]
"#,
        csv.display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_run_sweep_and_plot_data_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("year.csv");
    let out = codesign(&["synth-data", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 8761);

    let cfg = tiny_config(tmp.path(), &csv);
    let runs = tmp.path().join("runs");
    let out = codesign(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        runs.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 seeds finished"));
    for seed in ["seed_0", "seed_1"] {
        assert!(runs.join(seed).join("summary.json").is_file());
        assert!(runs.join(seed).join("actor.ckpt").is_file());
    }

    let plots = tmp.path().join("plots");
    let out = codesign(&[
        "plot-data",
        "--in",
        runs.to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(plots.join("returns_by_iteration.csv").is_file());
}

#[test]
fn grid_search_writes_the_lattice_table() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("year.csv");
    assert!(codesign(&["synth-data", "--out", csv.to_str().unwrap()]).status.success());
    let cfg = tiny_config(tmp.path(), &csv);
    let table = tmp.path().join("grid").join("table.csv");
    let out = codesign(&[
        "grid-search",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&table).unwrap().lines().count(), 5);
}

#[test]
fn unknown_scenario_fails_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    let out = codesign(&[
        "run",
        "--scenario",
        "hill_climbing",
        "--seed",
        "0",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hill_climbing"));
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("year.csv");
    assert!(codesign(&["synth-data", "--out", csv.to_str().unwrap()]).status.success());
    let cfg = tiny_config(tmp.path(), &csv);
    let target = tmp.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_codesign"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "1"])
        .env("CODESIGN_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("seed_1").join("metrics.jsonl").is_file());
}
