use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use codesign::baselines::grid_search_design;
use codesign::control::ControllerRegistry;
use codesign::data::synthesize_year;
use codesign::experiment::{
    run_experiment, run_seed_sweep, seed_dir, write_plot_data, EnvSpec, ExperimentConfig,
    ScenarioRegistry, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "codesign", version, about = "Joint PV/battery sizing and dispatch learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seed, or every configured seed when --seed is omitted.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory; overrides CODESIGN_OUT_DIR and the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the rule-based controller on the design lattice.
    GridSearch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic year of PV and load data.
    SynthData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn finished runs into plotting-ready CSV files.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn output_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| config.output_dir.clone())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            scenario,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = scenario {
                cfg.scenario = s;
            }
            cfg.validate()?;
            let out = output_dir(out, &cfg);
            let env = EnvSpec::from_config(&cfg.dataset, cfg.env)?;
            let scenarios = ScenarioRegistry::default();
            let controllers = ControllerRegistry::default();
            scenarios.get(&cfg.scenario)?;
            match seed {
                Some(k) => {
                    let dir = seed_dir(&out, k);
                    let s = run_experiment(&cfg, k, &env, &dir, &scenarios, &controllers)?;
                    println!(
                        "{} seed {}: validation {:.3} ± {:.3}, written to {}",
                        s.scenario,
                        k,
                        s.last.validation_mean,
                        s.last.validation_std,
                        dir.display()
                    );
                }
                None => {
                    let report = run_seed_sweep(&cfg, &env, &out, &scenarios, &controllers)?;
                    println!(
                        "{}: {} seeds finished ({} resumed), {} failed, written to {}",
                        cfg.scenario,
                        report.runs.len(),
                        report.resumed.len(),
                        report.failures.len(),
                        out.display()
                    );
                    for f in &report.failures {
                        eprintln!("seed {} failed: {}", f.seed, f.error);
                    }
                    if report.runs.is_empty() {
                        bail!("every seed failed");
                    }
                }
            }
        }
        Command::GridSearch { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let env = EnvSpec::from_config(&cfg.dataset, cfg.env)?;
            let result = grid_search_design(&env, &cfg.grid)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            result.save_csv(&out)?;
            let best = result.best_entry();
            println!(
                "best design: {} kWp, {} kWh (return {:.3} ± {:.3}); table written to {}",
                best.pv_kwp,
                best.battery_kwh,
                best.mean_return,
                best.std_return,
                out.display()
            );
        }
        Command::SynthData { seed, out } => {
            synthesize_year(seed).save_csv(&out)?;
            println!("synthetic year (seed {seed}) written to {}", out.display());
        }
        Command::PlotData { input, out } => {
            for f in write_plot_data(&input, &out)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}
