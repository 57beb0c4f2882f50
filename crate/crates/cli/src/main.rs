use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hvac_core::dataset::Dataset;
use hvac_core::ensemble::Ensemble;
use hvac_core::harness::experiment::{
    collect_dataset, compare, run_control_experiment, train_and_save, write_run, COMPARISON_FILE,
    METRICS_FILE, RESULTS_FILE,
};
use hvac_core::harness::{compute_metrics, read_results_csv, ExperimentConfig, MetricsReport};

#[derive(Parser)]
#[command(name = "hvacmpc", about = "Ensemble-model MPC for multi-zone HVAC control", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the rule-based controller and write the transitions.
    Collect {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an ensemble on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ensemble directory to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop control on the simulator.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        controller: Option<String>,
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// Transitions that seed the sliding window for in-situ updates.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Steps between retrains; 0 disables them.
        #[arg(long)]
        update_period: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Output directory for results and metrics.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a results CSV.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
    },
    /// Run several controllers on the same weather and occupancy.
    Compare {
        /// Config file with a `controllers = rule,mppi,...` line.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    weather_csv: Option<PathBuf>,
    #[arg(long)]
    months: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlannerArgs {
    /// Sampled sequences per step (K).
    #[arg(long)]
    samples: Option<usize>,
    /// Planning horizon in steps (H).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// MPPI temperature.
    #[arg(long)]
    lambda: Option<f64>,
    /// MPPI noise as a fraction of each action range.
    #[arg(long)]
    sigma_fraction: Option<f64>,
    #[arg(long)]
    cem_iterations: Option<usize>,
    /// MPPI buffer tail: `rule` or `repeat`.
    #[arg(long)]
    refill: Option<String>,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p, &[])?.0,
        None => ExperimentConfig::default(),
    })
}

fn apply(cfg: &mut ExperimentConfig, overrides: &[(&str, Option<String>)]) -> Result<()> {
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn show<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn common_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = load_config(c.config.as_deref())?;
    apply(
        &mut cfg,
        &[
            ("profile", c.profile.clone()),
            ("weather_csv", c.weather_csv.as_ref().map(|p| p.display().to_string())),
            ("months", show(&c.months)),
            ("seed", show(&c.seed)),
        ],
    )?;
    Ok(cfg)
}

fn print_metrics(label: &str, m: &MetricsReport) {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    println!(
        "{label}: energy {:.1} kWh (heat {:.1}, cool {:.1}), violation rate {:.4}, PMV {} ± {}, reward {:.1}",
        m.total_kwh(),
        m.total_heat_kwh,
        m.total_cool_kwh,
        m.violation_rate,
        opt(m.pmv_mean),
        opt(m.pmv_std),
        m.total_reward()
    );
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Collect { common, out } => {
            let cfg = common_config(&common)?;
            let data = collect_dataset(&cfg)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            data.write_csv(&out)?;
            println!("wrote {} transitions to {}", data.len(), out.display());
        }
        Command::Train {
            data,
            models,
            epochs,
            seed,
            batch_size,
            learning_rate,
            config,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            apply(
                &mut cfg,
                &[
                    ("models", show(&models)),
                    ("epochs", show(&epochs)),
                    ("train_seed", show(&seed)),
                    ("batch_size", show(&batch_size)),
                    ("learning_rate", show(&learning_rate)),
                ],
            )?;
            let dataset = Dataset::read_csv(&data)?;
            let ens = train_and_save(&cfg, &dataset.transitions, &out)?;
            println!("trained {} models on {} transitions into {}", ens.len(), dataset.len(), out.display());
        }
        Command::Run {
            common,
            controller,
            ensemble,
            data,
            update_period,
            window,
            planner,
            out,
        } => {
            let mut cfg = common_config(&common)?;
            apply(
                &mut cfg,
                &[
                    ("controller", controller),
                    ("ensemble", ensemble.map(|p| p.display().to_string())),
                    ("update_period", show(&update_period)),
                    ("window", show(&window)),
                    ("samples", show(&planner.samples)),
                    ("horizon", show(&planner.horizon)),
                    ("gamma", show(&planner.gamma)),
                    ("lambda", show(&planner.lambda)),
                    ("sigma_fraction", show(&planner.sigma_fraction)),
                    ("cem_iterations", show(&planner.cem_iterations)),
                    ("refill", planner.refill),
                    ("out", out.map(|p| p.display().to_string())),
                ],
            )?;
            let ens = cfg.ensemble.as_deref().map(Ensemble::load).transpose()?;
            let history = match &data {
                Some(p) => Dataset::read_csv(p)?.transitions,
                None => Vec::new(),
            };
            let run = run_control_experiment(&cfg, ens, &history)?;
            write_run(&cfg.out, &run)?;
            if !run.update_steps.is_empty() {
                println!("retrained before steps {:?}", run.update_steps);
            }
            print_metrics(&cfg.controller.to_string(), &run.metrics);
            println!(
                "wrote {} and {}",
                cfg.out.join(RESULTS_FILE).display(),
                cfg.out.join(METRICS_FILE).display()
            );
        }
        Command::Evaluate { results } => {
            let rows = read_results_csv(&results)?;
            print_metrics(&results.display().to_string(), &compute_metrics(&rows)?);
        }
        Command::Compare { spec, out } => {
            let (base, extra) = ExperimentConfig::load(&spec, &["controllers"])?;
            let Some((_, list)) = extra.last() else {
                bail!("{}: missing `controllers = ...`", spec.display());
            };
            let configs = list
                .split(',')
                .map(|c| {
                    let mut cfg = base.clone();
                    cfg.set("controller", c)?;
                    Ok(cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let ens = base.ensemble.as_deref().map(Ensemble::load).transpose()?;
            let table = compare(&configs, ens)?;
            for (label, m) in table.labels.iter().zip(&table.reports) {
                print_metrics(label, m);
            }
            let dir = out.unwrap_or(base.out);
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(COMPARISON_FILE);
            table.write_csv(&path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
