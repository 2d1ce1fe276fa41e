//! `gab`: one binary wiring the library into reproducible experiment runs.
//!
//! Subcommands: `simulate`, `estimate binary|poisson`, `aggregate`,
//! `forecast`, `ingest`, `diagnose-coupling`. Each takes a JSON config,
//! writes plot-ready CSV/JSON into `--out-dir`, and records a
//! `manifest.json` with the resolved config so any run can be repeated
//! exactly. All randomness flows from the configured seed (overridable
//! with the global `--seed`). Exit codes: 0 success, 2 config/validation
//! error, 3 numerical failure. Set `GAB_LOG=debug` for verbose logging.

mod config;

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use config::*;
use gab_core::agg::{run_limit_experiment, run_network_limit_experiment, write_diagnostics_csv,
    write_network_comparison_csv};
use gab_core::mle::forecast::{forecast_one_step, mse_eval, BenchmarkForecaster};
use gab_core::mle::{filter::FilterInit, filtered_sum_path, fit_mle, FitFamily};
use gab_core::model::read_weight_matrix_csv;
use gab_core::pipeline::{load_panels, ols_residuals, read_binary_panel_csv,
    read_count_series_csv, threshold_binary};
use gab_core::poisson::{calibrate_binary_from_poisson, fit_poisson_mle, PoissonFitConfig};
use gab_core::sim::coupling::coupled_simulate;
use gab_core::sim::{aggregate_counts, simulate, SimConfig};
use gab_core::panel::BinaryMatrix;
use gab_core::{GabError, Result};

#[derive(Parser)]
#[command(name = "gab", version, about = "Generalized autoregressive binary process toolkit")]
struct Cli {
    /// Master seed override; replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "gab-out")]
    out_dir: PathBuf,
    /// Worker-thread cap; output is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory panel: writes p.csv, y.csv, X.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Maximum-likelihood estimation.
    Estimate {
        #[command(subcommand)]
        target: EstimateTarget,
    },
    /// Rare-events limit experiments: writes diagnostics.csv.
    Aggregate {
        #[arg(long)]
        config: PathBuf,
    },
    /// One-step-ahead forecast benchmark (Models 1–4): writes mse.csv.
    Forecast {
        #[arg(long)]
        config: PathBuf,
    },
    /// Returns + factors → binary tail-event panel.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Coupled-trajectory ergodicity diagnostic: writes coupling.csv.
    DiagnoseCoupling {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum EstimateTarget {
    /// Binary panel likelihood.
    Binary {
        #[arg(long)]
        config: PathBuf,
    },
    /// Poisson autoregression on aggregate counts.
    Poisson {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GAB_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(if e.is_numerical() { 3 } else { 2 });
    }
}

fn run(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Simulate { config } => cmd_simulate(cli, config),
        Command::Estimate { target: EstimateTarget::Binary { config } } => {
            cmd_estimate_binary(cli, config)
        }
        Command::Estimate { target: EstimateTarget::Poisson { config } } => {
            cmd_estimate_poisson(cli, config)
        }
        Command::Aggregate { config } => cmd_aggregate(cli, config),
        Command::Forecast { config } => cmd_forecast(cli, config),
        Command::Ingest { config } => cmd_ingest(cli, config),
        Command::DiagnoseCoupling { config } => cmd_coupling(cli, config),
    }
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

fn write_manifest<C: Serialize>(cli: &Cli, command: &str, resolved: &C) -> Result<()> {
    #[derive(Serialize)]
    struct Manifest<'a, C> {
        command: &'a str,
        version: &'a str,
        seed_override: Option<u64>,
        config: &'a C,
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed_override: cli.seed,
        config: resolved,
    };
    fs::write(cli.out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn write_file(cli: &Cli, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(cli.out_dir.join(name), buf)?;
    log::info!("wrote {}", cli.out_dir.join(name).display());
    Ok(())
}

fn write_json<T: Serialize>(cli: &Cli, name: &str, value: &T) -> Result<()> {
    fs::write(cli.out_dir.join(name), serde_json::to_string_pretty(value)?)?;
    log::info!("wrote {}", cli.out_dir.join(name).display());
    Ok(())
}

fn cmd_simulate(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: SimulateConfig = load_json(config_path)?;
    let mut spec = cfg.model.load(&base_dir(config_path))?;
    if let Some(wpath) = &cfg.network_csv {
        let full =
            if wpath.is_absolute() { wpath.clone() } else { base_dir(config_path).join(wpath) };
        spec.network = Some(read_weight_matrix_csv(&full)?);
    }
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    spec.ensure_valid()?;
    cfg.model = ModelRef::Inline(Box::new(spec.clone()));
    write_manifest(cli, "simulate", &cfg)?;

    let traj = simulate(&spec, &cfg.sim)?;
    write_file(cli, "p.csv", |w| traj.write_probability_csv(w))?;
    write_file(cli, "y.csv", |w| traj.write_outcome_csv(w))?;
    let counts = aggregate_counts(&traj);
    write_file(cli, "X.csv", |w| counts.write_csv(w))?;

    #[derive(Serialize)]
    struct Summary {
        n_series: usize,
        horizon: usize,
        mean_y: f64,
        mean_x: f64,
        spec_fingerprint: String,
    }
    let summary = Summary {
        n_series: traj.n_series(),
        horizon: traj.horizon(),
        mean_y: traj.mean_y(),
        mean_x: counts.mean(),
        spec_fingerprint: format!("{:016x}", traj.spec_fingerprint),
    };
    write_json(cli, "summary.json", &summary)
}

fn load_panel(path: &Path) -> Result<BinaryMatrix> {
    let (_, _, matrix) = read_binary_panel_csv(path)?;
    Ok(matrix)
}

fn cmd_estimate_binary(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: EstimateBinaryConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.fit.seed = seed;
    }
    write_manifest(cli, "estimate binary", &cfg)?;
    let base = base_dir(config_path);
    let panel_path =
        if cfg.panel_csv.is_absolute() { cfg.panel_csv.clone() } else { base.join(&cfg.panel_csv) };
    let panel = load_panel(&panel_path)?;
    let family = cfg.family.resolve(&base)?;
    let fit = fit_mle(&family, &panel, &cfg.fit.to_fit_config())?;
    write_json(cli, "fit.json", &fit)?;
    if cfg.export_sum_path {
        let path = filtered_sum_path(&family, &fit.params.values, &panel, &FilterInit::SampleMean)?;
        write_file(cli, "sum_p.csv", |w| {
            use std::io::Write;
            writeln!(w, "t,sum_p")?;
            for (t, v) in path {
                writeln!(w, "{t},{v}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_estimate_poisson(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: EstimatePoissonConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.fit.seed = seed;
    }
    write_manifest(cli, "estimate poisson", &cfg)?;
    let base = base_dir(config_path);
    let path = if cfg.counts_csv.is_absolute() {
        cfg.counts_csv.clone()
    } else {
        base.join(&cfg.counts_csv)
    };
    let xs = gab_core::poisson::CountSeries::new(read_count_series_csv(&path)?);
    let fit_cfg = PoissonFitConfig {
        include_dynamics: !cfg.no_dynamics,
        starts: cfg.fit.starts,
        seed: cfg.fit.seed,
        max_iters: cfg.fit.max_iters,
        min_len: cfg.fit.min_horizon,
        ..PoissonFitConfig::default()
    };
    let fit = fit_poisson_mle(&xs, &fit_cfg)?;
    write_json(cli, "poisson_fit.json", &fit)?;
    // overlay data: the count series with its filtered intensity attached
    let with_lambda = xs.with_lambda(&fit.params, fit.lambda0);
    write_file(cli, "lambda.csv", |w| with_lambda.write_csv(w))
}

fn cmd_aggregate(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: AggregateConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    write_manifest(cli, "aggregate", &cfg)?;
    let rows = run_limit_experiment(&cfg.scaling, &cfg.experiment)?;
    write_file(cli, "diagnostics.csv", |w| write_diagnostics_csv(&rows, w))?;
    if let Some(rule) = cfg.network_rule {
        let cmp = run_network_limit_experiment(&cfg.scaling, rule, &cfg.experiment)?;
        write_file(cli, "network_comparison.csv", |w| write_network_comparison_csv(&cmp, w))?;
    }
    Ok(())
}

fn cmd_forecast(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: ForecastConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.fit.seed = seed;
    }
    write_manifest(cli, "forecast", &cfg)?;
    let base = base_dir(config_path);
    let panel_path =
        if cfg.panel_csv.is_absolute() { cfg.panel_csv.clone() } else { base.join(&cfg.panel_csv) };
    let (dates, _ids, panel) = read_binary_panel_csv(&panel_path)?;

    let est_len = match (&cfg.split_date, cfg.holdout_len) {
        (Some(date), None) => {
            let strictly_before = dates.iter().take_while(|d| d.as_str() < date.as_str()).count();
            let through = dates.iter().take_while(|d| d.as_str() <= date.as_str()).count();
            if strictly_before != through {
                return Err(GabError::Config(format!(
                    "split date {date} collides with a data row"
                )));
            }
            strictly_before
        }
        (None, Some(h)) => panel.horizon().saturating_sub(h),
        _ => {
            return Err(GabError::Config(
                "give exactly one of split_date or holdout_len".into(),
            ))
        }
    };
    if est_len == 0 || est_len >= panel.horizon() {
        return Err(GabError::Config("empty estimation or holdout window".into()));
    }

    let est_panel = panel.window(0, est_len);
    // Model 1: heterogeneous interactive GAB without own-lag terms
    let m1_family = FitFamily::Interactive { include_alpha: false };
    let m1 = fit_mle(&m1_family, &est_panel, &cfg.fit.to_fit_config())?;
    let m1_spec = m1.to_model_spec()?;
    // Model 2: homogeneous spec calibrated from the aggregate Poisson MLE
    let counts = gab_core::poisson::CountSeries::new(
        (0..est_len).map(|t| est_panel.count_at(t)).collect(),
    );
    let pfit = fit_poisson_mle(
        &counts,
        &PoissonFitConfig { seed: cfg.fit.seed, ..PoissonFitConfig::default() },
    )?;
    let m2_spec = calibrate_binary_from_poisson(&pfit.params, panel.n_series())?;

    let models: [(&str, BenchmarkForecaster); 4] = [
        ("model1_interactive_heterogeneous", BenchmarkForecaster::Model(m1_spec)),
        ("model2_poisson_calibrated", BenchmarkForecaster::Model(m2_spec)),
        ("model3_constant", BenchmarkForecaster::Constant(cfg.constant_level)),
        ("model4_persistence", BenchmarkForecaster::Persistence),
    ];
    let mut lines = vec!["model,label,pooled_mse".to_string()];
    for (k, (label, fc)) in models.iter().enumerate() {
        let forecast = forecast_one_step(fc, &panel, est_len)?;
        let mse = mse_eval(&forecast, &panel)?;
        lines.push(format!("{},{label},{}", k + 1, mse.pooled));
        if k < 2 {
            write_file(cli, &format!("p_hat_model{}.csv", k + 1), |w| forecast.write_csv(w))?;
        }
    }
    write_file(cli, "mse.csv", |w| {
        use std::io::Write;
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

fn cmd_ingest(cli: &Cli, config_path: &Path) -> Result<()> {
    let cfg: IngestConfig = load_json(config_path)?;
    write_manifest(cli, "ingest", &cfg)?;
    let base = base_dir(config_path);
    let rpath = if cfg.returns_csv.is_absolute() {
        cfg.returns_csv.clone()
    } else {
        base.join(&cfg.returns_csv)
    };
    let fpath = if cfg.factors_csv.is_absolute() {
        cfg.factors_csv.clone()
    } else {
        base.join(&cfg.factors_csv)
    };
    let (returns, factors, report) = load_panels(&rpath, &fpath)?;
    let residuals = ols_residuals(&returns, &factors, &cfg.split_date)?;
    let panel = threshold_binary(&residuals, cfg.level, &cfg.split_date)?;
    write_file(cli, "binary_panel.csv", |w| panel.write_csv(w))?;
    write_file(cli, "thresholds.csv", |w| panel.write_thresholds_csv(w))?;
    write_json(cli, "load_report.json", &report)
}

fn cmd_coupling(cli: &Cli, config_path: &Path) -> Result<()> {
    let mut cfg: CouplingConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut spec = cfg.model.load(&base_dir(config_path))?;
    if let Some(wpath) = &cfg.network_csv {
        let full =
            if wpath.is_absolute() { wpath.clone() } else { base_dir(config_path).join(wpath) };
        spec.network = Some(read_weight_matrix_csv(&full)?);
    }
    spec.ensure_valid()?;
    cfg.model = ModelRef::Inline(Box::new(spec.clone()));
    write_manifest(cli, "diagnose-coupling", &cfg)?;

    let sim_cfg = SimConfig::fixed(cfg.seed, cfg.horizon, 0, vec![]);
    let trace = coupled_simulate(&spec, &cfg.init_a, &cfg.init_b, &sim_cfg, cfg.reps)?;
    write_file(cli, "coupling.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,mean_l1")?;
        for (t, d) in trace.mean_l1.iter().enumerate() {
            writeln!(w, "{t},{d}")?;
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct CouplingSummary {
        decay_slope: Option<f64>,
        fit_window: usize,
        contraction_satisfied: Option<bool>,
    }
    let summary = CouplingSummary {
        decay_slope: trace.decay_slope,
        fit_window: trace.fit_window,
        contraction_satisfied: trace.contraction_satisfied,
    };
    write_json(cli, "coupling.json", &summary)
}
