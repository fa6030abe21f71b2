//! Subcommand implementations. Each command loads the effective config,
//! runs its stage of the pipeline, writes machine-readable outputs into the
//! run directory alongside the config itself, and prints a short summary.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use homsde::calibrate::{fit_pipeline, pipeline_input, PipelineFit};
use homsde::data::{detect_frozen_runs, parse_csv, split_series, PriceSeries, SeriesSplit, SplitSpec};
use homsde::forecast::{evaluate_params, forecast_after_split, mean_path, ModelRun};
use homsde::gof::{ad_lognormal, ks_lognormal, log_histogram, GofResult};
use homsde::likelihood::{log_likelihood_profile, FreeParam};
use homsde::model::{HistoryWindow, ModelKind, ModelParams};
use homsde::noise::derive_seed;
use homsde::sim::{simulate_paths, SimConfig};
use homsde::PipelineConfig;
use serde::Serialize;

use crate::out;
use crate::{EnsembleExport, ProfileParam};

/// Loads the config file (TOML or JSON by extension) and applies CLI
/// overrides on top; flags beat file values beat defaults.
pub fn effective_config(common: &crate::CommonOpts) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        None => PipelineConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("config: reading {}", path.display()))?;
            match path.extension().and_then(|e| e.to_str()) {
                Some("toml") => toml::from_str(&text).with_context(|| format!("config: parsing {}", path.display()))?,
                Some("json") => serde_json::from_str(&text).with_context(|| format!("config: parsing {}", path.display()))?,
                _ => bail!("config: unrecognized extension on {} (expected .toml or .json)", path.display()),
            }
        }
    };
    if let Some(input) = &common.input {
        config.input = Some(input.clone());
    }
    if let Some(dir) = &common.output_dir {
        config.output_dir = Some(dir.clone());
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(history_len) = common.history_len {
        config.history_len = history_len;
    }
    if let Some(train_frac) = common.train_frac {
        config.train_frac = train_frac;
    }
    if let Some(n_paths) = common.n_paths {
        config.n_paths = n_paths;
    }
    if let Some(horizon) = common.horizon {
        config.horizon = Some(horizon);
    }
    Ok(config)
}

fn output_dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("homsde_out"))
}

fn ingest(config: &PipelineConfig) -> Result<PriceSeries> {
    let path = config.input.as_ref().context("ingest: no input file given (set --input or the config's `input`)")?;
    let bytes = fs::read(path).with_context(|| format!("ingest: reading {}", path.display()))?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    let series =
        parse_csv(&bytes, &config.schema, label).with_context(|| format!("ingest: parsing {}", path.display()))?;
    Ok(series)
}

fn split(series: &PriceSeries, config: &PipelineConfig) -> Result<SeriesSplit> {
    split_series(series, &SplitSpec { history_len: config.history_len, train_frac: config.train_frac })
        .context("split: carving history/train/validation")
}

pub fn cmd_fit(
    common: &crate::CommonOpts,
    model: ModelKind,
    trace: bool,
    profile: Option<ProfileParam>,
) -> Result<()> {
    let config = effective_config(common)?.with_model(model);
    let series = ingest(&config)?;
    let outcome: PipelineFit = fit_pipeline(&series, &config).context("fit: calibrating parameters")?;

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    out::write_params(&dir, "params.json", &outcome.fit.params)?;
    out::write_json(
        &dir,
        "fit.json",
        &out::FitSummary {
            params: &outcome.fit.params,
            final_loglik: outcome.fit.final_loglik,
            sweeps: outcome.fit.sweeps,
            converged: outcome.fit.converged,
            mean_reverting: outcome.fit.is_mean_reverting(),
            history_len: outcome.split.history.len(),
            train_len: outcome.split.train.len(),
            validation_len: outcome.split.validation.len(),
        },
    )?;
    if trace {
        out::write_trace(&dir, &outcome.fit)?;
    }
    if let Some(free) = profile {
        let free = FreeParam::from(free);
        let points = profile_grid(&series, &outcome, &config, free)?;
        out::write_profile(&dir, free, &points)?;
    }

    let p = outcome.fit.params;
    println!(
        "fit: kind={} a={} b={} sigma={} tau={} loglik={} sweeps={} converged={}",
        p.kind, p.a, p.b, p.sigma, p.tau, outcome.fit.final_loglik, outcome.fit.sweeps, outcome.fit.converged
    );
    if !outcome.fit.is_mean_reverting() {
        println!("fit: warning: a <= 0, the fitted model is not mean-reverting");
    }
    println!("fit: outputs in {}", dir.display());
    Ok(())
}

/// A 41-point diagnostic profile across the fitted parameter's search box.
fn profile_grid(
    series: &PriceSeries,
    outcome: &PipelineFit,
    config: &PipelineConfig,
    free: FreeParam,
) -> Result<Vec<(f64, Option<f64>)>> {
    let input = pipeline_input(series, &outcome.split, config).context("fit: preparing likelihood input")?;
    let bounds = config
        .bounds
        .resolve(&outcome.split.train.prices(), outcome.split.history.len())
        .context("fit: resolving search bounds")?;
    let grid: Vec<f64> = match free {
        FreeParam::A => linspace(bounds.a, 41),
        FreeParam::B => linspace(bounds.b, 41),
        FreeParam::Sigma => linspace(bounds.sigma, 41),
        FreeParam::Tau => {
            let (lo, hi) = bounds.tau;
            (lo..=hi).map(|t| t as f64).collect()
        }
    };
    Ok(log_likelihood_profile(&outcome.fit.params, &input, free, &grid))
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn cmd_forecast(common: &crate::CommonOpts, params_path: &Path, export: EnsembleExport) -> Result<()> {
    let config = effective_config(common)?;
    let params = out::read_params(params_path)?;
    let series = ingest(&config)?;
    let split = split(&series, &config)?;
    let horizon = config.horizon.unwrap_or_else(|| split.validation.len());
    let seed = derive_seed(config.seed, "forecast");
    let ensemble = forecast_after_split(&params, &split, horizon, config.n_paths, seed)
        .context("forecast: simulating the ensemble")?;

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    out::write_mean_path(&dir, &mean_path(&ensemble))?;
    match export {
        EnsembleExport::Summary => out::write_ensemble_summary(&dir, &ensemble.summarize())?,
        EnsembleExport::Paths => out::write_ensemble_paths(&dir, &ensemble)?,
    }
    println!(
        "forecast: {} paths over {} steps (seed {}), outputs in {}",
        ensemble.n_paths(),
        ensemble.horizon(),
        ensemble.seed,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ComparisonReport<'a> {
    hom: ModelSide<'a>,
    markov: ModelSide<'a>,
    forecast_seed: u64,
    history_len: usize,
    train_len: usize,
    validation_len: usize,
}

#[derive(Serialize)]
struct ModelSide<'a> {
    params: &'a ModelParams,
    final_loglik: Option<f64>,
    converged: Option<bool>,
    report: &'a homsde::EvalReport,
}

impl<'a> ModelSide<'a> {
    fn from_run(run: &'a ModelRun) -> Self {
        Self {
            params: &run.params,
            final_loglik: run.fit.as_ref().map(|f| f.final_loglik),
            converged: run.fit.as_ref().map(|f| f.converged),
            report: &run.report,
        }
    }
}

pub fn cmd_evaluate(
    common: &crate::CommonOpts,
    hom_params: Option<&Path>,
    markov_params: Option<&Path>,
) -> Result<()> {
    let config = effective_config(common)?;
    let series = ingest(&config)?;

    let (hom, markov, split) = match (hom_params, markov_params) {
        (Some(hom_path), Some(markov_path)) => {
            let split = split(&series, &config)?;
            let hom = evaluate_params(&out::read_params(hom_path)?, &split, &config)
                .context("evaluate: scoring the delayed model")?;
            let markov = evaluate_params(&out::read_params(markov_path)?, &split, &config)
                .context("evaluate: scoring the memoryless model")?;
            (hom, markov, split)
        }
        (None, None) => {
            let cmp = homsde::compare_models(&series, &config).context("evaluate: fitting and scoring both models")?;
            (cmp.hom, cmp.markov, cmp.split)
        }
        _ => bail!("evaluate: pass both --hom-params and --markov-params, or neither to fit in place"),
    };

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    out::write_metrics(&dir, &[("HOM", &hom), ("Markov", &markov)])?;
    out::write_forecast_vs_realized(&dir, &split.validation, &hom.mean_path, &markov.mean_path)?;
    out::write_json(
        &dir,
        "comparison.json",
        &ComparisonReport {
            hom: ModelSide::from_run(&hom),
            markov: ModelSide::from_run(&markov),
            forecast_seed: hom.forecast_seed,
            history_len: split.history.len(),
            train_len: split.train.len(),
            validation_len: split.validation.len(),
        },
    )?;

    for (label, run) in [("HOM", &hom), ("Markov", &markov)] {
        let r = &run.report;
        println!(
            "evaluate: {label} tau={} mae={:.4} mre={:.4}% rmse={:.4} rmsr={:.4}% mxe={:.4} (n={})",
            run.params.tau, r.mae, r.mre_pct, r.rmse, r.rmsr_pct, r.mxe, r.n_points_used
        );
    }
    println!("evaluate: outputs in {}", dir.display());
    Ok(())
}

pub fn cmd_goftest(
    common: &crate::CommonOpts,
    params_path: Option<&Path>,
    ensemble_path: Option<&Path>,
    steps_override: Option<Vec<usize>>,
    bins_override: Option<usize>,
) -> Result<()> {
    let config = effective_config(common)?;
    let steps = steps_override.unwrap_or_else(|| config.gof_steps.clone());
    anyhow::ensure!(!steps.is_empty(), "goftest: no horizon steps to test");
    let bins = bins_override.unwrap_or(config.gof_bins);

    let paths: Vec<Vec<f64>> = match (params_path, ensemble_path) {
        (Some(params_path), None) => {
            let params = out::read_params(params_path)?;
            let series = ingest(&config)?;
            let split = split(&series, &config)?;
            let horizon = config.horizon.unwrap_or_else(|| steps.iter().copied().max().unwrap());
            let seed = derive_seed(config.seed, "gof");
            forecast_after_split(&params, &split, horizon, config.n_paths, seed)
                .context("goftest: simulating the ensemble")?
                .paths
        }
        (None, Some(ensemble_path)) => out::read_ensemble_paths(ensemble_path)?,
        _ => bail!("goftest: pass exactly one of --params or --ensemble"),
    };
    let horizon = paths[0].len();

    let mut ks_rows: Vec<GofResult> = Vec::new();
    let mut ad_rows: Vec<GofResult> = Vec::new();
    for &step in &steps {
        anyhow::ensure!(step >= 1 && step <= horizon, "goftest: step {step} outside 1..={horizon}");
        let sample: Vec<f64> = paths.iter().map(|p| p[step - 1]).collect();
        ks_rows.push(ks_lognormal(&sample, step).with_context(|| format!("goftest: KS at step {step}"))?);
        ad_rows.push(ad_lognormal(&sample, step).with_context(|| format!("goftest: AD at step {step}"))?);
    }
    let last_step = *steps.last().unwrap();
    let last_sample: Vec<f64> = paths.iter().map(|p| p[last_step - 1]).collect();
    let histogram = log_histogram(&last_sample, last_step, bins)
        .with_context(|| format!("goftest: histogram at step {last_step}"))?;

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    out::write_ks_rows(&dir, &ks_rows)?;
    out::write_ad_rows(&dir, &ad_rows)?;
    out::write_histogram(&dir, &histogram)?;

    for (ks, ad) in ks_rows.iter().zip(&ad_rows) {
        println!(
            "goftest: step {} KS statistic={:.4} p={:.4} | AD statistic={:.4} reject_at={:?}",
            ks.horizon_step,
            ks.statistic,
            ks.p_value.unwrap_or(f64::NAN),
            ad.statistic,
            ad.reject_at
        );
    }
    println!("goftest: outputs in {}", dir.display());
    Ok(())
}

pub fn cmd_simulate(
    common: &crate::CommonOpts,
    params_path: &Path,
    anchor: Option<f64>,
    export: EnsembleExport,
) -> Result<()> {
    let config = effective_config(common)?;
    let params = out::read_params(params_path)?;
    let horizon = config.horizon.context("simulate: a horizon is required (--horizon or the config's `horizon`)")?;

    let window = match anchor {
        // Flat start: the delay buffer is filled with the anchor itself.
        Some(anchor) => HistoryWindow::new(vec![anchor; params.tau], anchor).context("simulate: building the start window")?,
        None => {
            let series = ingest(&config)?;
            let split = split(&series, &config)?;
            let prefix: Vec<f64> = split.pre_validation().iter().map(|o| o.price).collect();
            HistoryWindow::from_tail(&prefix, params.tau).context("simulate: building the start window")?
        }
    };
    let seed = derive_seed(config.seed, "simulate");
    let ensemble = simulate_paths(&params, &window, &SimConfig::new(horizon, config.n_paths, seed))
        .context("simulate: generating the ensemble")?;

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    match export {
        EnsembleExport::Summary => out::write_ensemble_summary(&dir, &ensemble.summarize())?,
        EnsembleExport::Paths => out::write_ensemble_paths(&dir, &ensemble)?,
    }
    println!(
        "simulate: {} paths over {} steps (seed {}), outputs in {}",
        ensemble.n_paths(),
        ensemble.horizon(),
        ensemble.seed,
        dir.display()
    );
    Ok(())
}

pub fn cmd_detect_frozen(common: &crate::CommonOpts, min_run: usize) -> Result<()> {
    anyhow::ensure!(min_run >= 2, "detect-frozen: --min-run must be at least 2");
    let config = effective_config(common)?;
    let series = ingest(&config)?;
    let runs = detect_frozen_runs(&series, min_run);

    let dir = output_dir(&config);
    out::ensure_dir(&dir)?;
    out::write_config(&dir, &config)?;
    out::write_frozen_runs(&dir, &series, &runs)?;

    let obs = series.observations();
    for &(start, end) in &runs {
        println!(
            "detect-frozen: [{start}, {end}] {}..{} price {} ({} observations)",
            obs[start].date,
            obs[end].date,
            obs[start].price,
            end - start + 1
        );
    }
    println!("detect-frozen: {} run(s) of >= {min_run} identical prices, outputs in {}", runs.len(), dir.display());
    Ok(())
}
