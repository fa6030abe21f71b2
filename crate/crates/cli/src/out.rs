//! Output-file writers and readers.
//!
//! Everything written here is byte-deterministic: JSON uses serde's stable
//! field order, CSV floats use the shortest round-trip form, and no file
//! carries timestamps. Rerunning a command with the same effective config
//! reproduces every file exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use homsde::calibrate::FitResult;
use homsde::data::PriceSeries;
use homsde::forecast::ModelRun;
use homsde::gof::{GofResult, LogHistogram};
use homsde::likelihood::FreeParam;
use homsde::model::ModelParams;
use homsde::sim::{ForecastEnsemble, StepSummary};
use homsde::PipelineConfig;
use serde::Serialize;

pub const METRICS_HEADER: &str = "model,mae,mre_pct,rmse,rmsr_pct,mxe";
pub const KS_HEADER: &str = "time,statistic,p_value";
pub const AD_HEADER: &str = "time,statistic,statistic_squared,crit_15pct,crit_10pct,crit_5pct,crit_2_5pct,crit_1pct";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("write: creating output directory {}", dir.display()))
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("write: {}", path.display()))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut body = serde_json::to_string_pretty(value).context("write: serializing json")?;
    body.push('\n');
    write_text(dir, name, &body)
}

/// The effective merged config is persisted with every run.
pub fn write_config(dir: &Path, config: &PipelineConfig) -> Result<()> {
    write_json(dir, "config.json", config)?;
    Ok(())
}

pub fn write_params(dir: &Path, name: &str, params: &ModelParams) -> Result<PathBuf> {
    write_json(dir, name, params)
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).with_context(|| format!("params: reading {}", path.display()))?;
    let params: ModelParams =
        serde_json::from_slice(&bytes).with_context(|| format!("params: parsing {}", path.display()))?;
    params.validate().with_context(|| format!("params: validating {}", path.display()))?;
    Ok(params)
}

/// Fit summary without the (potentially long) trace.
#[derive(Serialize)]
pub struct FitSummary<'a> {
    pub params: &'a ModelParams,
    pub final_loglik: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub mean_reverting: bool,
    pub history_len: usize,
    pub train_len: usize,
    pub validation_len: usize,
}

pub fn write_mean_path(dir: &Path, mean_path: &[f64]) -> Result<()> {
    let mut body = String::from("step,mean\n");
    for (k, m) in mean_path.iter().enumerate() {
        writeln!(body, "{},{}", k + 1, m).unwrap();
    }
    write_text(dir, "mean_path.csv", &body)?;
    Ok(())
}

pub fn write_ensemble_summary(dir: &Path, summary: &[StepSummary]) -> Result<()> {
    let mut body = String::from("step,mean,p05,p95\n");
    for (k, row) in summary.iter().enumerate() {
        writeln!(body, "{},{},{},{}", k + 1, row.mean, row.p05, row.p95).unwrap();
    }
    write_text(dir, "ensemble_summary.csv", &body)?;
    Ok(())
}

pub fn write_ensemble_paths(dir: &Path, ensemble: &ForecastEnsemble) -> Result<()> {
    let mut body = String::from("path");
    for k in 1..=ensemble.horizon() {
        write!(body, ",step_{k}").unwrap();
    }
    body.push('\n');
    for (p, path) in ensemble.paths.iter().enumerate() {
        write!(body, "{p}").unwrap();
        for value in path {
            write!(body, ",{value}").unwrap();
        }
        body.push('\n');
    }
    write_text(dir, "ensemble_paths.csv", &body)?;
    Ok(())
}

/// Reads a matrix previously written by [`write_ensemble_paths`].
pub fn read_ensemble_paths(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("ensemble: reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("ensemble: empty file")?;
    let width = header.split(',').count();
    anyhow::ensure!(width >= 2, "ensemble: header has no step columns");
    let mut paths = Vec::new();
    for (row, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let _index = fields.next();
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>().with_context(|| format!("ensemble: row {row} has a non-numeric value")))
            .collect::<Result<_>>()?;
        anyhow::ensure!(values.len() == width - 1, "ensemble: row {row} has {} values, expected {}", values.len(), width - 1);
        paths.push(values);
    }
    anyhow::ensure!(!paths.is_empty(), "ensemble: no paths in {}", path.display());
    Ok(paths)
}

/// One metric row per model, in the fixed column order.
pub fn write_metrics(dir: &Path, rows: &[(&str, &ModelRun)]) -> Result<()> {
    let mut body = String::from(METRICS_HEADER);
    body.push('\n');
    for (label, run) in rows {
        let r = &run.report;
        writeln!(body, "{label},{},{},{},{},{}", r.mae, r.mre_pct, r.rmse, r.rmsr_pct, r.mxe).unwrap();
    }
    write_text(dir, "metrics.csv", &body)?;
    Ok(())
}

/// Per-date realized prices next to both models' mean forecasts.
pub fn write_forecast_vs_realized(dir: &Path, validation: &PriceSeries, hom: &[f64], markov: &[f64]) -> Result<()> {
    let mut body = String::from("date,realized,hom_mean,markov_mean\n");
    for (i, obs) in validation.observations().iter().enumerate() {
        writeln!(body, "{},{},{},{}", obs.date, obs.price, hom[i], markov[i]).unwrap();
    }
    write_text(dir, "forecast_vs_realized.csv", &body)?;
    Ok(())
}

pub fn write_ks_rows(dir: &Path, rows: &[GofResult]) -> Result<()> {
    let mut body = String::from(KS_HEADER);
    body.push('\n');
    for row in rows {
        writeln!(body, "{},{},{}", row.horizon_step, row.statistic, row.p_value.unwrap_or(f64::NAN)).unwrap();
    }
    write_text(dir, "ks.csv", &body)?;
    Ok(())
}

pub fn write_ad_rows(dir: &Path, rows: &[GofResult]) -> Result<()> {
    let mut body = String::from(AD_HEADER);
    body.push('\n');
    for row in rows {
        let crit = row.ad_critical_values.unwrap_or_default();
        writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            row.horizon_step,
            row.statistic,
            row.statistic * row.statistic,
            crit[0],
            crit[1],
            crit[2],
            crit[3],
            crit[4]
        )
        .unwrap();
    }
    write_text(dir, "ad.csv", &body)?;
    Ok(())
}

pub fn write_histogram(dir: &Path, hist: &LogHistogram) -> Result<()> {
    let mut body = String::from("bin_left,bin_right,count,fitted_density\n");
    for i in 0..hist.counts.len() {
        writeln!(body, "{},{},{},{}", hist.edges[i], hist.edges[i + 1], hist.counts[i], hist.fitted_density[i]).unwrap();
    }
    write_text(dir, "histogram.csv", &body)?;
    Ok(())
}

pub fn write_frozen_runs(dir: &Path, series: &PriceSeries, runs: &[(usize, usize)]) -> Result<()> {
    let obs = series.observations();
    let mut body = String::from("start_index,end_index,start_date,end_date,price,run_length\n");
    for &(start, end) in runs {
        writeln!(
            body,
            "{start},{end},{},{},{},{}",
            obs[start].date,
            obs[end].date,
            obs[start].price,
            end - start + 1
        )
        .unwrap();
    }
    write_text(dir, "frozen_runs.csv", &body)?;
    Ok(())
}

pub fn write_profile(dir: &Path, free: FreeParam, points: &[(f64, Option<f64>)]) -> Result<PathBuf> {
    let name = match free {
        FreeParam::A => "profile_a.csv",
        FreeParam::B => "profile_b.csv",
        FreeParam::Sigma => "profile_sigma.csv",
        FreeParam::Tau => "profile_tau.csv",
    };
    let mut body = String::from("value,log_likelihood\n");
    for (value, ll) in points {
        match ll {
            Some(ll) => writeln!(body, "{value},{ll}").unwrap(),
            None => writeln!(body, "{value},").unwrap(),
        }
    }
    write_text(dir, name, &body)
}

pub fn write_trace(dir: &Path, fit: &FitResult) -> Result<()> {
    write_json(dir, "trace.json", &fit.trace)?;
    Ok(())
}
