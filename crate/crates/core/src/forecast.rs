//! Monte-Carlo mean-path forecasting over the validation window and the five
//! forecast error metrics, with exclusion-mask support for frozen markets.

use serde::{Deserialize, Serialize};

use crate::calibrate::{fit_pipeline, FitResult};
use crate::config::PipelineConfig;
use crate::data::{PriceSeries, SeriesSplit};
use crate::error::EvalError;
use crate::model::{HistoryWindow, ModelKind};
use crate::noise::derive_seed;
use crate::sim::{simulate_paths, ForecastEnsemble, SimConfig};

/// The five error metrics over the unmasked evaluation points.
///
/// `mae <= rmse <= mxe` and `mre_pct <= rmsr_pct` hold on any point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean absolute error, in price units.
    pub mae: f64,
    /// Mean relative error, in percent of the realized price.
    pub mre_pct: f64,
    /// Root mean square error, in price units.
    pub rmse: f64,
    /// Root mean square relative error, in percent.
    pub rmsr_pct: f64,
    /// Maximum absolute error, in price units.
    pub mxe: f64,
    pub n_points_used: usize,
    /// Inclusive index ranges that were excluded from the metrics.
    pub excluded_ranges: Vec<(usize, usize)>,
}

/// Pointwise arithmetic mean across paths.
///
/// Uses a running mean per step, so an ensemble of identical paths averages
/// to exactly that path.
pub fn mean_path(ensemble: &ForecastEnsemble) -> Vec<f64> {
    let horizon = ensemble.horizon();
    let mut out = vec![0.0; horizon];
    let mut column = vec![0.0; ensemble.n_paths()];
    for (k, slot) in out.iter_mut().enumerate() {
        for (path, value) in ensemble.paths.iter().zip(column.iter_mut()) {
            *value = path[k];
        }
        *slot = crate::sim::running_mean(&column);
    }
    out
}

/// Computes the five error metrics of a forecast against realized prices,
/// skipping indices covered by `mask` (inclusive ranges).
pub fn error_metrics(
    forecast: &[f64],
    realized: &[f64],
    mask: &[(usize, usize)],
) -> Result<EvalReport, EvalError> {
    if forecast.len() != realized.len() {
        return Err(EvalError::LengthMismatch { forecast: forecast.len(), realized: realized.len() });
    }
    let masked = |i: usize| mask.iter().any(|&(start, end)| i >= start && i <= end);

    let mut n = 0usize;
    let mut abs_sum = 0.0;
    let mut rel_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut rel_sq_sum = 0.0;
    let mut max_abs: f64 = 0.0;
    for i in 0..forecast.len() {
        if masked(i) {
            continue;
        }
        if realized[i] == 0.0 {
            return Err(EvalError::ZeroRealizedPrice { index: i });
        }
        let e = forecast[i] - realized[i];
        let rel = e / realized[i];
        n += 1;
        abs_sum += e.abs();
        // The denominator keeps its sign; with positive prices this is the
        // ordinary absolute relative error.
        rel_sum += e.abs() / realized[i];
        sq_sum += e * e;
        rel_sq_sum += rel * rel;
        max_abs = max_abs.max(e.abs());
    }
    if n == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let nf = n as f64;
    let mut excluded_ranges = mask.to_vec();
    excluded_ranges.sort_unstable();
    Ok(EvalReport {
        mae: abs_sum / nf,
        mre_pct: 100.0 * rel_sum / nf,
        rmse: (sq_sum / nf).sqrt(),
        rmsr_pct: 100.0 * (rel_sq_sum / nf).sqrt(),
        mxe: max_abs,
        n_points_used: n,
        excluded_ranges,
    })
}

/// Simulates the forecast ensemble for fitted parameters over the steps
/// after the training window. The start state is the last pre-validation
/// price and the delay buffer is the `tau` prices before it.
pub fn forecast_after_split(
    params: &crate::model::ModelParams,
    split: &SeriesSplit,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ForecastEnsemble, EvalError> {
    let prefix: Vec<f64> = split.pre_validation().iter().map(|o| o.price).collect();
    let window = HistoryWindow::from_tail(&prefix, params.tau)?;
    let config = SimConfig::new(horizon, n_paths, seed);
    Ok(simulate_paths(params, &window, &config)?)
}

/// One model's end of a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub params: crate::model::ModelParams,
    /// Present when this run calibrated the parameters itself.
    pub fit: Option<FitResult>,
    pub report: EvalReport,
    pub mean_path: Vec<f64>,
    /// Sub-seed the forecast ensemble was generated from.
    pub forecast_seed: u64,
}

/// Paired delayed-vs-memoryless evaluation on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub hom: ModelRun,
    pub markov: ModelRun,
    pub split: SeriesSplit,
}

/// Forecasts the validation window for given parameters and scores the mean
/// path against the realized prices under the config's exclusion mask.
pub fn evaluate_params(
    params: &crate::model::ModelParams,
    split: &SeriesSplit,
    config: &PipelineConfig,
) -> Result<ModelRun, EvalError> {
    let realized = split.validation.prices();
    let mask = split.validation.index_ranges_for_dates(&config.exclusions);
    let seed = derive_seed(config.seed, "forecast");
    let ensemble = forecast_after_split(params, split, realized.len(), config.n_paths, seed)?;
    let path = mean_path(&ensemble);
    let report = error_metrics(&path, &realized, &mask)?;
    Ok(ModelRun { params: *params, fit: None, report, mean_path: path, forecast_seed: seed })
}

/// Fits both models on the same split, forecasts both over the validation
/// window with the same noise stream, and scores both against the realized
/// validation prices under the same exclusion mask. Sharing the noise stream
/// makes the comparison paired.
pub fn compare_models(series: &PriceSeries, config: &PipelineConfig) -> Result<ModelComparison, EvalError> {
    let hom_outcome = fit_pipeline(series, &config.with_model(ModelKind::Hom))?;
    let markov_outcome = fit_pipeline(series, &config.with_model(ModelKind::Markov))?;
    let split = hom_outcome.split.clone();

    let run = |fit: FitResult| -> Result<ModelRun, EvalError> {
        let mut run = evaluate_params(&fit.params, &split, config)?;
        run.fit = Some(fit);
        Ok(run)
    };

    Ok(ModelComparison { hom: run(hom_outcome.fit)?, markov: run(markov_outcome.fit)?, split })
}
