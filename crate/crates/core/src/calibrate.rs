//! Two-phase parameter estimation: a deterministic rough initialization,
//! then cyclic coordinate ascent of the log-likelihood over
//! `(a, b, sigma, tau)`.
//!
//! The initialization takes the reversion level from the training mean (the
//! long-run ensemble mean of the process), the diffusion scale from the
//! standard deviation of log prices, and picks `(a, tau)` jointly from a
//! small fixed grid. The ascent then maximizes one coordinate at a time:
//! golden-section line searches for the continuous parameters, an exhaustive
//! integer scan for the delay. A move is accepted only when it improves the
//! objective, so the per-sweep likelihood trace is non-decreasing by
//! construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::data::{split_series, PriceSeries, SeriesSplit, SplitSpec};
use crate::error::CalibrationError;
use crate::likelihood::{log_likelihood, LikelihoodInput};
use crate::model::{ModelKind, ModelParams};

/// Fixed mean-reversion speeds probed during initialization.
const A_GRID: [f64; 7] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

/// Number of delay values probed during initialization.
const TAU_GRID_POINTS: usize = 20;

/// Fraction of a coordinate's bound width used as the line-search tolerance.
const LINE_TOL_FRAC: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Per-parameter search bounds. `b` and `tau` default to data-dependent
/// boxes resolved at fit time: `b` spans `[0.2 min(train), 5 max(train)]`
/// and `tau` spans `[0, history_len]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBox {
    pub a: (f64, f64),
    pub b: Option<(f64, f64)>,
    pub sigma: (f64, f64),
    pub tau: Option<(usize, usize)>,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { a: (0.0, 1.0), b: None, sigma: (1e-6, 1.0), tau: None }
    }
}

/// A search box with the data-dependent defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedBounds {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub sigma: (f64, f64),
    pub tau: (usize, usize),
}

impl SearchBox {
    pub fn resolve(&self, train_prices: &[f64], history_len: usize) -> Result<ResolvedBounds, CalibrationError> {
        let b = self.b.unwrap_or_else(|| {
            let min = train_prices.iter().copied().fold(f64::INFINITY, f64::min);
            let max = train_prices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = (0.2 * min, 5.0 * max);
            if lo < hi {
                (lo, hi)
            } else {
                (min - 1.0, max + 1.0)
            }
        });
        let tau = self.tau.unwrap_or((0, history_len));

        for (name, (lo, hi)) in [("a", self.a), ("b", b), ("sigma", self.sigma)] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(CalibrationError::InvalidBounds(format!("{name} bounds ({lo}, {hi})")));
            }
        }
        if tau.0 > tau.1 {
            return Err(CalibrationError::InvalidBounds(format!("tau bounds ({}, {})", tau.0, tau.1)));
        }
        if tau.1 > history_len {
            return Err(CalibrationError::InvalidBounds(format!(
                "tau upper bound {} exceeds history_len {history_len}",
                tau.1
            )));
        }
        Ok(ResolvedBounds { a: self.a, b, sigma: self.sigma, tau })
    }
}

/// Rough starting point for the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitGuess {
    pub a0: f64,
    pub b0: f64,
    pub sigma0: f64,
    pub tau0: usize,
    pub search_box: ResolvedBounds,
}

/// One accepted state of the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub params: ModelParams,
    pub loglik: f64,
}

/// Outcome of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub final_loglik: f64,
    /// Completed sweeps over all four coordinates.
    pub sweeps: usize,
    /// False when the sweep budget ran out before the improvement fell
    /// below tolerance.
    pub converged: bool,
    /// Initialization state followed by one entry per completed sweep;
    /// log-likelihoods are non-decreasing.
    pub trace: Vec<TraceEntry>,
}

impl FitResult {
    /// A calibrated fit only describes a mean-reverting market when `a > 0`.
    pub fn is_mean_reverting(&self) -> bool {
        self.params.a > 0.0
    }
}

/// A fit plus the data split that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineFit {
    pub fit: FitResult,
    pub split: SeriesSplit,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn clamp(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.max(lo).min(hi)
}

/// Up to `TAU_GRID_POINTS` evenly spaced integers spanning `[lo, hi]`.
fn tau_grid((lo, hi): (usize, usize)) -> Vec<usize> {
    let span = hi - lo;
    if span + 1 <= TAU_GRID_POINTS {
        return (lo..=hi).collect();
    }
    let mut grid: Vec<usize> = (0..TAU_GRID_POINTS)
        .map(|i| lo + ((i as f64) * span as f64 / (TAU_GRID_POINTS - 1) as f64).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Deterministic rough estimates: moments for `b` and `sigma`, a joint grid
/// scan (at most `7 x 20` likelihood evaluations) for `a` and `tau`.
pub fn initial_guess(
    split: &SeriesSplit,
    bounds: &SearchBox,
    input: &LikelihoodInput,
) -> Result<InitGuess, CalibrationError> {
    let train = split.train.prices();
    let box_ = bounds.resolve(&train, split.history.len())?;

    let b0 = clamp(mean(&train), box_.b);
    let logs: Vec<f64> = train.iter().copied().filter(|p| *p > 0.0).map(f64::ln).collect();
    let sigma0 = clamp(sample_std(&logs).max(1e-6), box_.sigma);

    let mut best: Option<(f64, f64, usize)> = None; // (loglik, a, tau)
    let taus = tau_grid(box_.tau);
    let evals: Vec<(f64, usize, Result<f64, _>)> = A_GRID
        .iter()
        .copied()
        .map(|a| clamp(a, box_.a))
        .flat_map(|a| taus.iter().map(move |&t| (a, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, t)| {
            let params = ModelParams { a, b: b0, sigma: sigma0, tau: t, kind: ModelKind::Hom };
            (a, t, log_likelihood(&params, input))
        })
        .collect();
    for (a, t, ll) in evals {
        let ll = ll?;
        if best.is_none_or(|(cur, _, _)| ll > cur) {
            best = Some((ll, a, t));
        }
    }
    let (_, a0, tau0) = best.expect("grids are non-empty");

    Ok(InitGuess { a0, b0, sigma0, tau0, search_box: box_ })
}

/// Golden-section maximization of `f` on `[lo, hi]`. Returns the best probed
/// point and its value; `f` is only trusted at points it was evaluated at.
fn golden_max<F>(f: F, lo: f64, hi: f64, tol_x: f64) -> Result<(f64, f64), CalibrationError>
where
    F: Fn(f64) -> Result<f64, CalibrationError>,
{
    if hi <= lo {
        return Ok((lo, f(lo)?));
    }
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let mut iterations = 0;
    while b - a > tol_x && iterations < 200 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        let probe = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if probe.1 > best.1 {
            best = probe;
        }
        iterations += 1;
    }
    Ok(best)
}

/// Cyclic coordinate ascent in the fixed order `(a, b, sigma, tau)`.
///
/// Continuous coordinates are line-searched over their full bounds to an
/// absolute tolerance of `1e-10 x` the bound width; the delay is scanned
/// exhaustively. A coordinate moves only on strict improvement. The ascent
/// converges when a full sweep improves the log-likelihood by less than
/// `tol x |loglik|`; running out of sweeps reports `converged = false`
/// rather than an error.
pub fn coordinate_ascent(
    init: &InitGuess,
    input: &LikelihoodInput,
    kind: ModelKind,
    tol: f64,
    max_sweeps: usize,
) -> Result<FitResult, CalibrationError> {
    let box_ = init.search_box;
    let mut params = ModelParams {
        a: clamp(init.a0, box_.a),
        b: clamp(init.b0, box_.b),
        sigma: clamp(init.sigma0, box_.sigma),
        tau: init.tau0.clamp(box_.tau.0, box_.tau.1),
        kind,
    };
    let mut current = log_likelihood(&params, input)?;
    let mut trace = vec![TraceEntry { params, loglik: current }];

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        let sweep_start = current;

        for coord in [Coordinate::A, Coordinate::B, Coordinate::Sigma] {
            let (lo, hi) = coord.bounds(&box_);
            if hi <= lo {
                continue;
            }
            let objective = |v: f64| -> Result<f64, CalibrationError> {
                Ok(log_likelihood(&coord.with_value(&params, v), input)?)
            };
            let (x, fx) = golden_max(objective, lo, hi, LINE_TOL_FRAC * (hi - lo))?;
            if fx > current {
                params = coord.with_value(&params, x);
                current = fx;
            }
        }

        let (tau_lo, tau_hi) = box_.tau;
        if tau_hi > tau_lo {
            let scanned: Vec<(usize, Result<f64, _>)> = (tau_lo..=tau_hi)
                .into_par_iter()
                .map(|t| (t, log_likelihood(&ModelParams { tau: t, ..params }, input)))
                .collect();
            let mut best: Option<(f64, usize)> = None;
            for (t, ll) in scanned {
                let ll = ll?;
                if best.is_none_or(|(cur, _)| ll > cur) {
                    best = Some((ll, t));
                }
            }
            let (best_ll, best_tau) = best.expect("tau grid is non-empty");
            if best_ll > current {
                params.tau = best_tau;
                current = best_ll;
            }
        }

        sweeps += 1;
        trace.push(TraceEntry { params, loglik: current });
        if current - sweep_start < tol * current.abs() {
            converged = true;
            break;
        }
    }

    Ok(FitResult { params, final_loglik: current, sweeps, converged, trace })
}

#[derive(Clone, Copy)]
enum Coordinate {
    A,
    B,
    Sigma,
}

impl Coordinate {
    fn bounds(self, box_: &ResolvedBounds) -> (f64, f64) {
        match self {
            Coordinate::A => box_.a,
            Coordinate::B => box_.b,
            Coordinate::Sigma => box_.sigma,
        }
    }

    fn with_value(self, params: &ModelParams, v: f64) -> ModelParams {
        let mut p = *params;
        match self {
            Coordinate::A => p.a = v,
            Coordinate::B => p.b = v,
            Coordinate::Sigma => p.sigma = v,
        }
        p
    }
}

/// Builds the likelihood input a pipeline fit uses: history plus training
/// prices, conditioned on the full history length, with exclusion windows
/// mapped to indices when likelihood masking is enabled.
pub fn pipeline_input(series: &PriceSeries, split: &SeriesSplit, config: &PipelineConfig) -> Result<LikelihoodInput, CalibrationError> {
    let fit_len = split.history.len() + split.train.len();
    let input = LikelihoodInput::new(split.fit_prices(), split.history.len(), config.variance_floor)?;
    if !config.mask_likelihood || config.exclusions.is_empty() {
        return Ok(input);
    }
    let ranges: Vec<(usize, usize)> = series
        .index_ranges_for_dates(&config.exclusions)
        .into_iter()
        .filter(|&(start, _)| start < fit_len)
        .map(|(start, end)| (start, end.min(fit_len - 1)))
        .collect();
    Ok(input.with_exclusions(&ranges))
}

/// End-to-end estimation: split, initialize, ascend.
///
/// Fitting a `Markov` config pins the delay bounds to `(0, 0)`. The whole
/// procedure is deterministic: rerunning with identical config and data
/// reproduces the result bit for bit.
pub fn fit_pipeline(series: &PriceSeries, config: &PipelineConfig) -> Result<PipelineFit, CalibrationError> {
    let split = split_series(series, &SplitSpec { history_len: config.history_len, train_frac: config.train_frac })?;
    let input = pipeline_input(series, &split, config)?;

    let mut bounds = config.bounds;
    if config.model == ModelKind::Markov {
        bounds.tau = Some((0, 0));
    }

    let init = initial_guess(&split, &bounds, &input)?;
    let fit = coordinate_ascent(&init, &input, config.model, config.tol, config.max_sweeps)?;
    Ok(PipelineFit { fit, split })
}
