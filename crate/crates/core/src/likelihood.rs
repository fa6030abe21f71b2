//! Transition log-likelihood of a price series under the discretized model.
//!
//! Each one-step transition is Gaussian: from state `x_i` with lagged price
//! `x_{i-tau}`, the next observation has mean `x_i + a (b - x_{i-tau})` and
//! variance `(sigma x_i)^2`, floored to keep transitions near a zero price
//! from producing infinite density spikes.
//!
//! The first `tau + 1` observations of the input are conditioning data and
//! contribute no transition terms. Calibration builds inputs whose
//! conditioning length is the set-aside history, so the same input yields
//! comparable likelihoods for every candidate delay up to that length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::LikelihoodError;
use crate::model::ModelParams;

/// Default variance floor, in squared price units.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A price series prepared for likelihood evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodInput {
    prices: Vec<f64>,
    /// Conditioning length: the first `tau + 1` prices contribute no
    /// transition terms. Models with any delay up to this value can be
    /// evaluated on the same input.
    tau: usize,
    variance_floor: f64,
    /// Indices whose transitions are dropped; empty unless exclusion masking
    /// was explicitly enabled.
    excluded: Vec<(usize, usize)>,
    #[serde(skip)]
    excluded_flags: Option<Vec<bool>>,
}

impl LikelihoodInput {
    pub fn new(prices: Vec<f64>, tau: usize, variance_floor: f64) -> Result<Self, LikelihoodError> {
        if !(variance_floor > 0.0) {
            return Err(LikelihoodError::InvalidFloor { floor: variance_floor });
        }
        if prices.len() < tau + 2 {
            return Err(LikelihoodError::InsufficientData { tau, got: prices.len() });
        }
        Ok(Self { prices, tau, variance_floor, excluded: Vec::new(), excluded_flags: None })
    }

    /// Enables mask semantics: a transition is dropped when its target,
    /// current, or lagged observation falls inside an excluded range.
    pub fn with_exclusions(mut self, ranges: &[(usize, usize)]) -> Self {
        self.excluded = ranges.to_vec();
        self.excluded.sort_unstable();
        if self.excluded.is_empty() {
            self.excluded_flags = None;
        } else {
            let mut flags = vec![false; self.prices.len()];
            for &(start, end) in &self.excluded {
                for flag in flags.iter_mut().take(end.min(self.prices.len() - 1) + 1).skip(start) {
                    *flag = true;
                }
            }
            self.excluded_flags = Some(flags);
        }
        self
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn variance_floor(&self) -> f64 {
        self.variance_floor
    }

    fn index_excluded(&self, i: usize) -> bool {
        self.excluded_flags.as_ref().is_some_and(|f| f[i])
    }
}

/// Gaussian log-density with variance `v`.
fn log_normal_density(x: f64, mean: f64, v: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + v.ln() + d * d / v)
}

/// Sum of one-step transition log-densities over the input.
pub fn log_likelihood(params: &ModelParams, input: &LikelihoodInput) -> Result<f64, LikelihoodError> {
    if params.tau > input.tau {
        return Err(LikelihoodError::LagExceedsConditioning { model_tau: params.tau, input_tau: input.tau });
    }
    let x = &input.prices;
    let n = x.len();
    let lag = params.tau;
    let mut total = 0.0;
    for i in input.tau..n - 1 {
        if input.excluded_flags.is_some()
            && (input.index_excluded(i + 1) || input.index_excluded(i) || input.index_excluded(i - lag))
        {
            continue;
        }
        let mean = x[i] + params.drift(x[i - lag]);
        let spread = params.diffusion_coeff(x[i]);
        let variance = (spread * spread).max(input.variance_floor);
        let term = log_normal_density(x[i + 1], mean, variance);
        if !term.is_finite() {
            return Err(LikelihoodError::NonFiniteLikelihood { index: i });
        }
        total += term;
    }
    Ok(total)
}

/// The coordinate a profile sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeParam {
    A,
    B,
    Sigma,
    Tau,
}

impl FreeParam {
    fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            FreeParam::A => p.a = value,
            FreeParam::B => p.b = value,
            FreeParam::Sigma => p.sigma = value,
            FreeParam::Tau => p.tau = value.round().max(0.0) as usize,
        }
        p
    }
}

/// Evaluates the log-likelihood along a grid of one free parameter, the other
/// three held at `base`. Points whose evaluation fails are recorded as
/// missing rather than aborting the profile; output order matches the grid.
pub fn log_likelihood_profile(
    base: &ModelParams,
    input: &LikelihoodInput,
    free: FreeParam,
    grid: &[f64],
) -> Vec<(f64, Option<f64>)> {
    grid.par_iter()
        .map(|&value| {
            let params = free.apply(base, value);
            (value, log_likelihood(&params, input).ok())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HistoryWindow, ModelParams};
    use crate::sim::{simulate_paths, SimConfig};
    use approx::assert_relative_eq;

    fn hom(a: f64, b: f64, sigma: f64, tau: usize) -> ModelParams {
        ModelParams::hom(a, b, sigma, tau).unwrap()
    }

    fn input(prices: &[f64], tau: usize) -> LikelihoodInput {
        LikelihoodInput::new(prices.to_vec(), tau, DEFAULT_VARIANCE_FLOOR).unwrap()
    }

    /// Independent per-term evaluation, kept free of the production loop.
    fn per_term_oracle(params: &ModelParams, prices: &[f64], conditioning: usize, floor: f64) -> f64 {
        let mut total = 0.0;
        for i in conditioning..prices.len() - 1 {
            let mean = prices[i] + params.a * (params.b - prices[i - params.tau]);
            let v = (params.sigma * prices[i]).powi(2).max(floor);
            total += -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * v.ln()
                - (prices[i + 1] - mean).powi(2) / (2.0 * v);
        }
        total
    }

    #[test]
    fn single_transition_hand_value() {
        // v = (0.01 * 100)^2 = 1, zero residual: logN = -ln(2*pi)/2.
        let ll = log_likelihood(&hom(0.0, 0.0, 0.01, 0), &input(&[100.0, 100.0], 0)).unwrap();
        assert_relative_eq!(ll, -0.918_938_533_204_672_7, max_relative = 1e-14);
    }

    #[test]
    fn zero_residual_unit_variance_counts_terms() {
        for tau in [0usize, 3] {
            let prices = vec![100.0; 50];
            let ll = log_likelihood(&hom(0.0, 0.0, 0.01, tau), &input(&prices, tau)).unwrap();
            let expected = -((50 - 1 - tau) as f64) * 0.5 * LN_2PI;
            assert_relative_eq!(ll, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn matches_independent_per_term_oracle() {
        let params = hom(0.13, 105.0, 0.02, 3);
        let history = HistoryWindow::new(vec![100.0, 101.0, 102.0], 103.0).unwrap();
        let ens = simulate_paths(&params, &history, &SimConfig::new(20, 1, 5)).unwrap();
        let prices = ens.paths[0].clone();

        for (model_tau, cond) in [(3usize, 3usize), (0, 3), (2, 5)] {
            let p = hom(0.13, 105.0, 0.02, model_tau);
            let got = log_likelihood(&p, &input(&prices, cond)).unwrap();
            let want = per_term_oracle(&p, &prices, cond, DEFAULT_VARIANCE_FLOOR);
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn insufficient_data_is_rejected() {
        assert!(matches!(
            LikelihoodInput::new(vec![1.0; 5], 4, DEFAULT_VARIANCE_FLOOR),
            Err(LikelihoodError::InsufficientData { tau: 4, got: 5 })
        ));
        let err = log_likelihood(&hom(0.1, 1.0, 0.1, 3), &input(&[1.0; 4], 2)).unwrap_err();
        assert!(matches!(err, LikelihoodError::LagExceedsConditioning { model_tau: 3, input_tau: 2 }));
    }

    #[test]
    fn variance_floor_guards_zero_prices() {
        let prices = [1.0, 0.0, 0.0, 1.0];
        let ll = log_likelihood(&hom(0.0, 0.0, 0.5, 0), &input(&prices, 0)).unwrap();
        assert!(ll.is_finite());
    }

    #[test]
    fn tau_zero_equals_markov_exactly() {
        let prices: Vec<f64> = (0..40).map(|i| 100.0 + ((i * 37) % 11) as f64).collect();
        let inp = input(&prices, 0);
        let h = log_likelihood(&hom(0.07, 103.0, 0.02, 0), &inp).unwrap();
        let m = log_likelihood(&ModelParams::markov(0.07, 103.0, 0.02).unwrap(), &inp).unwrap();
        assert_eq!(h, m);
    }

    #[test]
    fn additive_over_contiguous_splits_with_context() {
        let params = hom(0.1, 100.0, 0.015, 2);
        let history = HistoryWindow::new(vec![98.0, 99.0], 100.0).unwrap();
        let prices = simulate_paths(&params, &history, &SimConfig::new(60, 1, 13)).unwrap().paths[0].clone();
        let tau = 2usize;

        let full = log_likelihood(&params, &input(&prices, tau)).unwrap();
        let split_at = 31;
        let left = log_likelihood(&params, &input(&prices[..=split_at], tau)).unwrap();
        let right = log_likelihood(&params, &input(&prices[split_at - tau..], tau)).unwrap();
        assert_relative_eq!(full, left + right, max_relative = 1e-12);
    }

    #[test]
    fn masked_frozen_suffix_leaves_likelihood_unchanged() {
        let params = hom(0.1, 100.0, 0.02, 2);
        let history = HistoryWindow::new(vec![99.0, 100.0], 101.0).unwrap();
        let mut prices = simulate_paths(&params, &history, &SimConfig::new(40, 1, 3)).unwrap().paths[0].clone();
        let base = log_likelihood(&params, &input(&prices, 2)).unwrap();

        let frozen_start = prices.len();
        prices.extend(std::iter::repeat_n(*prices.last().unwrap(), 10));
        let masked = input(&prices, 2).with_exclusions(&[(frozen_start, prices.len() - 1)]);
        assert_eq!(log_likelihood(&params, &masked).unwrap(), base);
    }

    #[test]
    fn profile_singleton_matches_direct_call() {
        let prices: Vec<f64> = (0..30).map(|i| 100.0 + (i % 7) as f64).collect();
        let inp = input(&prices, 0);
        let base = hom(0.05, 100.0, 0.02, 0);
        let profile = log_likelihood_profile(&base, &inp, FreeParam::B, &[97.0]);
        let direct = log_likelihood(&hom(0.05, 97.0, 0.02, 0), &inp).unwrap();
        assert_eq!(profile, vec![(97.0, Some(direct))]);
    }

    #[test]
    fn b_profile_is_concave_with_interior_maximum() {
        let params = hom(0.2, 100.0, 0.01, 0);
        let prices = simulate_paths(&params, &HistoryWindow::at(100.0).unwrap(), &SimConfig::new(400, 1, 17))
            .unwrap()
            .paths[0]
            .clone();
        let inp = input(&prices, 0);
        let grid: Vec<f64> = (0..81).map(|i| 80.0 + 0.5 * i as f64).collect();
        let profile = log_likelihood_profile(&params, &inp, FreeParam::B, &grid);
        let values: Vec<f64> = profile.iter().map(|(_, v)| v.unwrap()).collect();
        let argmax = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(argmax > 0 && argmax < grid.len() - 1, "maximum should be interior");
        // The likelihood is quadratic in b, so it falls away monotonically.
        for i in 0..argmax {
            assert!(values[i] < values[i + 1]);
        }
        for i in argmax..values.len() - 1 {
            assert!(values[i] > values[i + 1]);
        }
    }

    #[test]
    fn tau_scan_recovers_the_generating_delay() {
        let truth = hom(0.3, 100.0, 0.005, 4);
        let history = HistoryWindow::new(vec![96.0, 97.0, 98.0, 99.0], 100.0).unwrap();
        let prices = simulate_paths(&truth, &history, &SimConfig::new(1500, 1, 23)).unwrap().paths[0].clone();
        let inp = LikelihoodInput::new(prices, 10, DEFAULT_VARIANCE_FLOOR).unwrap();

        let grid: Vec<f64> = (0..=10).map(|t| t as f64).collect();
        let profile = log_likelihood_profile(&truth, &inp, FreeParam::Tau, &grid);
        let best = profile
            .iter()
            .max_by(|a, b| a.1.unwrap().total_cmp(&b.1.unwrap()))
            .unwrap()
            .0;
        assert_eq!(best, 4.0);
    }
}
