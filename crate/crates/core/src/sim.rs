//! Euler–Maruyama path simulation with a delay buffer.
//!
//! One step advances the price by `drift(lagged) + diffusion(current) * z`
//! with `z` standard normal and a step size of one observation interval. The
//! lagged price comes from a rolling window of the last `tau` prices, seeded
//! by a [`HistoryWindow`] and refilled with simulated values as the path
//! advances past its own start.
//!
//! Noise is the counter-based stream of [`crate::noise`]: path `p` consumes
//! draw `(seed, p, k)` at step `k`. Paths are therefore independent of the
//! order and the number of threads that generate them, and a path can be
//! re-entered at any step, which is what [`resume_simulation`] relies on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{HistoryWindow, ModelParams};
use crate::noise;

/// Simulation run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of steps to simulate.
    pub horizon: usize,
    /// Number of Monte-Carlo paths.
    pub n_paths: usize,
    /// Master seed; every path derives its own substream from it.
    pub seed: u64,
    /// Carried through to likelihood evaluation on the same grid; the
    /// simulator itself never floors a variance.
    pub variance_floor: f64,
}

impl SimConfig {
    pub fn new(horizon: usize, n_paths: usize, seed: u64) -> Self {
        Self { horizon, n_paths, seed, variance_floor: crate::likelihood::DEFAULT_VARIANCE_FLOOR }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.horizon < 1 || self.n_paths < 1 {
            return Err(SimError::InvalidConfig);
        }
        Ok(())
    }
}

/// Per-step ensemble summary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub mean: f64,
    pub p05: f64,
    pub p95: f64,
}

/// A matrix of simulated paths plus the inputs that reproduce it.
///
/// `paths[p][k]` is path `p` at step `k + 1`; the start price itself (step 0)
/// is not stored. Regenerating with the same seed, parameters, history, and
/// config reproduces the matrix bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEnsemble {
    pub paths: Vec<Vec<f64>>,
    pub seed: u64,
    pub params: ModelParams,
}

impl ForecastEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, Vec::len)
    }

    /// Cross-section of the ensemble at a step (1-based).
    pub fn prices_at_step(&self, step: usize) -> Result<Vec<f64>, SimError> {
        if step == 0 || step > self.horizon() {
            return Err(SimError::StepOutOfRange { step, horizon: self.horizon() });
        }
        Ok(self.paths.iter().map(|p| p[step - 1]).collect())
    }

    /// Per-step mean and 5th/95th percentiles (linear interpolation between
    /// order statistics).
    pub fn summarize(&self) -> Vec<StepSummary> {
        (1..=self.horizon())
            .map(|step| {
                let mut xs = self.prices_at_step(step).expect("step within horizon");
                let mean = running_mean(&xs);
                xs.sort_unstable_by(f64::total_cmp);
                StepSummary { mean, p05: percentile(&xs, 0.05), p95: percentile(&xs, 0.95) }
            })
            .collect()
    }

    /// The per-path state needed to continue each path after `at_step`
    /// completed steps: its price at that step plus the `tau` prices before
    /// it, reaching into the original start window where necessary.
    pub fn tail_windows(&self, start: &HistoryWindow, at_step: usize) -> Result<Vec<HistoryWindow>, SimError> {
        if at_step == 0 || at_step > self.horizon() {
            return Err(SimError::StepOutOfRange { step: at_step, horizon: self.horizon() });
        }
        let tau = self.params.tau;
        if start.tau() != tau {
            return Err(SimError::HistoryMismatch { expected: tau, got: start.tau() });
        }
        let t = at_step as i64;
        let windows = self
            .paths
            .iter()
            .map(|path| {
                let price_at = |j: i64| -> f64 {
                    if j < 0 {
                        start.values[(tau as i64 + j) as usize]
                    } else if j == 0 {
                        start.anchor
                    } else {
                        path[(j - 1) as usize]
                    }
                };
                let values = (t - tau as i64..t).map(price_at).collect();
                HistoryWindow { values, anchor: price_at(t) }
            })
            .collect();
        Ok(windows)
    }
}

/// Incremental mean: a sequence of identical values averages to exactly
/// that value, which keeps zero-noise ensembles free of rounding drift.
pub(crate) fn running_mean(xs: &[f64]) -> f64 {
    let mut m = 0.0;
    for (i, x) in xs.iter().enumerate() {
        m += (x - m) / (i + 1) as f64;
    }
    m
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// One Euler–Maruyama step with a unit step size.
pub fn step(params: &ModelParams, current: f64, lagged: f64, noise: f64) -> f64 {
    current + params.drift(lagged) + params.diffusion_coeff(current) * noise
}

/// Advances one path from `window`, consuming noise counters
/// `start_step..start_step + horizon`.
fn run_path(
    params: &ModelParams,
    window: &HistoryWindow,
    seed: u64,
    path_index: usize,
    start_step: usize,
    horizon: usize,
) -> Result<Vec<f64>, SimError> {
    let tau = params.tau;
    let mut lag_buf = window.values.clone();
    let mut pos = 0usize;
    let mut current = window.anchor;
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let lagged = if tau == 0 { current } else { lag_buf[pos] };
        let z = noise::normal_draw(seed, path_index as u64, (start_step + k) as u64);
        let next = step(params, current, lagged, z);
        if !next.is_finite() {
            return Err(SimError::NonFinite { path: path_index, step: start_step + k + 1 });
        }
        if tau > 0 {
            lag_buf[pos] = current;
            pos += 1;
            if pos == tau {
                pos = 0;
            }
        }
        out.push(next);
        current = next;
    }
    Ok(out)
}

/// Simulates a fresh ensemble from a single start window.
pub fn simulate_paths(
    params: &ModelParams,
    history: &HistoryWindow,
    config: &SimConfig,
) -> Result<ForecastEnsemble, SimError> {
    params.validate()?;
    config.validate()?;
    if history.tau() != params.tau {
        return Err(SimError::HistoryMismatch { expected: params.tau, got: history.tau() });
    }
    let paths = (0..config.n_paths)
        .into_par_iter()
        .map(|p| run_path(params, history, config.seed, p, 0, config.horizon))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForecastEnsemble { paths, seed: config.seed, params: *params })
}

/// Continues an ensemble from per-path tail windows taken after `start_step`
/// completed steps, consuming the continuation of each path's noise stream.
/// The result reproduces, entry for entry, the corresponding suffix of an
/// uninterrupted run with the same seed.
pub fn resume_simulation(
    params: &ModelParams,
    tails: &[HistoryWindow],
    start_step: usize,
    config: &SimConfig,
) -> Result<ForecastEnsemble, SimError> {
    params.validate()?;
    config.validate()?;
    for tail in tails {
        if tail.tau() != params.tau {
            return Err(SimError::HistoryMismatch { expected: params.tau, got: tail.tau() });
        }
    }
    let paths = tails
        .par_iter()
        .enumerate()
        .map(|(p, tail)| run_path(params, tail, config.seed, p, start_step, config.horizon))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForecastEnsemble { paths, seed: config.seed, params: *params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use approx::assert_relative_eq;

    fn hom(a: f64, b: f64, sigma: f64, tau: usize) -> ModelParams {
        ModelParams::hom(a, b, sigma, tau).unwrap()
    }

    #[test]
    fn step_identity_without_drift_or_noise() {
        let p = hom(0.0, 123.0, 0.0, 0);
        assert_eq!(step(&p, 77.7, -3.0, 1.4), 77.7);
    }

    #[test]
    fn step_hand_values() {
        let p = hom(0.1, 400.0, 0.0, 0);
        assert_relative_eq!(step(&p, 380.0, 300.0, 0.0), 390.0);
        let p = hom(0.0, 0.0, 0.02, 0);
        assert_relative_eq!(step(&p, 100.0, 100.0, 1.5), 103.0);
    }

    #[test]
    fn deterministic_path_without_noise() {
        let p = hom(0.5, 100.0, 0.0, 0);
        let history = HistoryWindow::at(80.0).unwrap();
        let ens = simulate_paths(&p, &history, &SimConfig::new(3, 1, 9)).unwrap();
        assert_eq!(ens.paths, vec![vec![90.0, 95.0, 97.5]]);
    }

    #[test]
    fn starting_at_the_mean_stays_there_without_noise() {
        let p = hom(0.3, 100.0, 0.0, 2);
        let history = HistoryWindow::new(vec![100.0, 100.0], 100.0).unwrap();
        let ens = simulate_paths(&p, &history, &SimConfig::new(10, 2, 1)).unwrap();
        for path in &ens.paths {
            assert!(path.iter().all(|&x| x == 100.0));
        }
    }

    #[test]
    fn delay_buffer_consumes_history_then_simulated_values() {
        // sigma = 0 so the recursion is exact: x_{k+1} = x_k + a (b - lag_k).
        let p = hom(0.1, 100.0, 0.0, 2);
        let history = HistoryWindow::new(vec![60.0, 70.0], 80.0).unwrap();
        let ens = simulate_paths(&p, &history, &SimConfig::new(4, 1, 0)).unwrap();
        let x1 = 80.0 + 0.1 * (100.0 - 60.0); // lag = history[0]
        let x2 = x1 + 0.1 * (100.0 - 70.0); // lag = history[1]
        let x3 = x2 + 0.1 * (100.0 - 80.0); // lag = anchor
        let x4 = x3 + 0.1 * (100.0 - x1); // lag = first simulated value
        let got = &ens.paths[0];
        assert_relative_eq!(got[0], x1);
        assert_relative_eq!(got[1], x2);
        assert_relative_eq!(got[2], x3);
        assert_relative_eq!(got[3], x4);
    }

    #[test]
    fn mismatched_history_is_rejected() {
        let p = hom(0.1, 100.0, 0.01, 5);
        let short = HistoryWindow::new(vec![1.0; 4], 100.0).unwrap();
        assert!(matches!(
            simulate_paths(&p, &short, &SimConfig::new(5, 1, 0)),
            Err(SimError::HistoryMismatch { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn ensemble_shape_and_determinism() {
        let p = hom(0.05, 100.0, 0.01, 3);
        let history = HistoryWindow::new(vec![99.0, 100.0, 101.0], 100.0).unwrap();
        let config = SimConfig::new(210, 200, 42);
        let a = simulate_paths(&p, &history, &config).unwrap();
        let b = simulate_paths(&p, &history, &config).unwrap();
        assert_eq!(a.n_paths(), 200);
        assert_eq!(a.horizon(), 210);
        assert_eq!(a.paths, b.paths);
        assert!(a.paths.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let p = hom(0.05, 100.0, 0.02, 2);
        let history = HistoryWindow::new(vec![98.0, 99.0], 100.0).unwrap();
        let config = SimConfig::new(50, 64, 7);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_paths(&p, &history, &config).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate_paths(&p, &history, &config).unwrap());
        assert_eq!(single.paths, many.paths);
    }

    #[test]
    fn tau_zero_hom_and_markov_ensembles_are_bit_identical() {
        let config = SimConfig::new(100, 16, 11);
        let history = HistoryWindow::at(123.0).unwrap();
        let h = simulate_paths(&hom(0.07, 120.0, 0.015, 0), &history, &config).unwrap();
        let m = simulate_paths(
            &ModelParams::new(0.07, 120.0, 0.015, 0, ModelKind::Markov).unwrap(),
            &history,
            &config,
        )
        .unwrap();
        assert_eq!(h.paths, m.paths);
    }

    #[test]
    fn split_and_resume_reproduces_the_suffix() {
        for tau in [0usize, 1, 5] {
            let p = hom(0.08, 100.0, 0.02, tau);
            let history = HistoryWindow::new((0..tau).map(|i| 95.0 + i as f64).collect(), 101.0).unwrap();
            let full = simulate_paths(&p, &history, &SimConfig::new(100, 8, 21)).unwrap();

            let split_at = 40;
            let tails = full.tail_windows(&history, split_at).unwrap();
            let resumed =
                resume_simulation(&p, &tails, split_at, &SimConfig::new(60, 8, 21)).unwrap();
            for (path, suffix) in full.paths.iter().zip(&resumed.paths) {
                assert_eq!(&path[split_at..], suffix.as_slice(), "tau = {tau}");
            }
        }
    }

    #[test]
    fn resume_with_short_tail_is_rejected() {
        let p = hom(0.08, 100.0, 0.02, 5);
        let bad = vec![HistoryWindow::new(vec![1.0; 4], 100.0).unwrap()];
        assert!(matches!(
            resume_simulation(&p, &bad, 10, &SimConfig::new(5, 1, 0)),
            Err(SimError::HistoryMismatch { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn noiseless_paths_converge_to_the_reversion_level() {
        let p = hom(0.5, 100.0, 0.0, 0);
        let ens = simulate_paths(&p, &HistoryWindow::at(40.0).unwrap(), &SimConfig::new(60, 1, 0)).unwrap();
        assert!((ens.paths[0].last().unwrap() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn summary_percentiles_bracket_the_mean() {
        let p = hom(0.02, 100.0, 0.01, 0);
        let ens = simulate_paths(&p, &HistoryWindow::at(100.0).unwrap(), &SimConfig::new(20, 500, 3)).unwrap();
        for row in ens.summarize() {
            assert!(row.p05 <= row.mean && row.mean <= row.p95);
        }
    }
}
