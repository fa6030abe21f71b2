//! Deterministic synthetic price series for tests, benchmarks, and the
//! bundled example dataset.

use chrono::{Days, NaiveDate};

use crate::data::{PriceObservation, PriceSeries};
use crate::error::SimError;
use crate::model::{HistoryWindow, ModelParams};
use crate::sim::{simulate_paths, SimConfig};

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date")
}

/// Attaches consecutive dates to a price vector.
pub fn from_prices(prices: &[f64]) -> PriceSeries {
    let obs = prices
        .iter()
        .enumerate()
        .map(|(i, &price)| PriceObservation { date: start_date() + Days::new(i as u64), price })
        .collect();
    PriceSeries::new(obs, "synthetic").expect("strictly increasing dates")
}

/// A series of `n` identical prices.
pub fn constant_series(price: f64, n: usize) -> PriceSeries {
    from_prices(&vec![price; n])
}

/// Simulates one path of `n` observations under `params`, starting flat at
/// the reversion level, and attaches consecutive dates. From index
/// `params.tau` onward the series obeys the model exactly with in-series
/// lags, which makes it a ground-truth fixture for parameter recovery.
pub fn hom_series(params: &ModelParams, n: usize, seed: u64) -> Result<PriceSeries, SimError> {
    let window = HistoryWindow::new(vec![params.b; params.tau], params.b)?;
    let ens = simulate_paths(params, &window, &SimConfig::new(n, 1, seed))?;
    Ok(from_prices(&ens.paths[0]))
}

/// The bundled "delayed-signal" dataset: a strongly delayed, lightly damped
/// oscillatory regime where the delay-aware model has a real forecasting
/// edge over the memoryless one. Committed at `fixtures/delayed_signal.csv`;
/// a test asserts the file matches this generator.
pub fn delayed_signal_series() -> PriceSeries {
    let params = ModelParams::hom(0.06, 100.0, 0.005, 20).expect("valid fixture params");
    let mut series = hom_series(&params, 1200, 20_210_614).expect("stable fixture regime");
    series.source_label = "delayed_signal".into();
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hom_series_is_deterministic_and_dated() {
        let params = ModelParams::hom(0.1, 100.0, 0.01, 3).unwrap();
        let a = hom_series(&params, 50, 9).unwrap();
        let b = hom_series(&params, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        let dates = a.dates();
        assert!(dates.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn delayed_signal_fixture_is_finite_and_sized() {
        let series = delayed_signal_series();
        assert_eq!(series.len(), 1200);
        assert!(series.prices().iter().all(|p| p.is_finite()));
    }
}
