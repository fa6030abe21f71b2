//! Shared setup for the benchmark targets.

use homsde::data::PriceSeries;
use homsde::model::ModelParams;
use homsde::synthetic;

/// The standard synthetic workload: a 2000-point delayed series.
pub fn bench_series() -> (ModelParams, PriceSeries) {
    let params = ModelParams::hom(0.2, 100.0, 0.01, 5).expect("valid params");
    let series = synthetic::hom_series(&params, 2000, 1).expect("stable regime");
    (params, series)
}
