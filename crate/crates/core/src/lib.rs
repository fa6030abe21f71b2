//! Delayed mean-reversion modeling of commodity spot prices.
//!
//! The library implements one model family end to end: a mean-reverting SDE
//! whose drift responds to the price `tau` observation steps in the past
//! (a higher-order Markov process of order `tau`), with the memoryless
//! `tau = 0` case as the baseline for comparison. Around the model sit the
//! pieces a forecasting study needs:
//!
//! - [`data`]: CSV ingestion, cleaning, history/train/validation splits,
//!   frozen-period detection;
//! - [`model`]: parameters, the delay buffer, drift/diffusion coefficients;
//! - [`sim`]: seeded, restartable Euler–Maruyama ensemble simulation;
//! - [`likelihood`]: the discretized-transition log-likelihood;
//! - [`calibrate`]: rough initialization plus coordinate ascent;
//! - [`forecast`]: mean-path forecasts and the five error metrics;
//! - [`gof`]: log-normality tests of the simulated price distribution;
//! - [`config`]: the serializable run configuration the CLI shares.
//!
//! Everything randomized flows from a single seed through counter-based
//! substreams ([`noise`]), so results are reproducible bit for bit across
//! reruns and across thread counts.

pub mod calibrate;
pub mod config;
pub mod data;
pub mod error;
pub mod forecast;
pub mod gof;
pub mod likelihood;
pub mod model;
pub mod noise;
pub mod sim;
pub mod synthetic;

pub use calibrate::{coordinate_ascent, fit_pipeline, initial_guess, FitResult, InitGuess, PipelineFit, SearchBox};
pub use config::PipelineConfig;
pub use data::{detect_frozen_runs, parse_csv, split_series, CsvSchema, DateRange, PriceObservation, PriceSeries, SeriesSplit, SplitSpec};
pub use forecast::{compare_models, error_metrics, mean_path, EvalReport, ModelComparison, ModelRun};
pub use gof::{ad_lognormal, distribution_export, ks_lognormal, log_histogram, GofResult, GofTestKind, LogHistogram};
pub use likelihood::{log_likelihood, log_likelihood_profile, FreeParam, LikelihoodInput};
pub use model::{HistoryWindow, ModelKind, ModelParams};
pub use sim::{resume_simulation, simulate_paths, ForecastEnsemble, SimConfig, StepSummary};
