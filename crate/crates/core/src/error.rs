//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{field}` is not finite")]
    NonFinite { field: &'static str },
    #[error("sigma must be non-negative, got {sigma}")]
    NegativeSigma { sigma: f64 },
    #[error("Markov parameters must have tau = 0, got tau = {tau}")]
    MarkovWithLag { tau: usize },
    #[error("history window contains a non-finite price")]
    NonFiniteHistory,
    #[error("need {needed} trailing prices to build the window, got {got}")]
    TailTooShort { needed: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{column}` not found in the CSV header")]
    SchemaError { column: String },
    #[error("too few valid rows after cleaning: {valid_rows} (need at least 3)")]
    EmptySeries { valid_rows: usize },
    #[error("cannot split a series of {len} observations with history_len {history_len}: need history_len + 2 < length")]
    SplitError { history_len: usize, len: usize },
    #[error("train_frac must lie in (0, 1), got {train_frac}")]
    InvalidTrainFrac { train_frac: f64 },
    #[error("csv read error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("history window has {got} values but the model delay is {expected}")]
    HistoryMismatch { expected: usize, got: usize },
    #[error("simulation config must have horizon >= 1 and n_paths >= 1")]
    InvalidConfig,
    #[error("path {path} became non-finite at step {step}")]
    NonFinite { path: usize, step: usize },
    #[error("step {step} is outside the simulated range 1..={horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum LikelihoodError {
    #[error("series of {got} observations cannot condition a delay of {tau}: need at least tau + 2")]
    InsufficientData { tau: usize, got: usize },
    #[error("model delay {model_tau} exceeds the input's conditioning length {input_tau}")]
    LagExceedsConditioning { model_tau: usize, input_tau: usize },
    #[error("log-likelihood term at transition {index} is not finite")]
    NonFiniteLikelihood { index: usize },
    #[error("variance_floor must be positive, got {floor}")]
    InvalidFloor { floor: f64 },
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    #[error("likelihood evaluation failed during calibration: {0}")]
    Likelihood(#[from] LikelihoodError),
    #[error("data preparation failed: {0}")]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("forecast has {forecast} points but realized has {realized}")]
    LengthMismatch { forecast: usize, realized: usize },
    #[error("realized price at index {index} is zero; relative metrics are undefined")]
    ZeroRealizedPrice { index: usize },
    #[error("every evaluation point is excluded by the mask")]
    EmptyEvaluation,
    #[error("ensemble has no paths")]
    EmptyEnsemble,
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum GofError {
    #[error("price at index {index} is not positive; log-normality tests need positive prices")]
    NonPositivePrice { index: usize },
    #[error("sample of {got} values is too small (need at least {needed})")]
    InsufficientSample { needed: usize, got: usize },
    #[error("sample is degenerate: zero variance after the log transform")]
    DegenerateSample,
    #[error("n_bins must be >= 1")]
    NoBins,
    #[error(transparent)]
    Sim(#[from] SimError),
}
