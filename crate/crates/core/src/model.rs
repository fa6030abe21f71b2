//! Model parameters, the delay buffer, and the drift/diffusion coefficients
//! shared by the simulator and the likelihood.
//!
//! The price dynamics are
//!
//! ```text
//! dx(t) = a (b - x(t - tau)) dt + sigma x(t) dw(t)
//! ```
//!
//! with `tau` an integer number of observation steps. `tau = 0` recovers the
//! ordinary memoryless mean-reversion model; positive `tau` makes the drift
//! respond to the price `tau` steps in the past. The time axis is the
//! observation index, so all rates are per step.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Which variant of the model a parameter set describes.
///
/// `Markov` is the `tau = 0` special case kept as an explicit label so fitted
/// results and reports state which model produced them. A `Hom` parameter set
/// with `tau = 0` is numerically identical to a `Markov` one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "HOM")]
    Hom,
    Markov,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Hom => write!(f, "HOM"),
            ModelKind::Markov => write!(f, "Markov"),
        }
    }
}

/// Constant model parameters.
///
/// Serializes to/from a JSON object with keys `a`, `b`, `sigma`, `tau`,
/// `kind`; that layout is part of the CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mean-reversion speed per step. Unrestricted in sign during search;
    /// a calibrated fit is only mean-reverting when `a > 0`.
    pub a: f64,
    /// Mean-reversion level in price units (the long-run ensemble mean).
    pub b: f64,
    /// Diffusion scale per sqrt-step, multiplying the current price.
    pub sigma: f64,
    /// Delay order: how many observation steps old the price entering the
    /// drift is. Zero means the drift sees the current price.
    pub tau: usize,
    /// Model label; `Markov` requires `tau = 0`.
    pub kind: ModelKind,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, sigma: f64, tau: usize, kind: ModelKind) -> Result<Self, ModelError> {
        let params = Self { a, b, sigma, tau, kind };
        params.validate()?;
        Ok(params)
    }

    /// Convenience constructor for the delayed model.
    pub fn hom(a: f64, b: f64, sigma: f64, tau: usize) -> Result<Self, ModelError> {
        Self::new(a, b, sigma, tau, ModelKind::Hom)
    }

    /// Convenience constructor for the memoryless model (`tau = 0`).
    pub fn markov(a: f64, b: f64, sigma: f64) -> Result<Self, ModelError> {
        Self::new(a, b, sigma, 0, ModelKind::Markov)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("a", self.a), ("b", self.b), ("sigma", self.sigma)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { field: name });
            }
        }
        if self.sigma < 0.0 {
            return Err(ModelError::NegativeSigma { sigma: self.sigma });
        }
        if self.kind == ModelKind::Markov && self.tau != 0 {
            return Err(ModelError::MarkovWithLag { tau: self.tau });
        }
        Ok(())
    }

    /// Drift coefficient `a (b - lagged_price)`, in price units per step.
    pub fn drift(&self, lagged_price: f64) -> f64 {
        self.a * (self.b - lagged_price)
    }

    /// Diffusion coefficient `sigma * current_price`, in price units per
    /// sqrt-step. May be zero or negative along with the price; only its
    /// square enters a transition variance.
    pub fn diffusion_coeff(&self, current_price: f64) -> f64 {
        self.sigma * current_price
    }
}

/// The delay buffer seeding a simulation: the `tau` prices immediately
/// preceding the start state, oldest first, plus the start price itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryWindow {
    /// Exactly `tau` prices, oldest first. Empty when `tau = 0`.
    pub values: Vec<f64>,
    /// The start price `x(t0)`.
    pub anchor: f64,
}

impl HistoryWindow {
    pub fn new(values: Vec<f64>, anchor: f64) -> Result<Self, ModelError> {
        if !anchor.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteHistory);
        }
        Ok(Self { values, anchor })
    }

    /// Window for a delay-free start.
    pub fn at(anchor: f64) -> Result<Self, ModelError> {
        Self::new(Vec::new(), anchor)
    }

    /// Builds the window from the tail of a price sequence: the last price is
    /// the anchor and the `tau` prices before it are the lag context.
    pub fn from_tail(prices: &[f64], tau: usize) -> Result<Self, ModelError> {
        if prices.len() < tau + 1 {
            return Err(ModelError::TailTooShort { needed: tau + 1, got: prices.len() });
        }
        let anchor = prices[prices.len() - 1];
        let values = prices[prices.len() - 1 - tau..prices.len() - 1].to_vec();
        Self::new(values, anchor)
    }

    /// Delay order this window can seed.
    pub fn tau(&self) -> usize {
        self.values.len()
    }
}
