//! Spot-price ingestion: CSV parsing, cleaning, history/train/validation
//! splitting, and frozen-period detection.
//!
//! The time axis everywhere downstream is the observation index, one step per
//! row. Calendar gaps (weekends, holidays) are not interpolated; dates are
//! carried for reporting and for translating user-supplied exclusion windows
//! into index ranges.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// One dated spot-price observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceObservation {
    pub date: NaiveDate,
    pub price: f64,
}

/// How many raw rows the cleaning pass discarded or merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningStats {
    /// Rows whose date or price failed to parse (non-finite prices included).
    pub dropped_rows: usize,
    /// Rows merged away because a later row carried the same date.
    pub duplicate_dates: usize,
}

/// A cleaned, date-ordered spot-price series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    observations: Vec<PriceObservation>,
    pub source_label: String,
    pub cleaning: CleaningStats,
}

impl PriceSeries {
    /// Builds a series from already-clean observations. Dates must be
    /// strictly increasing and prices finite.
    pub fn new(observations: Vec<PriceObservation>, source_label: impl Into<String>) -> Result<Self, DataError> {
        for pair in observations.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(DataError::SchemaError { column: format!("dates not strictly increasing at {}", pair[1].date) });
            }
        }
        if let Some(bad) = observations.iter().position(|o| !o.price.is_finite()) {
            return Err(DataError::SchemaError { column: format!("non-finite price at row {bad}") });
        }
        Ok(Self { observations, source_label: source_label.into(), cleaning: CleaningStats::default() })
    }

    pub fn observations(&self) -> &[PriceObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.price).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }

    /// Renders the series back to CSV under the given schema. Prices use the
    /// shortest round-trip float form, so parsing the output reproduces the
    /// series exactly.
    pub fn to_csv_string(&self, schema: &CsvSchema) -> String {
        let d = schema.delimiter;
        let mut out = format!("{}{}{}\n", schema.date_column, d, schema.price_column);
        for obs in &self.observations {
            out.push_str(&format!("{}{}{}\n", obs.date.format(&schema.date_format), d, obs.price));
        }
        out
    }

    /// Translates date windows into inclusive index ranges over this series.
    /// Windows that miss the series entirely are dropped.
    pub fn index_ranges_for_dates(&self, windows: &[DateRange]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for w in windows {
            let first = self.observations.iter().position(|o| o.date >= w.start);
            let last = self.observations.iter().rposition(|o| o.date <= w.end);
            if let (Some(first), Some(last)) = (first, last) {
                if first <= last {
                    out.push((first, last));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// An inclusive calendar window, used to mark exclusion periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Column mapping and formats for spot-price CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
    /// chrono format string for the date column.
    pub date_format: String,
    pub delimiter: char,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            price_column: "price".into(),
            date_format: "%Y-%m-%d".into(),
            delimiter: ',',
        }
    }
}

/// Parses raw CSV content into a cleaned series.
///
/// Rows with an unparseable date or price (or a non-finite price) are dropped
/// and counted. When several rows share a date the last one in file order
/// wins, on the assumption that later rows are corrections. The result is
/// sorted ascending by date and must keep at least 3 rows.
pub fn parse_csv(bytes: &[u8], schema: &CsvSchema, source_label: &str) -> Result<PriceSeries, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);

    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::SchemaError { column: name.to_string() })
    };
    let date_idx = col_index(&schema.date_column)?;
    let price_idx = col_index(&schema.price_column)?;

    let mut rows: Vec<PriceObservation> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let date = record
            .get(date_idx)
            .and_then(|f| NaiveDate::parse_from_str(f.trim(), &schema.date_format).ok());
        let price = record
            .get(price_idx)
            .and_then(|f| f.trim().parse::<f64>().ok())
            .filter(|p| p.is_finite());
        match (date, price) {
            (Some(date), Some(price)) => rows.push(PriceObservation { date, price }),
            _ => dropped += 1,
        }
    }

    // Stable sort keeps file order within equal dates, so keeping the last
    // entry of each date-run keeps the last row in file order.
    rows.sort_by_key(|o| o.date);
    let before = rows.len();
    let mut deduped: Vec<PriceObservation> = Vec::with_capacity(rows.len());
    for obs in rows {
        match deduped.last_mut() {
            Some(last) if last.date == obs.date => *last = obs,
            _ => deduped.push(obs),
        }
    }
    let duplicates = before - deduped.len();

    if deduped.len() < 3 {
        return Err(DataError::EmptySeries { valid_rows: deduped.len() });
    }

    let mut series = PriceSeries::new(deduped, source_label)?;
    series.cleaning = CleaningStats { dropped_rows: dropped, duplicate_dates: duplicates };
    Ok(series)
}

/// How to carve a cleaned series into lag context, training, and validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Leading observations reserved as delay history (lag context only).
    pub history_len: usize,
    /// Fraction of the remaining observations that go to training.
    pub train_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { history_len: 400, train_frac: 0.8 }
    }
}

/// The three contiguous segments of a split series, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSplit {
    pub history: PriceSeries,
    pub train: PriceSeries,
    pub validation: PriceSeries,
}

impl SeriesSplit {
    /// History and training prices concatenated: the likelihood input.
    pub fn fit_prices(&self) -> Vec<f64> {
        let mut out = self.history.prices();
        out.extend(self.train.prices());
        out
    }

    /// Everything before the validation window, in order.
    pub fn pre_validation(&self) -> Vec<PriceObservation> {
        let mut out = self.history.observations().to_vec();
        out.extend_from_slice(self.train.observations());
        out
    }
}

/// Splits a cleaned series into history / train / validation.
///
/// The boundary arithmetic is deterministic: with `N` observations and
/// `h = history_len`, training takes `floor(train_frac * (N - h))`
/// observations and validation the rest.
pub fn split_series(series: &PriceSeries, spec: &SplitSpec) -> Result<SeriesSplit, DataError> {
    let n = series.len();
    if spec.history_len + 2 >= n {
        return Err(DataError::SplitError { history_len: spec.history_len, len: n });
    }
    if !(spec.train_frac > 0.0 && spec.train_frac < 1.0) {
        return Err(DataError::InvalidTrainFrac { train_frac: spec.train_frac });
    }

    let h = spec.history_len;
    let train_len = (spec.train_frac * (n - h) as f64).floor() as usize;
    let obs = series.observations();

    let segment = |range: std::ops::Range<usize>| -> Result<PriceSeries, DataError> {
        let mut s = PriceSeries::new(obs[range].to_vec(), series.source_label.clone())?;
        s.cleaning = series.cleaning;
        Ok(s)
    };

    Ok(SeriesSplit {
        history: segment(0..h)?,
        train: segment(h..h + train_len)?,
        validation: segment(h + train_len..n)?,
    })
}

/// Finds maximal runs of consecutive identical prices of length at least
/// `min_run`, as inclusive `(start, end)` index ranges, sorted and disjoint.
///
/// `min_run` must be at least 2; a "run" of one observation is just a price.
pub fn detect_frozen_runs(series: &PriceSeries, min_run: usize) -> Vec<(usize, usize)> {
    assert!(min_run >= 2, "min_run must be >= 2");
    let prices = series.prices();
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..=prices.len() {
        let run_broke = i == prices.len() || prices[i] != prices[i - 1];
        if run_broke {
            if i - start >= min_run {
                out.push((start, i - 1));
            }
            start = i;
        }
    }
    out
}
