//! Score aggregation and temporal analyses.

mod ccf;
mod decompose;
mod structural;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ccf::{ccf, ccf_values, CcfResult};
pub use decompose::{decompose_ma, decompose_values, trend_ratio, Decomposition};
pub use structural::{
    detect_anomalies, fit_structural, predict, read_anomaly_csv, write_anomaly_csv, AnomalyReport,
    AnomalyRow, HolidaySet, Seasonality, StructuralConfig, StructuralModel, Z_99,
};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("no input points")]
    EmptyInput,
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series has missing dates (first gap after {0})")]
    GapsPresent(NaiveDate),
    #[error("dates must be strictly increasing ({0} follows {1})")]
    Unordered(NaiveDate, NaiveDate),
    #[error("series granularities differ")]
    GranularityMismatch,
    #[error("overlap of {got} points is too short for max lag {max_lag}")]
    InsufficientOverlap { got: usize, max_lag: usize },
    #[error("constant window at lag {0}")]
    ZeroVariance(i64),
    #[error("design matrix is rank deficient (condition {0:e}); use a positive ridge_lambda")]
    RankDeficient(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value at {0}")]
    NonFinite(NaiveDate),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Monthly,
}

impl Granularity {
    /// Bucket key; monthly buckets are keyed by their first day.
    pub fn bucket(self, date: NaiveDate) -> NaiveDate {
        match self {
            Granularity::Daily => date,
            Granularity::Monthly => date.with_day(1).expect("day 1 exists"),
        }
    }

    /// Position on an evenly spaced integer axis.
    pub fn ordinal(self, date: NaiveDate) -> i64 {
        match self {
            Granularity::Daily => date.num_days_from_ce() as i64,
            Granularity::Monthly => date.year() as i64 * 12 + date.month0() as i64,
        }
    }
}

/// Dated values at a fixed granularity. Missing buckets are simply absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<(NaiveDate, f64)>,
    granularity: Granularity,
}

#[derive(Serialize, Deserialize)]
struct CsvPoint {
    date: NaiveDate,
    value: f64,
}

impl TimeSeries {
    pub fn new(points: Vec<(NaiveDate, f64)>, granularity: Granularity) -> Result<Self> {
        let points: Vec<_> = points.into_iter().map(|(d, v)| (granularity.bucket(d), v)).collect();
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SeriesError::Unordered(w[1].0, w[0].0));
            }
        }
        if let Some((d, _)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SeriesError::NonFinite(*d));
        }
        Ok(Self { points, granularity })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|(d, _)| *d)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|(_, v)| *v).collect()
    }

    /// First date followed by a missing bucket, if any.
    pub fn first_gap(&self) -> Option<NaiveDate> {
        self.points
            .windows(2)
            .find(|w| self.granularity.ordinal(w[1].0) - self.granularity.ordinal(w[0].0) != 1)
            .map(|w| w[0].0)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            points: self.points.iter().map(|&(d, v)| (d, f(v))).collect(),
            granularity: self.granularity,
        }
    }

    pub fn read_csv(path: &Path, granularity: Granularity) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for row in reader.deserialize() {
            let p: CsvPoint = row?;
            points.push((p.date, p.value));
        }
        Self::new(points, granularity)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for &(date, value) in &self.points {
            w.serialize(CsvPoint { date, value })?;
        }
        if self.points.is_empty() {
            w.write_record(["date", "value"])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Groups dated probabilities into day or month buckets and averages them.
pub fn aggregate(predictions: &[(NaiveDate, f64)], granularity: Granularity) -> Result<TimeSeries> {
    if predictions.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    let mut buckets: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for &(date, p) in predictions {
        let e = buckets.entry(granularity.bucket(date)).or_default();
        e.0 += p;
        e.1 += 1;
    }
    TimeSeries::new(
        buckets.into_iter().map(|(d, (sum, n))| (d, sum / n as f64)).collect(),
        granularity,
    )
}
