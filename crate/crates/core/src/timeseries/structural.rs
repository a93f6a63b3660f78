//! Structural regression `Y = T + S + H + e`.
//!
//! Trend is piecewise linear with hinge changepoints, seasonality is a sum of
//! Fourier blocks, holidays are 0/1 indicators. Coefficients come from one
//! least-squares solve with an L2 penalty on the changepoint deltas only.
//! The prediction interval is `expected ± Z_99 · σ`, σ being the sample
//! standard deviation of the training residuals.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Result, SeriesError, TimeSeries};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293;

const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seasonality {
    /// Period in days.
    pub period: f64,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidaySet {
    pub name: String,
    pub dates: BTreeSet<NaiveDate>,
}

impl HolidaySet {
    /// Reads a JSON map of set name to ISO date list.
    pub fn read_json(path: &Path) -> Result<Vec<HolidaySet>> {
        let map: BTreeMap<String, BTreeSet<NaiveDate>> =
            serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(map.into_iter().map(|(name, dates)| HolidaySet { name, dates }).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructuralConfig {
    pub n_changepoints: usize,
    /// Fraction of the time span over which changepoints are spread.
    pub changepoint_range: f64,
    pub seasonalities: Vec<Seasonality>,
    #[serde(skip)]
    pub holidays: Vec<HolidaySet>,
    /// Penalty on changepoint deltas; 0 gives plain least squares.
    pub ridge_lambda: f64,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        Self {
            n_changepoints: 25,
            changepoint_range: 0.8,
            seasonalities: vec![
                Seasonality { period: 365.25, order: 10 },
                Seasonality { period: 7.0, order: 3 },
            ],
            holidays: Vec::new(),
            ridge_lambda: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerms {
    pub period: f64,
    /// Cosine coefficients for harmonics 1..=order.
    pub cos: Vec<f64>,
    /// Sine coefficients for harmonics 1..=order.
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub base_level: f64,
    /// Slope per unit of rescaled time (the whole training span is 1).
    pub base_slope: f64,
    pub changepoints: Vec<(NaiveDate, f64)>,
    pub fourier: Vec<FourierTerms>,
    pub holiday_effects: BTreeMap<String, f64>,
    pub holidays: Vec<HolidaySet>,
    pub residual_sigma: f64,
}

struct Layout {
    start: NaiveDate,
    span_days: f64,
    changepoint_days: Vec<i64>,
    seasonalities: Vec<Seasonality>,
    holidays: Vec<HolidaySet>,
}

impl Layout {
    fn n_cols(&self) -> usize {
        2 + self.changepoint_days.len()
            + self.seasonalities.iter().map(|s| 2 * s.order).sum::<usize>()
            + self.holidays.len()
    }

    fn delta_cols(&self) -> std::ops::Range<usize> {
        2..2 + self.changepoint_days.len()
    }

    fn row(&self, date: NaiveDate) -> Vec<f64> {
        let days = (date - self.start).num_days() as f64;
        let t = days / self.span_days;
        let mut row = Vec::with_capacity(self.n_cols());
        row.push(1.0);
        row.push(t);
        for &cp in &self.changepoint_days {
            row.push((t - cp as f64 / self.span_days).max(0.0));
        }
        for s in &self.seasonalities {
            for n in 1..=s.order {
                let angle = 2.0 * PI * n as f64 * days / s.period;
                row.push(angle.cos());
                row.push(angle.sin());
            }
        }
        for h in &self.holidays {
            row.push(if h.dates.contains(&date) { 1.0 } else { 0.0 });
        }
        row
    }
}

impl StructuralModel {
    fn layout(&self) -> Layout {
        Layout {
            start: self.start,
            span_days: span_days(self.start, self.end),
            changepoint_days: self.changepoints.iter().map(|(d, _)| (*d - self.start).num_days()).collect(),
            seasonalities: self
                .fourier
                .iter()
                .map(|f| Seasonality { period: f.period, order: f.cos.len() })
                .collect(),
            holidays: self.holidays.clone(),
        }
    }

    fn coefficients(&self) -> Vec<f64> {
        let mut c = vec![self.base_level, self.base_slope];
        c.extend(self.changepoints.iter().map(|(_, d)| d));
        for f in &self.fourier {
            for (a, b) in f.cos.iter().zip(&f.sin) {
                c.push(*a);
                c.push(*b);
            }
        }
        c.extend(self.holidays.iter().map(|h| self.holiday_effects[&h.name]));
        c
    }

    /// Fitted mean at a date; beyond the training range the last trend
    /// segment continues.
    pub fn expected(&self, date: NaiveDate) -> f64 {
        let row = self.layout().row(date);
        row.iter().zip(self.coefficients()).map(|(x, c)| x * c).sum()
    }

    /// Trend component alone.
    pub fn trend(&self, date: NaiveDate) -> f64 {
        let t = (date - self.start).num_days() as f64 / span_days(self.start, self.end);
        let span = span_days(self.start, self.end);
        self.base_level
            + self.base_slope * t
            + self
                .changepoints
                .iter()
                .map(|(d, delta)| delta * (t - (*d - self.start).num_days() as f64 / span).max(0.0))
                .sum::<f64>()
    }
}

fn span_days(start: NaiveDate, end: NaiveDate) -> f64 {
    ((end - start).num_days() as f64).max(1.0)
}

/// Fits the structural model to a (possibly gappy) series.
pub fn fit_structural(series: &TimeSeries, cfg: &StructuralConfig) -> Result<StructuralModel> {
    if !(0.0..=1.0).contains(&cfg.changepoint_range) || cfg.ridge_lambda < 0.0 {
        return Err(SeriesError::InvalidConfig(
            "changepoint_range must lie in [0, 1] and ridge_lambda be non-negative".into(),
        ));
    }
    if cfg.seasonalities.iter().any(|s| !(s.period > 0.0)) {
        return Err(SeriesError::InvalidConfig("seasonal periods must be positive".into()));
    }
    let fourier_cols: usize = cfg.seasonalities.iter().map(|s| 2 * s.order).sum();
    let needed = 2 * (fourier_cols + cfg.n_changepoints + cfg.holidays.len() + 2);
    if series.len() < needed {
        return Err(SeriesError::TooShort { needed, got: series.len() });
    }

    let points = series.points();
    let start = points[0].0;
    let end = points[points.len() - 1].0;
    let span = span_days(start, end);

    let mut changepoint_days: Vec<i64> = (1..=cfg.n_changepoints)
        .map(|j| (cfg.changepoint_range * j as f64 / cfg.n_changepoints as f64 * span).round() as i64)
        .filter(|&d| d >= 1 && (d as f64) < span)
        .collect();
    changepoint_days.dedup();

    let train_dates: BTreeSet<NaiveDate> = series.dates().collect();
    let holidays: Vec<HolidaySet> = cfg
        .holidays
        .iter()
        .filter(|h| h.dates.iter().any(|d| train_dates.contains(d)))
        .cloned()
        .collect();
    let unused: Vec<&HolidaySet> = cfg
        .holidays
        .iter()
        .filter(|h| !h.dates.iter().any(|d| train_dates.contains(d)))
        .collect();

    let layout = Layout {
        start,
        span_days: span,
        changepoint_days,
        seasonalities: cfg.seasonalities.clone(),
        holidays,
    };

    let n = points.len();
    let p = layout.n_cols();
    let deltas = layout.delta_cols();
    let extra = if cfg.ridge_lambda > 0.0 { deltas.len() } else { 0 };
    let mut x = DMatrix::<f64>::zeros(n + extra, p);
    let mut y = DVector::<f64>::zeros(n + extra);
    for (i, &(date, value)) in points.iter().enumerate() {
        for (j, v) in layout.row(date).into_iter().enumerate() {
            x[(i, j)] = v;
        }
        y[i] = value;
    }
    if extra > 0 {
        let root = cfg.ridge_lambda.sqrt();
        for (k, col) in deltas.clone().enumerate() {
            x[(n + k, col)] = root;
        }
    }

    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_max == 0.0 || s_min / s_max < RANK_TOLERANCE {
        return Err(SeriesError::RankDeficient(if s_max == 0.0 { 0.0 } else { s_min / s_max }));
    }
    let coef = svd
        .solve(&y, 0.0)
        .map_err(|e| SeriesError::InvalidConfig(e.to_string()))?;

    let fitted = x.rows(0, n) * &coef;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);

    let mut c = coef.iter().copied();
    let base_level = c.next().unwrap();
    let base_slope = c.next().unwrap();
    let changepoints = layout
        .changepoint_days
        .iter()
        .map(|&d| (start + chrono::Days::new(d as u64), c.next().unwrap()))
        .collect();
    let fourier = layout
        .seasonalities
        .iter()
        .map(|s| {
            let (mut cos, mut sin) = (Vec::new(), Vec::new());
            for _ in 0..s.order {
                cos.push(c.next().unwrap());
                sin.push(c.next().unwrap());
            }
            FourierTerms { period: s.period, cos, sin }
        })
        .collect();
    let mut holiday_effects: BTreeMap<String, f64> =
        layout.holidays.iter().map(|h| (h.name.clone(), c.next().unwrap())).collect();
    // sets that never occur in training carry no effect
    let mut all_holidays = layout.holidays.clone();
    for h in unused {
        holiday_effects.insert(h.name.clone(), 0.0);
        all_holidays.push(h.clone());
    }

    Ok(StructuralModel {
        start,
        end,
        base_level,
        base_slope,
        changepoints,
        fourier,
        holiday_effects,
        holidays: all_holidays,
        residual_sigma: var.sqrt(),
    })
}

/// `(expected, lower_99, upper_99)` for each date.
pub fn predict(model: &StructuralModel, dates: &[NaiveDate]) -> Vec<(f64, f64, f64)> {
    let layout = model.layout();
    let coef = model.coefficients();
    let half = Z_99 * model.residual_sigma;
    dates
        .iter()
        .map(|&d| {
            let e: f64 = layout.row(d).iter().zip(&coef).map(|(x, c)| x * c).sum();
            (e, e - half, e + half)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRow {
    pub date: NaiveDate,
    pub observed: f64,
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub is_anomaly: bool,
}

/// One row per point, newest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub rows: Vec<AnomalyRow>,
}

impl AnomalyReport {
    pub fn anomalies(&self) -> impl Iterator<Item = &AnomalyRow> {
        self.rows.iter().filter(|r| r.is_anomaly)
    }
}

/// Flags every point outside the model's 99% interval.
pub fn detect_anomalies(series: &TimeSeries, model: &StructuralModel) -> AnomalyReport {
    let dates: Vec<NaiveDate> = series.dates().collect();
    let mut rows: Vec<AnomalyRow> = series
        .points()
        .iter()
        .zip(predict(model, &dates))
        .map(|(&(date, observed), (expected, lower, upper))| AnomalyRow {
            date,
            observed,
            expected,
            lower,
            upper,
            is_anomaly: observed < lower || observed > upper,
        })
        .collect();
    rows.reverse();
    AnomalyReport { rows }
}

pub fn write_anomaly_csv<W: std::io::Write>(report: &AnomalyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if report.rows.is_empty() {
        w.write_record(["date", "observed", "expected", "lower", "upper", "is_anomaly"])?;
    }
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_anomaly_csv<R: std::io::Read>(input: R) -> Result<AnomalyReport> {
    let mut reader = csv::Reader::from_reader(input);
    let rows = reader.deserialize().collect::<std::result::Result<Vec<AnomalyRow>, _>>()?;
    Ok(AnomalyReport { rows })
}
