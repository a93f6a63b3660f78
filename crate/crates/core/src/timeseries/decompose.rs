//! Classical additive decomposition `X = T + S + e` by centered moving averages.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Result, SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub dates: Vec<NaiveDate>,
    pub observed: Vec<f64>,
    /// `None` on the half-window edges.
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    /// Defined wherever the trend is.
    pub residual: Vec<Option<f64>>,
    pub period: usize,
}

/// Decomposes a gap-free series. Odd periods use a plain centered window of
/// `period` points; even periods use the `2 × period` window with
/// half-weighted end points.
pub fn decompose_ma(series: &TimeSeries, period: usize) -> Result<Decomposition> {
    if let Some(d) = series.first_gap() {
        return Err(SeriesError::GapsPresent(d));
    }
    let observed = series.values();
    let (trend, seasonal, residual) = decompose_values(&observed, period)?;
    Ok(Decomposition {
        dates: series.dates().collect(),
        observed,
        trend,
        seasonal,
        residual,
        period,
    })
}

type Components = (Vec<Option<f64>>, Vec<f64>, Vec<Option<f64>>);

/// Same as [`decompose_ma`] on bare, evenly spaced values.
pub fn decompose_values(values: &[f64], period: usize) -> Result<Components> {
    if period == 0 {
        return Err(SeriesError::InvalidConfig("period must be positive".into()));
    }
    let n = values.len();
    if n < 2 * period {
        return Err(SeriesError::TooShort { needed: 2 * period, got: n });
    }
    let half = period / 2;
    let mut trend = vec![None; n];
    for t in half..n - half {
        let window = &values[t - half..=t + half];
        let sum: f64 = if period % 2 == 1 {
            window.iter().sum()
        } else {
            0.5 * window[0] + window[1..window.len() - 1].iter().sum::<f64>() + 0.5 * window[window.len() - 1]
        };
        trend[t] = Some(sum / period as f64);
    }

    let mut phase_sum = vec![0.0; period];
    let mut phase_count = vec![0usize; period];
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            phase_sum[t % period] += values[t] - tr;
            phase_count[t % period] += 1;
        }
    }
    let mut pattern: Vec<f64> = phase_sum
        .iter()
        .zip(&phase_count)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let centre = pattern.iter().sum::<f64>() / period as f64;
    for s in &mut pattern {
        *s -= centre;
    }

    let seasonal: Vec<f64> = (0..n).map(|t| pattern[t % period]).collect();
    let residual = trend
        .iter()
        .enumerate()
        .map(|(t, tr)| tr.map(|tr| values[t] - tr - seasonal[t]))
        .collect();
    Ok((trend, seasonal, residual))
}

/// Ratio of the last defined trend value to the one `lag` steps earlier.
pub fn trend_ratio(decomposition: &Decomposition, lag: usize) -> Option<f64> {
    let (last_idx, last) = decomposition
        .trend
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, t)| t.map(|t| (i, t)))?;
    let earlier = decomposition.trend.get(last_idx.checked_sub(lag)?)?.as_ref()?;
    (*earlier != 0.0).then(|| last / earlier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Granularity;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn monthly(values: &[f64]) -> TimeSeries {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        TimeSeries::new(
            values.iter().enumerate().map(|(i, &v)| (start + chrono::Months::new(i as u32), v)).collect(),
            Granularity::Monthly,
        )
        .unwrap()
    }

    #[test]
    fn constant_series() {
        let d = decompose_ma(&monthly(&[2.5; 36]), 12).unwrap();
        for t in 6..30 {
            assert_eq!(d.trend[t], Some(2.5));
            assert_eq!(d.residual[t], Some(0.0));
        }
        assert!(d.seasonal.iter().all(|&s| s == 0.0));
        assert_eq!(d.trend[5], None);
        assert_eq!(d.trend[30], None);
    }

    #[test]
    fn sinusoid_lands_in_seasonal() {
        let x: Vec<f64> = (0..60).map(|t| (2.0 * PI * t as f64 / 12.0).sin()).collect();
        let d = decompose_ma(&monthly(&x), 12).unwrap();
        for t in 0..60 {
            if let Some(tr) = d.trend[t] {
                assert!(tr.abs() < 1e-9);
                assert!(d.residual[t].unwrap().abs() < 1e-9);
            }
            assert!((d.seasonal[t] - x[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn ramp_is_its_own_trend() {
        let x: Vec<f64> = (0..48).map(|t| 3.0 * t as f64).collect();
        let d = decompose_ma(&monthly(&x), 12).unwrap();
        for t in 6..42 {
            assert_eq!(d.trend[t], Some(3.0 * t as f64));
            assert!(d.residual[t].unwrap().abs() < 1e-9);
        }
        assert!(d.seasonal.iter().all(|s| s.abs() < 1e-9));
    }

    #[test]
    fn odd_period_window() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let (trend, _, _) = decompose_values(&x, 3).unwrap();
        assert_eq!(trend, vec![None, Some(2.0), Some(3.0), Some(4.0), Some(5.0), None]);
    }

    #[test]
    fn errors() {
        assert!(matches!(decompose_values(&[1.0; 23], 12), Err(SeriesError::TooShort { needed: 24, got: 23 })));
        assert!(matches!(decompose_values(&[1.0; 4], 0), Err(SeriesError::InvalidConfig(_))));
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let gappy = TimeSeries::new(
            (0..30).filter(|&i| i != 10).map(|i| (start + chrono::Months::new(i), 1.0)).collect(),
            Granularity::Monthly,
        )
        .unwrap();
        assert!(matches!(decompose_ma(&gappy, 12), Err(SeriesError::GapsPresent(_))));
    }

    #[test]
    fn trend_ratio_over_window() {
        let x: Vec<f64> = (0..60).map(|t| 1.0 + t as f64).collect();
        let d = decompose_ma(&monthly(&x), 12).unwrap();
        // last defined trend index 53 (value 54), 36 earlier index 17 (value 18)
        assert_eq!(trend_ratio(&d, 36), Some(3.0));
        assert_eq!(trend_ratio(&d, 100), None);
    }

    proptest! {
        #[test]
        fn identity_and_zero_sum(values in proptest::collection::vec(-100.0f64..100.0, 14..60), period in 2usize..8) {
            prop_assume!(values.len() >= 2 * period);
            let (trend, seasonal, residual) = decompose_values(&values, period).unwrap();
            for t in 0..values.len() {
                if let (Some(tr), Some(e)) = (trend[t], residual[t]) {
                    prop_assert!((tr + seasonal[t] + e - values[t]).abs() <= 1e-12);
                }
                if t + period < values.len() {
                    prop_assert_eq!(seasonal[t], seasonal[t + period]);
                }
            }
            prop_assert!(seasonal[..period].iter().sum::<f64>().abs() <= 1e-9);
        }
    }
}
