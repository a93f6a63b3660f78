use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfResult {
    pub lags: Vec<i64>,
    pub correlations: Vec<f64>,
    pub peak_lag: i64,
}

impl CcfResult {
    pub fn at(&self, lag: i64) -> Option<f64> {
        self.lags.iter().position(|&l| l == lag).map(|i| self.correlations[i])
    }

    pub fn peak_correlation(&self) -> f64 {
        self.at(self.peak_lag).expect("peak lag is in range")
    }
}

/// Per-lag Pearson correlation of `x_t` with `y_{t+k}`, computed on the
/// dates both series share. A positive peak lag means `y` follows `x`.
pub fn ccf(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<CcfResult> {
    if x.granularity() != y.granularity() {
        return Err(SeriesError::GranularityMismatch);
    }
    let ys: BTreeMap<_, _> = y.points().iter().copied().collect();
    let (xa, ya): (Vec<f64>, Vec<f64>) = x
        .points()
        .iter()
        .filter_map(|(d, xv)| ys.get(d).map(|yv| (*xv, *yv)))
        .unzip();
    ccf_values(&xa, &ya, max_lag)
}

/// [`ccf`] on two already aligned value slices.
pub fn ccf_values(x: &[f64], y: &[f64], max_lag: usize) -> Result<CcfResult> {
    let n = x.len().min(y.len());
    if max_lag == 0 || n <= max_lag + 2 {
        return Err(SeriesError::InsufficientOverlap { got: n, max_lag });
    }
    let lag = max_lag as i64;
    let mut lags = Vec::with_capacity(2 * max_lag + 1);
    let mut correlations = Vec::with_capacity(2 * max_lag + 1);
    for k in -lag..=lag {
        let start = (-k).max(0) as usize;
        let end = (n as i64 - k.max(0)) as usize;
        let xs = &x[start..end];
        let ys = &y[(start as i64 + k) as usize..(end as i64 + k) as usize];
        correlations.push(pearson(xs, ys).ok_or(SeriesError::ZeroVariance(k))?);
        lags.push(k);
    }

    // ties: smaller |k| first, then the negative lag
    let mut order: Vec<usize> = (0..lags.len()).collect();
    order.sort_by_key(|&i| (lags[i].abs(), lags[i]));
    let mut peak = order[0];
    for &i in &order[1..] {
        if correlations[i].abs() > correlations[peak].abs() {
            peak = i;
        }
    }
    Ok(CcfResult {
        peak_lag: lags[peak],
        lags,
        correlations,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
