use std::collections::BTreeMap;
use std::fmt::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::svg::{escape, num, ramp_color, Scale, Svg};
use super::{csv_string, Result};
use crate::tda::MapperGraph;
use crate::timeseries::{AnomalyReport, CcfResult, Decomposition};

const W: f64 = 800.0;
const H: f64 = 320.0;
const MARGIN: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub date: NaiveDate,
    pub observed: f64,
    pub trend: Option<f64>,
    pub seasonal: f64,
    pub residual: Option<f64>,
}

/// Columns `date,observed,trend,seasonal,residual`; undefined edges are empty.
pub fn decomposition_csv(d: &Decomposition) -> Result<String> {
    csv_string(|w| {
        w.write_record(["date", "observed", "trend", "seasonal", "residual"])?;
        for i in 0..d.dates.len() {
            let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
            w.write_record([
                d.dates[i].to_string(),
                d.observed[i].to_string(),
                opt(d.trend[i]),
                d.seasonal[i].to_string(),
                opt(d.residual[i]),
            ])?;
        }
        Ok(())
    })
}

pub fn read_decomposition_csv(text: &str) -> Result<Vec<DecompositionRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn frame(svg: &mut Svg, title: &str, y: &Scale, first: NaiveDate, last: NaiveDate) {
    svg.text(MARGIN, 24.0, 14.0, "start", title);
    svg.line(MARGIN, H - MARGIN, W - MARGIN, H - MARGIN, "#555555");
    svg.line(MARGIN, MARGIN, MARGIN, H - MARGIN, "#555555");
    let (lo, hi) = y.bounds();
    svg.text(MARGIN - 4.0, H - MARGIN, 10.0, "end", &format!("{lo:.4}"));
    svg.text(MARGIN - 4.0, MARGIN + 8.0, 10.0, "end", &format!("{hi:.4}"));
    svg.text(MARGIN, H - MARGIN + 16.0, 10.0, "start", &first.to_string());
    svg.text(W - MARGIN, H - MARGIN + 16.0, 10.0, "end", &last.to_string());
}

fn x_scale(dates: &[NaiveDate]) -> Scale {
    Scale::new(dates.iter().map(|d| (*d - dates[0]).num_days() as f64), MARGIN, W - MARGIN)
}

/// Runs of defined points, so undefined values break the line.
fn segments(dates: &[NaiveDate], values: &[Option<f64>], x: &Scale, y: &Scale) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new()];
    for (d, v) in dates.iter().zip(values) {
        match v {
            Some(v) => out.last_mut().unwrap().push((x.map((*d - dates[0]).num_days() as f64), y.map(*v))),
            None if !out.last().unwrap().is_empty() => out.push(Vec::new()),
            None => {}
        }
    }
    out
}

/// Observed series in grey with the trend overlaid.
pub fn decomposition_svg(d: &Decomposition, title: &str) -> String {
    let mut svg = Svg::new(W, H);
    if d.dates.is_empty() {
        return svg.finish();
    }
    let x = x_scale(&d.dates);
    let y = Scale::new(d.observed.iter().copied().chain(d.trend.iter().flatten().copied()), H - MARGIN, MARGIN);
    frame(&mut svg, title, &y, d.dates[0], d.dates[d.dates.len() - 1]);
    let observed: Vec<Option<f64>> = d.observed.iter().map(|v| Some(*v)).collect();
    for s in segments(&d.dates, &observed, &x, &y) {
        svg.polyline(&s, "#999999", 1.0);
    }
    for s in segments(&d.dates, &d.trend, &x, &y) {
        svg.polyline(&s, "#d73027", 2.0);
    }
    svg.finish()
}

/// Observed values, fitted mean, the 99% band, and anomalies in red.
pub fn anomaly_chart_svg(report: &AnomalyReport, title: &str) -> String {
    let mut svg = Svg::new(W, H);
    if report.rows.is_empty() {
        return svg.finish();
    }
    let mut rows = report.rows.clone();
    rows.sort_by_key(|r| r.date);
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.date).collect();
    let x = x_scale(&dates);
    let y = Scale::new(rows.iter().flat_map(|r| [r.observed, r.lower, r.upper]), H - MARGIN, MARGIN);
    frame(&mut svg, title, &y, dates[0], dates[dates.len() - 1]);
    let px = |d: NaiveDate| x.map((d - dates[0]).num_days() as f64);

    let mut band: Vec<(f64, f64)> = rows.iter().map(|r| (px(r.date), y.map(r.upper))).collect();
    band.extend(rows.iter().rev().map(|r| (px(r.date), y.map(r.lower))));
    svg.polygon(&band, "#74add1", 0.3);
    svg.polyline(&rows.iter().map(|r| (px(r.date), y.map(r.expected))).collect::<Vec<_>>(), "#4575b4", 1.5);
    for r in &rows {
        let (fill, radius) = if r.is_anomaly { ("#d73027", 3.5) } else { ("#333333", 1.5) };
        svg.circle(px(r.date), y.map(r.observed), radius, fill, &format!(r#" data-date="{}""#, r.date));
    }
    svg.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyTableRow {
    pub date: NaiveDate,
    pub mean_probability: f64,
    pub headline: String,
}

/// Flagged dates only, newest first, with an optional headline per date.
pub fn anomaly_table_csv(report: &AnomalyReport, headlines: &BTreeMap<NaiveDate, String>) -> Result<String> {
    let mut rows: Vec<_> = report.anomalies().collect();
    rows.sort_by(|a, b| b.date.cmp(&a.date));
    csv_string(|w| {
        w.write_record(["date", "mean_probability", "headline"])?;
        for r in rows {
            w.write_record([
                r.date.to_string(),
                r.observed.to_string(),
                headlines.get(&r.date).cloned().unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

/// Columns `lag,correlation`.
pub fn ccf_csv(result: &CcfResult) -> Result<String> {
    csv_string(|w| {
        w.write_record(["lag", "correlation"])?;
        for (lag, r) in result.lags.iter().zip(&result.correlations) {
            w.write_record([lag.to_string(), r.to_string()])?;
        }
        Ok(())
    })
}

pub fn read_ccf_csv(text: &str) -> Result<Vec<(i64, f64)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Stem plot of correlation by lag; the peak lag is highlighted.
pub fn ccf_chart_svg(result: &CcfResult, title: &str) -> String {
    let mut svg = Svg::new(W, H);
    svg.text(MARGIN, 24.0, 14.0, "start", title);
    if result.lags.is_empty() {
        return svg.finish();
    }
    let x = Scale::new(result.lags.iter().map(|&l| l as f64), MARGIN, W - MARGIN);
    let y = Scale::new([-1.0, 1.0], H - MARGIN, MARGIN);
    svg.line(MARGIN, y.map(0.0), W - MARGIN, y.map(0.0), "#555555");
    for (&lag, &r) in result.lags.iter().zip(&result.correlations) {
        let colour = if lag == result.peak_lag { "#d73027" } else { "#4575b4" };
        svg.line(x.map(lag as f64), y.map(0.0), x.map(lag as f64), y.map(r), colour);
        svg.circle(x.map(lag as f64), y.map(r), 2.5, colour, "");
    }
    svg.text(MARGIN, H - MARGIN + 16.0, 10.0, "start", &result.lags[0].to_string());
    svg.text(W - MARGIN, H - MARGIN + 16.0, 10.0, "end", &result.lags[result.lags.len() - 1].to_string());
    svg.text(
        W - MARGIN,
        24.0,
        11.0,
        "end",
        &format!("peak lag {} (r = {:.4})", result.peak_lag, result.peak_correlation()),
    );
    svg.finish()
}

/// Undirected DOT graph; node colour from the decoration hint if present.
pub fn mapper_dot(graph: &MapperGraph) -> String {
    let mut out = String::from("graph mapper {\n  node [shape=circle, style=filled, fontsize=8];\n");
    for n in &graph.nodes {
        let colour = ramp_color(n.color.unwrap_or(0.0));
        let width = 0.2 + 0.1 * n.radius.unwrap_or_else(|| (n.size as f64).sqrt());
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", width={}, fillcolor=\"{}\", tooltip=\"{}\"];",
            n.node_id,
            n.size,
            num(width),
            colour,
            escape(&format!("interval {} size {} mean_gbv {:.4}", n.interval, n.size, n.mean_gbv))
        );
    }
    for e in &graph.edges {
        let _ = writeln!(out, "  n{} -- n{} [weight={}, penwidth={}];", e.source, e.target, e.shared, num(1.0 + (e.shared as f64).ln()));
    }
    out.push_str("}\n");
    out
}
