use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::svg::{ramp_color, Svg, NEUTRAL_COLOR};
use super::{EmitError, Result};
use crate::timeseries::{Granularity, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

impl ColorScale {
    pub fn position(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarHeatmap {
    pub year: i32,
    pub cells: BTreeMap<NaiveDate, f64>,
    pub scale: ColorScale,
}

impl CalendarHeatmap {
    pub fn color(&self, date: NaiveDate) -> String {
        self.cells
            .get(&date)
            .map_or_else(|| NEUTRAL_COLOR.to_string(), |v| ramp_color(self.scale.position(*v)))
    }
}

/// Min and max over the whole series, for a scale shared across years.
pub fn global_scale(series: &TimeSeries) -> Option<ColorScale> {
    let values = series.values();
    let min = values.iter().copied().reduce(f64::min)?;
    let max = values.iter().copied().reduce(f64::max)?;
    Some(ColorScale { min, max })
}

const CELL: f64 = 14.0;
const PANEL_W: f64 = 7.0 * CELL + 20.0;
const PANEL_H: f64 = 6.0 * CELL + 30.0;
const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// Twelve month panels (weeks down, weekdays across, Monday first).
/// `scale = None` uses the year's own min and max.
pub fn render_heatmap(series: &TimeSeries, year: i32, scale: Option<ColorScale>) -> Result<(CalendarHeatmap, String)> {
    if series.granularity() != Granularity::Daily {
        return Err(EmitError::NotDaily);
    }
    let cells: BTreeMap<NaiveDate, f64> = series.points().iter().filter(|(d, _)| d.year() == year).copied().collect();
    if cells.is_empty() {
        return Err(EmitError::YearOutOfRange(year));
    }
    let scale = scale.unwrap_or_else(|| ColorScale {
        min: cells.values().copied().fold(f64::INFINITY, f64::min),
        max: cells.values().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    let map = CalendarHeatmap { year, cells, scale };

    let (cols, top) = (4.0, 40.0);
    let mut svg = Svg::new(cols * PANEL_W + 20.0, top + 3.0 * PANEL_H + 40.0);
    svg.text(10.0, 24.0, 14.0, "start", &year.to_string());
    for month in 1..=12u32 {
        let px = 10.0 + ((month - 1) % 4) as f64 * PANEL_W;
        let py = top + ((month - 1) / 4) as f64 * PANEL_H;
        svg.text(px, py + 10.0, 11.0, "start", MONTHS[month as usize - 1]);
        let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
        let offset = first.weekday().num_days_from_monday();
        let mut day = first;
        while day.month() == month {
            let slot = offset + day.day0();
            let (col, row) = ((slot % 7) as f64, (slot / 7) as f64);
            let (x, y) = (px + col * CELL, py + 16.0 + row * CELL);
            let attr = format!(r#" data-date="{day}""#);
            match map.cells.get(&day) {
                Some(v) => svg.rect_titled(x, y, CELL - 1.0, CELL - 1.0, &map.color(day), &attr, &format!("{day} {v:.4}")),
                None => svg.rect(x, y, CELL - 1.0, CELL - 1.0, &map.color(day), &attr),
            }
            day = day.succ_opt().expect("date in range");
        }
    }
    // legend
    let ly = top + 3.0 * PANEL_H + 10.0;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        svg.rect(10.0 + i as f64 * CELL, ly, CELL, 10.0, &ramp_color(t), "");
    }
    svg.text(10.0, ly + 24.0, 10.0, "start", &format!("{:.4}", scale.min));
    svg.text(10.0 + 11.0 * CELL, ly + 24.0, 10.0, "end", &format!("{:.4}", scale.max));
    Ok((map, svg.finish()))
}
