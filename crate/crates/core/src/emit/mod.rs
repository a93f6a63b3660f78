//! Static report files: CSV tables, SVG charts, DOT graphs.
//!
//! Every writer is a pure function of its input; SVG coordinates are
//! printed with four decimals so output is byte-stable.

mod heatmap;
mod reports;
mod svg;
mod tags;

use thiserror::Error;

pub use heatmap::{global_scale, render_heatmap, CalendarHeatmap, ColorScale};
pub use reports::{
    anomaly_chart_svg, anomaly_table_csv, ccf_chart_svg, ccf_csv, decomposition_csv, decomposition_svg, mapper_dot,
    read_ccf_csv, read_decomposition_csv, AnomalyTableRow, DecompositionRow,
};
pub use svg::{ramp_color, NEUTRAL_COLOR, RAMP_COLD, RAMP_WARM};
pub use tags::{read_tag_frequency_csv, tag_frequency, tag_frequency_csv, tag_frequency_svg, TagFrequencyReport, TagFrequencyRow};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("nothing to report")]
    EmptyInput,
    #[error("no data in year {0}")]
    YearOutOfRange(i32),
    #[error("heatmaps need a daily series")]
    NotDaily,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EmitError>;

pub(crate) fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| EmitError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
