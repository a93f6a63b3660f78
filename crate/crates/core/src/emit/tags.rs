use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::svg::{Scale, Svg};
use super::{csv_string, EmitError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagFrequencyRow {
    pub tag: String,
    pub count: usize,
    /// Percentage of documents carrying the tag.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagFrequencyReport {
    pub documents: usize,
    pub rows: Vec<TagFrequencyRow>,
}

/// Counts documents per tag; keeps the `top_n` most frequent, ties by name.
pub fn tag_frequency<'a, I, S>(docs: I, top_n: usize) -> Result<TagFrequencyReport>
where
    I: IntoIterator<Item = &'a BTreeSet<S>>,
    S: AsRef<str> + 'a,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut documents = 0;
    for tags in docs {
        documents += 1;
        for t in tags {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    if documents == 0 {
        return Err(EmitError::EmptyInput);
    }
    let mut rows: Vec<TagFrequencyRow> = counts
        .into_iter()
        .map(|(tag, count)| TagFrequencyRow {
            tag: tag.to_string(),
            count,
            percent: 100.0 * count as f64 / documents as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tag.cmp(&b.tag)));
    rows.truncate(top_n);
    Ok(TagFrequencyReport { documents, rows })
}

/// Columns `tag,count,percent`.
pub fn tag_frequency_csv(report: &TagFrequencyReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(["tag", "count", "percent"])?;
        for r in &report.rows {
            w.write_record([r.tag.clone(), r.count.to_string(), r.percent.to_string()])?;
        }
        Ok(())
    })
}

pub fn read_tag_frequency_csv(text: &str) -> Result<Vec<TagFrequencyRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Horizontal bar chart of percentages.
pub fn tag_frequency_svg(report: &TagFrequencyReport, title: &str) -> String {
    let bar_h = 18.0;
    let (left, top, width) = (220.0, 40.0, 400.0);
    let height = top + bar_h * report.rows.len() as f64 + 30.0;
    let mut svg = Svg::new(left + width + 80.0, height);
    svg.text(10.0, 24.0, 14.0, "start", title);
    let x = Scale::new([0.0, 100.0], 0.0, width);
    for (i, r) in report.rows.iter().enumerate() {
        let y = top + i as f64 * bar_h;
        svg.text(left - 6.0, y + 13.0, 11.0, "end", &r.tag);
        svg.rect(left, y + 2.0, x.map(r.percent), bar_h - 4.0, "#4575b4", "");
        svg.text(left + x.map(r.percent) + 4.0, y + 13.0, 10.0, "start", &format!("{:.1}%", r.percent));
    }
    svg.finish()
}
