use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use scraper::{ElementRef, Html, Node, Selector};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{CorpusError, Document, RawArticle, Result};

const SKIPPED_CONTAINERS: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "template",
];

const DATE_SELECTORS: &[&str] = &[
    r#"meta[property="article:published_time"]"#,
    r#"meta[name="article:published_time"]"#,
    r#"meta[itemprop="datePublished"]"#,
    r#"meta[name="date"]"#,
    r#"meta[name="pubdate"]"#,
    r#"meta[name="publish-date"]"#,
    r#"meta[name="DC.date.issued"]"#,
];

const KEYWORD_SELECTORS: &[&str] = &[
    r#"meta[name="keywords"]"#,
    r#"meta[name="news_keywords"]"#,
    r#"meta[property="article:tag"]"#,
];

fn selector(css: &str) -> Selector {
    Selector::parse(css).expect("static selector")
}

/// Extracts title, body paragraphs, keyword tags and publication date.
///
/// `fallback_date` is used only when the page carries no parseable date
/// metadata; dates are never guessed from the URL.
pub fn extract_article(raw: &RawArticle, fallback_date: Option<NaiveDate>) -> Result<Document> {
    let html = Html::parse_document(&raw.markup);

    let paragraphs: Vec<String> = html
        .select(&selector("p"))
        .filter(|p| !inside_skipped(p))
        .map(|p| collapse_ws(&visible_text(&p)))
        .filter(|t| !t.is_empty())
        .collect();
    if paragraphs.is_empty() {
        return Err(CorpusError::ExtractionFailed { url: raw.url.clone() });
    }
    // Decoded entities can reintroduce angle brackets.
    let body = paragraphs.join("\n").replace(['<', '>'], " ");

    let published_at = metadata_date(&html)
        .or(fallback_date)
        .ok_or_else(|| CorpusError::DateUnparseable { url: raw.url.clone() })?;

    Ok(Document {
        id: document_id(&raw.source_id, &raw.url),
        source_id: raw.source_id.clone(),
        published_at,
        title: title(&html),
        body,
        tags: keyword_tags(&html),
    })
}

/// Stable opaque id derived from the publisher key and URL.
pub(crate) fn document_id(source_id: &str, url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    format!("{}-{}", source_id, &hex::encode(digest)[..16])
}

fn inside_skipped(el: &ElementRef) -> bool {
    el.ancestors().any(|n| match n.value() {
        Node::Element(e) => SKIPPED_CONTAINERS.contains(&e.name()),
        _ => false,
    })
}

fn visible_text(el: &ElementRef) -> String {
    let mut out = String::new();
    for node in el.descendants() {
        if let Node::Text(text) = node.value() {
            let hidden = node.ancestors().take_while(|a| a.id() != el.id()).any(|a| {
                matches!(a.value(), Node::Element(e) if SKIPPED_CONTAINERS.contains(&e.name()))
            });
            if !hidden {
                out.push_str(text);
            }
        }
    }
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn title(html: &Html) -> String {
    let candidates = [
        html.select(&selector("title")).next().map(|e| e.text().collect::<String>()),
        html.select(&selector(r#"meta[property="og:title"]"#))
            .next()
            .and_then(|e| e.value().attr("content").map(str::to_owned)),
        html.select(&selector("h1")).next().map(|e| e.text().collect::<String>()),
    ];
    candidates
        .into_iter()
        .flatten()
        .map(|t| collapse_ws(&t))
        .find(|t| !t.is_empty())
        .unwrap_or_default()
}

fn keyword_tags(html: &Html) -> BTreeSet<String> {
    let mut tags = BTreeSet::new();
    for css in KEYWORD_SELECTORS {
        for el in html.select(&selector(css)) {
            if let Some(content) = el.value().attr("content") {
                tags.extend(
                    content
                        .split(',')
                        .map(|t| collapse_ws(t).to_lowercase())
                        .filter(|t| !t.is_empty()),
                );
            }
        }
    }
    tags
}

fn metadata_date(html: &Html) -> Option<NaiveDate> {
    let from_meta = DATE_SELECTORS.iter().find_map(|css| {
        html.select(&selector(css))
            .filter_map(|e| e.value().attr("content"))
            .find_map(parse_date)
    });
    from_meta.or_else(|| {
        html.select(&selector("time[datetime]"))
            .filter_map(|e| e.value().attr("datetime"))
            .find_map(parse_date)
    })
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc).date_naive());
    }
    s.get(..10).and_then(|head| NaiveDate::parse_from_str(head, "%Y-%m-%d").ok())
}

/// One row of an HTML fixture manifest: `file,url,source_id,fallback_date[,fetched_at]`.
#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub url: String,
    pub source_id: String,
    #[serde(default)]
    pub fallback_date: Option<NaiveDate>,
    #[serde(default)]
    pub fetched_at: Option<DateTime<Utc>>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
