//! Article ingestion, text normalization and vocabulary construction.

mod extract;
mod io;
mod normalize;
mod stem;
mod vocab;

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_article, read_manifest, ManifestEntry};
pub use io::{jsonl_string, read_jsonl, write_jsonl};
pub use normalize::{
    default_stopwords, fold_accents, load_stopwords, normalize, normalize_document,
    CONTRACTIONS,
};
pub use stem::{stem, MIN_STEM_LEN, SUFFIXES};
pub use vocab::{build_vocabulary, vectorize, Vocabulary, PAD_ID, UNKNOWN_ID};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no non-empty body paragraph found in {url}")]
    ExtractionFailed { url: String },
    #[error("no publication date in {url} and no fallback date supplied")]
    DateUnparseable { url: String },
    #[error("no token survives the vocabulary filters")]
    EmptyVocabulary,
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest: {0}")]
    Manifest(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// A fetched page before extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawArticle {
    pub url: String,
    pub fetched_at: DateTime<Utc>,
    pub markup: String,
    pub source_id: String,
}

impl RawArticle {
    pub fn new(
        url: impl Into<String>,
        source_id: impl Into<String>,
        markup: impl Into<String>,
        fetched_at: DateTime<Utc>,
    ) -> Result<Self> {
        let raw = Self {
            url: url.into(),
            fetched_at,
            markup: markup.into(),
            source_id: source_id.into(),
        };
        if raw.url.is_empty() {
            return Err(CorpusError::InvalidRecord("empty url".into()));
        }
        if raw.markup.is_empty() {
            return Err(CorpusError::InvalidRecord(format!("empty markup for {}", raw.url)));
        }
        Ok(raw)
    }
}

/// One news article. This is also the line format of corpus JSONL files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub source_id: String,
    pub published_at: NaiveDate,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl Document {
    /// Lowercases tags and drops blank entries.
    pub fn canonicalize_tags(&mut self) {
        self.tags = std::mem::take(&mut self.tags)
            .into_iter()
            .map(|t| t.trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
    }

    /// Text fed to the classifiers: title and body joined.
    pub fn text(&self, include_title: bool) -> String {
        if include_title && !self.title.is_empty() {
            format!("{}\n{}", self.title, self.body)
        } else {
            self.body.clone()
        }
    }
}

/// Checks id uniqueness and tag hygiene for a loaded corpus.
pub fn validate_corpus(docs: &[Document]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for doc in docs {
        if doc.id.is_empty() {
            return Err(CorpusError::InvalidRecord("empty document id".into()));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateId(doc.id.clone()));
        }
        if doc.tags.iter().any(|t| t.trim().is_empty()) {
            return Err(CorpusError::InvalidRecord(format!("blank tag in {}", doc.id)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}
