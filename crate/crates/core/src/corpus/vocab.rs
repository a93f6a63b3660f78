use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, NormalizedDoc, Result};

pub const PAD_ID: u32 = 0;
pub const UNKNOWN_ID: u32 = 1;

const VOCAB_FORMAT: &str = "mediaseries-vocab/1";

/// Token → id map. Ids start at 2; 0 pads and 1 marks unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: BTreeMap<String, u32>,
    document_frequency: BTreeMap<String, usize>,
    max_sequence_length: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    format: String,
    max_sequence_length: usize,
    size: usize,
    tokens: BTreeMap<String, u32>,
    document_frequency: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.token_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_to_id.is_empty()
    }

    /// Number of embedding rows a model needs: tokens plus pad and unknown.
    pub fn embedding_rows(&self) -> usize {
        self.len() + 2
    }

    pub fn max_sequence_length(&self) -> usize {
        self.max_sequence_length
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.document_frequency.get(token).copied()
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, u32)> {
        self.token_to_id.iter().map(|(t, &i)| (t.as_str(), i))
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            format: VOCAB_FORMAT.into(),
            max_sequence_length: self.max_sequence_length,
            size: self.len(),
            tokens: self.token_to_id.clone(),
            document_frequency: self.document_frequency.clone(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(text).map_err(|e| CorpusError::Json {
            path: "<vocabulary>".into(),
            line: e.line(),
            source: e,
        })?;
        if file.format != VOCAB_FORMAT {
            return Err(CorpusError::InvalidRecord(format!(
                "unsupported vocabulary format {:?}",
                file.format
            )));
        }
        let ids: BTreeSet<u32> = file.tokens.values().copied().collect();
        let contiguous = ids.len() == file.tokens.len()
            && ids.iter().copied().eq(2..2 + file.tokens.len() as u32);
        if !contiguous || file.max_sequence_length == 0 {
            return Err(CorpusError::InvalidRecord("vocabulary ids not contiguous from 2".into()));
        }
        Ok(Self {
            token_to_id: file.tokens,
            document_frequency: file.document_frequency,
            max_sequence_length: file.max_sequence_length,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Keeps tokens with document frequency ≥ `min_df`, at most `max_size` of
/// them (highest df first, lexicographic tie-break), and numbers them in
/// that order from 2.
pub fn build_vocabulary(
    docs: &[NormalizedDoc],
    min_df: usize,
    max_size: usize,
    max_sequence_length: usize,
) -> Result<Vocabulary> {
    let min_df = min_df.max(1);
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.truncate(max_size);
    if kept.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    Ok(Vocabulary {
        token_to_id: kept
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.to_string(), i as u32 + 2))
            .collect(),
        document_frequency: kept.iter().map(|(t, n)| (t.to_string(), *n)).collect(),
        max_sequence_length: max_sequence_length.max(1),
    })
}

/// Maps tokens to ids, truncating or right-padding to the vocabulary's
/// sequence length.
pub fn vectorize(doc: &NormalizedDoc, vocab: &Vocabulary) -> Vec<u32> {
    let mut ids: Vec<u32> = doc
        .tokens
        .iter()
        .take(vocab.max_sequence_length)
        .map(|t| vocab.id(t).unwrap_or(UNKNOWN_ID))
        .collect();
    ids.resize(vocab.max_sequence_length, PAD_ID);
    ids
}
