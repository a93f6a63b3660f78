#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mediaseries::synth::{holidays_json, synth_corpus, synth_html, SynthConfig};

pub const FIXTURE_CONFIG: &str = r#"{
  "seed": 7,
  "holdout_every": 5,
  "paths": {
    "html_dir": "html",
    "survey": "survey.csv",
    "holidays": "holidays.json",
    "output_dir": "out"
  },
  "text": { "min_df": 2, "max_sequence_length": 64 },
  "tags": {
    "min_tag_frequency": 5,
    "model": { "embed_dim": 16, "channels": [16], "kernel_width": 3, "pool_after": [] },
    "train": { "epochs": 12, "batch_size": 8, "learning_rate": 0.01 }
  },
  "gbv": {
    "model": { "embed_dim": 16, "channels": [16, 16], "kernel_width": 3, "pool_after": [0] },
    "train": { "epochs": 12, "batch_size": 8, "learning_rate": 0.01 }
  },
  "series": { "granularity": "daily", "period": 7, "trend_ratio_lag": 28 },
  "anomalies": {
    "granularity": "daily",
    "fit": { "n_changepoints": 3, "seasonalities": [{ "period": 7.0, "order": 3 }] }
  },
  "ccf": { "granularity": "daily", "max_lag": 7 },
  "mapper": { "subset": "all", "pca_dim": 3, "cover": { "n_intervals": 6, "overlap": 0.35 } }
}
"#;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Every fixture file, keyed by path relative to the fixtures directory.
pub fn fixture_files() -> BTreeMap<PathBuf, String> {
    let corpus = synth_corpus(&SynthConfig::default());
    let mut files = BTreeMap::new();
    let mut manifest = String::from("file,url,source_id,fallback_date\n");
    for doc in &corpus.docs {
        let file = format!("{}.html", doc.id);
        manifest.push_str(&format!("{file},https://news.example.org/{}/{},{},\n", doc.source_id, doc.id, doc.source_id));
        files.insert(PathBuf::from("html").join(&file), synth_html(doc));
    }
    files.insert(PathBuf::from("html/manifest.csv"), manifest);
    let mut survey = Vec::new();
    corpus.survey.write_csv(&mut survey).unwrap();
    files.insert(PathBuf::from("survey.csv"), String::from_utf8(survey).unwrap());
    files.insert(PathBuf::from("holidays.json"), holidays_json(&corpus.holidays));
    files.insert(PathBuf::from("config.json"), FIXTURE_CONFIG.to_string());
    files
}

pub fn write_tree(root: &Path, files: &BTreeMap<PathBuf, String>) {
    for (rel, text) in files {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }
}

/// All files under `root`, relative paths to bytes.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(path.strip_prefix(base).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}
