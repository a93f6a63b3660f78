//! Run configuration: one JSON file plus dotted command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CliError, ExitKind};
use crate::classify::{ModelSpec, TrainConfig};
use crate::tda::{Cover, GBV_SELECT_THRESHOLD};
use crate::timeseries::{Granularity, StructuralConfig};

/// Environment variable holding the default config path.
pub const CONFIG_ENV: &str = "MEDIASERIES_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory of HTML pages plus a `manifest` CSV; input to `ingest`.
    pub html_dir: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// Corpus JSONL; when unset the `ingest` output is used.
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            html_dir: None,
            manifest: None,
            corpus: None,
            stopwords: None,
            survey: None,
            holidays: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub include_title: bool,
    pub min_df: usize,
    pub max_vocab: usize,
    pub max_sequence_length: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self { include_title: true, min_df: 2, max_vocab: 50_000, max_sequence_length: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagsConfig {
    /// Labels are the tags carried by at least this many documents.
    pub min_tag_frequency: usize,
    pub threshold: f64,
    pub model: ModelSpec,
    pub train: TrainConfig,
}

impl Default for TagsConfig {
    fn default() -> Self {
        Self { min_tag_frequency: 5, threshold: 0.5, model: ModelSpec::tagger(), train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbvConfig {
    /// A document is positive when it carries any of these tags.
    pub tags: Vec<String>,
    pub threshold: f64,
    /// Strict lower bound for the high-score subset.
    pub select_threshold: f64,
    pub model: ModelSpec,
    pub train: TrainConfig,
}

impl Default for GbvConfig {
    fn default() -> Self {
        Self {
            tags: vec!["violencia de género".into()],
            threshold: 0.5,
            select_threshold: GBV_SELECT_THRESHOLD,
            model: ModelSpec::scorer(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub granularity: Granularity,
    pub period: usize,
    /// Steps back for the trend ratio.
    pub trend_ratio_lag: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { granularity: Granularity::Monthly, period: 12, trend_ratio_lag: 36 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyConfig {
    pub granularity: Granularity,
    pub fit: StructuralConfig,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        Self { granularity: Granularity::Daily, fit: StructuralConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcfConfig {
    pub granularity: Granularity,
    pub max_lag: usize,
}

impl Default for CcfConfig {
    fn default() -> Self {
        Self { granularity: Granularity::Monthly, max_lag: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    /// Documents with score strictly above `gbv.select_threshold`.
    Gbv,
    Year(i32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapperConfig {
    pub subset: Subset,
    pub pca_dim: usize,
    pub lens: usize,
    pub cover: Cover,
    pub cluster_eps: Option<f64>,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self { subset: Subset::All, pca_dim: 3, lens: 0, cover: Cover::default(), cluster_eps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapScale {
    Global,
    PerYear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub top_tags: usize,
    pub heatmap_scale: HeatmapScale,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { top_tags: 20, heatmap_scale: HeatmapScale::Global }
    }
}

/// Everything a run needs. Model seeds and shuffles derive from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Every k-th document (in id order) is held out of training; 0 disables.
    pub holdout_every: usize,
    pub paths: PathsConfig,
    pub text: TextConfig,
    pub tags: TagsConfig,
    pub gbv: GbvConfig,
    pub series: SeriesConfig,
    pub anomalies: AnomalyConfig,
    pub ccf: CcfConfig,
    pub mapper: MapperConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            holdout_every: 0,
            paths: PathsConfig::default(),
            text: TextConfig::default(),
            tags: TagsConfig::default(),
            gbv: GbvConfig::default(),
            series: SeriesConfig::default(),
            anomalies: AnomalyConfig::default(),
            ccf: CcfConfig::default(),
            mapper: MapperConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::new(ExitKind::Config, "config", msg)
}

/// Parses an override value: JSON when it parses, otherwise a plain string.
fn override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(config_error(format!("malformed override key {key:?}")));
        }
        let map = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just created")
            }
            _ => return Err(config_error(format!("override {key:?} descends into a non-object"))),
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("key has at least one part")
}

const PATH_KEYS: [&str; 7] = ["html_dir", "manifest", "corpus", "stopwords", "survey", "holidays", "output_dir"];

fn anchor_paths(root: &mut Value, base: &Path) {
    if let Some(Value::Object(paths)) = root.get_mut("paths") {
        for key in PATH_KEYS {
            if let Some(Value::String(p)) = paths.get_mut(key) {
                let path = Path::new(p.as_str());
                if path.is_relative() {
                    *p = base.join(path).to_string_lossy().into_owned();
                }
            }
        }
    }
}

impl RunConfig {
    /// Loads `file` (if any), applies `key=value` overrides and validates.
    /// Paths in the file are relative to its directory; paths given as
    /// overrides are relative to the working directory.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut root = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
                let mut v: Value = serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
                anchor_paths(&mut v, &base);
                v
            }
            None => Value::Object(Default::default()),
        };
        let cwd = std::env::current_dir().map_err(|e| config_error(e.to_string()))?;
        for (key, raw) in overrides {
            let mut value = override_value(raw);
            if let Some(name) = key.strip_prefix("paths.") {
                if PATH_KEYS.contains(&name) && raw != "null" {
                    value = Value::String(raw.clone());
                    let mut holder = serde_json::json!({ "paths": { name: value } });
                    anchor_paths(&mut holder, &cwd);
                    value = holder["paths"][name].take();
                }
            }
            set_dotted(&mut root, key, value)?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, t) in [
            ("tags.threshold", self.tags.threshold),
            ("gbv.threshold", self.gbv.threshold),
            ("gbv.select_threshold", self.gbv.select_threshold),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(config_error(format!("{name} = {t} must lie strictly between 0 and 1")));
            }
        }
        if self.gbv.tags.is_empty() {
            return Err(config_error("gbv.tags must name at least one tag"));
        }
        if self.text.max_sequence_length == 0 {
            return Err(config_error("text.max_sequence_length must be positive"));
        }
        if self.mapper.pca_dim == 0 || self.mapper.lens >= self.mapper.pca_dim {
            return Err(config_error("mapper.lens must index one of the mapper.pca_dim coordinates"));
        }
        self.mapper.cover.validate().map_err(|e| config_error(e.to_string()))?;
        self.tags.train.validate().map_err(|e| config_error(format!("tags.train: {e}")))?;
        self.gbv.train.validate().map_err(|e| config_error(format!("gbv.train: {e}")))?;
        Ok(())
    }

    /// Fails with a config error when an input path is unset or missing.
    pub fn require(&self, what: &str, path: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        match path {
            Some(p) if p.exists() => Ok(p.clone()),
            Some(p) => Err(config_error(format!("{what} {} does not exist", p.display()))),
            None => Err(config_error(format!("paths.{what} is not set"))),
        }
    }
}
