//! The `mediaseries` command line.
//!
//! Every subcommand builds its outputs in memory and writes them only when
//! it has finished, so a failing run leaves the output directory untouched.
//! `all` chains the stages in memory and writes once at the end.

mod config;
mod stages;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    AnomalyConfig, CcfConfig, GbvConfig, HeatmapScale, MapperConfig, PathsConfig, ReportConfig, RunConfig,
    SeriesConfig, Subset, TagsConfig, TextConfig, CONFIG_ENV,
};
pub use stages::ScoreRecord;

/// Process exit categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Data,
    Numeric,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Data => 3,
            ExitKind::Numeric => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ExitKind::Config => "config",
            ExitKind::Data => "data",
            ExitKind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ExitKind,
    pub stage: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind, stage: stage.into(), message: message.into() }
    }

    /// One JSON object, as written to standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind.name(), "stage": self.stage, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error in {}: {}", self.kind.name(), self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "mediaseries",
    version,
    about = "News-corpus scoring, time-series analysis and Mapper graphs",
    after_help = "Any configuration field can be overridden with --<dotted.key>=<value>, e.g. --tags.train.epochs=5"
)]
struct Args {
    /// JSON run configuration.
    #[arg(long, env = CONFIG_ENV, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for document-level work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// HTML pages listed in a manifest to corpus JSONL.
    Ingest,
    /// Token streams and vocabulary.
    Normalize,
    /// Train the multilabel tagger.
    TrainTags,
    /// Train the binary scorer.
    TrainGbv,
    /// Per-document tags and score.
    Score,
    /// Daily and monthly series plus moving-average decomposition.
    Series,
    /// Structural fit and interval anomalies.
    Anomalies,
    /// Cross-correlation against the survey series.
    Ccf,
    /// PCA-reduced tag cloud and Mapper graph.
    Mapper,
    /// Tag frequencies and calendar heatmaps.
    Report,
    /// Every stage in order.
    All,
}

/// Splits `--a.b=v` / `--a.b v` overrides out of the argument list.
fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Vec<(String, String)>), CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy().into_owned();
        let Some(flag) = text.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match value {
            Some(v) => v,
            None => iter
                .next()
                .map(|v| v.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::new(ExitKind::Config, "args", format!("--{key} needs a value")))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

/// Output files keyed by path relative to the output directory.
#[derive(Debug, Default)]
pub(crate) struct Artifacts {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, rel: impl AsRef<Path>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(rel.as_ref().to_path_buf(), bytes.into());
    }

    fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error, p: &Path| CliError::new(ExitKind::Data, "write", format!("{}: {e}", p.display()));
        let mut written = Vec::new();
        for (rel, bytes) in &self.files {
            let path = out_dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| io(e, parent))?;
            }
            std::fs::write(&path, bytes).map_err(|e| io(e, &path))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs one command with an already loaded configuration and returns the
/// written paths.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut state = stages::State::default();
    let mut artifacts = Artifacts::default();
    let ctx = stages::Ctx { cfg };
    ctx.preflight(command)?;
    match command {
        Command::Ingest => stages::ingest(&ctx, &mut state, &mut artifacts)?,
        Command::Normalize => stages::normalize(&ctx, &mut state, &mut artifacts)?,
        Command::TrainTags => stages::train_tags(&ctx, &mut state, &mut artifacts)?,
        Command::TrainGbv => stages::train_gbv(&ctx, &mut state, &mut artifacts)?,
        Command::Score => stages::score(&ctx, &mut state, &mut artifacts)?,
        Command::Series => stages::series(&ctx, &mut state, &mut artifacts)?,
        Command::Anomalies => stages::anomalies(&ctx, &mut state, &mut artifacts)?,
        Command::Ccf => stages::ccf(&ctx, &mut state, &mut artifacts)?,
        Command::Mapper => stages::mapper(&ctx, &mut state, &mut artifacts)?,
        Command::Report => stages::report(&ctx, &mut state, &mut artifacts)?,
        Command::All => {
            if cfg.paths.html_dir.is_some() {
                stages::ingest(&ctx, &mut state, &mut artifacts)?;
            }
            stages::normalize(&ctx, &mut state, &mut artifacts)?;
            stages::train_tags(&ctx, &mut state, &mut artifacts)?;
            stages::train_gbv(&ctx, &mut state, &mut artifacts)?;
            stages::score(&ctx, &mut state, &mut artifacts)?;
            stages::series(&ctx, &mut state, &mut artifacts)?;
            stages::anomalies(&ctx, &mut state, &mut artifacts)?;
            if cfg.paths.survey.is_some() {
                stages::ccf(&ctx, &mut state, &mut artifacts)?;
            }
            stages::mapper(&ctx, &mut state, &mut artifacts)?;
            stages::report(&ctx, &mut state, &mut artifacts)?;
        }
    }
    artifacts.write(&cfg.paths.output_dir)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let (rest, mut overrides) = match split_overrides(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}", e.to_json());
            return e.kind.code();
        }
    };
    let args = match Args::try_parse_from(rest) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { ExitKind::Config.code() } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    let result = RunConfig::load(args.config.as_deref(), &overrides).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = args.jobs {
            if jobs == 0 {
                return Err(CliError::new(ExitKind::Config, "args", "--jobs must be positive"));
            }
            pool = pool.num_threads(jobs);
        }
        let pool = pool.build().map_err(|e| CliError::new(ExitKind::Config, "args", e.to_string()))?;
        pool.install(|| execute(args.command, &cfg))
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.kind.code()
        }
    }
}
