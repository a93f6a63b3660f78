use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{HeatmapScale, RunConfig, Subset};
use super::{Artifacts, CliError, Command, ExitKind};
use crate::classify::{self, ClassifyError, ConvTextModel, EvalMetrics, Example, ModelSpec, TrainConfig};
use crate::corpus::{self, CorpusError, Document, NormalizedDoc, RawArticle, Vocabulary};
use crate::emit::{self, EmitError};
use crate::tda::{self, Lens, TdaError};
use crate::timeseries::{self, Granularity, HolidaySet, SeriesError, TimeSeries};

/// One line of `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub doc_id: String,
    pub date: NaiveDate,
    pub tags: BTreeSet<String>,
    pub gbv: f64,
}

fn data(stage: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::new(ExitKind::Data, stage, msg.to_string())
}

fn corpus_err(stage: &str, e: CorpusError) -> CliError {
    data(stage, e)
}

fn classify_err(stage: &str, e: ClassifyError) -> CliError {
    let kind = match e {
        ClassifyError::InvalidArchitecture(_) | ClassifyError::InvalidConfig(_) => ExitKind::Config,
        _ => ExitKind::Data,
    };
    CliError::new(kind, stage, e.to_string())
}

fn series_err(stage: &str, e: SeriesError) -> CliError {
    let kind = match e {
        SeriesError::RankDeficient(_) | SeriesError::ZeroVariance(_) | SeriesError::NonFinite(_) => ExitKind::Numeric,
        SeriesError::InvalidConfig(_) => ExitKind::Config,
        _ => ExitKind::Data,
    };
    CliError::new(kind, stage, e.to_string())
}

fn tda_err(stage: &str, e: TdaError) -> CliError {
    let kind = match e {
        TdaError::DegenerateInput | TdaError::NonFinite(_) => ExitKind::Numeric,
        TdaError::BadCover(_) | TdaError::BadLens(_) => ExitKind::Config,
        TdaError::Classify(e) => return classify_err(stage, e),
        _ => ExitKind::Data,
    };
    CliError::new(kind, stage, e.to_string())
}

fn emit_err(stage: &str, e: EmitError) -> CliError {
    data(stage, e)
}

fn json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a RunConfig,
}

#[derive(Default)]
pub(crate) struct State {
    corpus: Option<Vec<Document>>,
    normalized: Option<Vec<NormalizedDoc>>,
    vocab: Option<Vocabulary>,
    tagger: Option<ConvTextModel>,
    scorer: Option<ConvTextModel>,
    scores: Option<Vec<ScoreRecord>>,
}

impl Ctx<'_> {
    fn out(&self, rel: &str) -> PathBuf {
        self.cfg.paths.output_dir.join(rel)
    }

    fn corpus_path(&self) -> Option<PathBuf> {
        self.cfg.paths.corpus.clone().or_else(|| Some(self.out("corpus.jsonl")).filter(|p| p.exists()))
    }

    /// Rejects missing inputs before any work starts.
    pub fn preflight(&self, command: Command) -> Result<(), CliError> {
        let paths = &self.cfg.paths;
        let needs_corpus = match command {
            Command::Ingest => {
                self.cfg.require("html_dir", &paths.html_dir)?;
                self.manifest_path()?;
                false
            }
            Command::All => paths.html_dir.is_none(),
            _ => true,
        };
        if command == Command::All && paths.html_dir.is_some() {
            self.cfg.require("html_dir", &paths.html_dir)?;
            self.manifest_path()?;
        }
        if needs_corpus {
            self.cfg.require("corpus", &self.corpus_path())?;
        }
        if command == Command::Ccf {
            self.cfg.require("survey", &paths.survey)?;
        }
        if command == Command::All && paths.survey.is_some() {
            self.cfg.require("survey", &paths.survey)?;
        }
        if matches!(command, Command::Anomalies | Command::All) && paths.holidays.is_some() {
            self.cfg.require("holidays", &paths.holidays)?;
        }
        if paths.stopwords.is_some() {
            self.cfg.require("stopwords", &paths.stopwords)?;
        }
        Ok(())
    }

    fn manifest_path(&self) -> Result<PathBuf, CliError> {
        let manifest = self
            .cfg
            .paths
            .manifest
            .clone()
            .or_else(|| self.cfg.paths.html_dir.as_ref().map(|d| d.join("manifest.csv")));
        self.cfg.require("manifest", &manifest)
    }
}

impl State {
    fn corpus(&mut self, ctx: &Ctx) -> Result<&[Document], CliError> {
        if self.corpus.is_none() {
            let path = ctx.corpus_path().ok_or_else(|| CliError::new(ExitKind::Config, "corpus", "paths.corpus is not set"))?;
            let mut docs: Vec<Document> = corpus::read_jsonl(&path).map_err(|e| corpus_err("corpus", e))?;
            for d in &mut docs {
                d.canonicalize_tags();
            }
            corpus::validate_corpus(&docs).map_err(|e| corpus_err("corpus", e))?;
            docs.sort_by(|a, b| a.id.cmp(&b.id));
            if docs.is_empty() {
                return Err(data("corpus", format!("{} holds no documents", path.display())));
            }
            self.corpus = Some(docs);
        }
        Ok(self.corpus.as_deref().expect("loaded"))
    }

    fn normalized(&mut self, ctx: &Ctx) -> Result<(&[NormalizedDoc], &Vocabulary), CliError> {
        if self.normalized.is_none() || self.vocab.is_none() {
            let (np, vp) = (ctx.out("normalized.jsonl"), ctx.out("vocab.json"));
            if np.exists() && vp.exists() {
                self.normalized = Some(corpus::read_jsonl(&np).map_err(|e| corpus_err("normalize", e))?);
                self.vocab = Some(Vocabulary::load(&vp).map_err(|e| corpus_err("normalize", e))?);
            } else {
                let (n, v) = build_normalized(ctx, self.corpus(ctx)?)?;
                self.normalized = Some(n);
                self.vocab = Some(v);
            }
        }
        Ok((self.normalized.as_deref().expect("loaded"), self.vocab.as_ref().expect("loaded")))
    }

    /// Token ids per corpus document, in corpus order.
    fn vectors(&mut self, ctx: &Ctx) -> Result<Vec<(String, Vec<u32>)>, CliError> {
        let ids: Vec<String> = self.corpus(ctx)?.iter().map(|d| d.id.clone()).collect();
        let (normalized, vocab) = self.normalized(ctx)?;
        let by_id: BTreeMap<&str, &NormalizedDoc> = normalized.iter().map(|n| (n.doc_id.as_str(), n)).collect();
        ids.into_iter()
            .map(|id| {
                let n = by_id
                    .get(id.as_str())
                    .ok_or_else(|| data("normalize", format!("no normalized tokens for {id}; rerun normalize")))?;
                let v = corpus::vectorize(n, vocab);
                Ok((id, v))
            })
            .collect()
    }

    fn model(slot: &mut Option<ConvTextModel>, ctx: &Ctx, file: &str, producer: &str) -> Result<ConvTextModel, CliError> {
        if slot.is_none() {
            let path = ctx.out(file);
            if !path.exists() {
                return Err(data("models", format!("{} is missing; run {producer} first", path.display())));
            }
            *slot = Some(ConvTextModel::load(&path).map_err(|e| classify_err("models", e))?);
        }
        Ok(slot.clone().expect("loaded"))
    }

    fn scores(&mut self, ctx: &Ctx) -> Result<&[ScoreRecord], CliError> {
        if self.scores.is_none() {
            let path = ctx.out("scores.jsonl");
            if !path.exists() {
                return Err(data("scores", format!("{} is missing; run score first", path.display())));
            }
            self.scores = Some(corpus::read_jsonl(&path).map_err(|e| corpus_err("scores", e))?);
        }
        Ok(self.scores.as_deref().expect("loaded"))
    }
}

fn build_normalized(ctx: &Ctx, docs: &[Document]) -> Result<(Vec<NormalizedDoc>, Vocabulary), CliError> {
    let stopwords: HashSet<String> = match &ctx.cfg.paths.stopwords {
        Some(p) => corpus::load_stopwords(p).map_err(|e| corpus_err("normalize", e))?,
        None => corpus::default_stopwords(),
    };
    let text = &ctx.cfg.text;
    let normalized: Vec<NormalizedDoc> = docs
        .par_iter()
        .map(|d| corpus::normalize_document(&d.id, &d.text(text.include_title), &stopwords))
        .collect();
    let vocab = corpus::build_vocabulary(&normalized, text.min_df, text.max_vocab, text.max_sequence_length)
        .map_err(|e| corpus_err("normalize", e))?;
    Ok((normalized, vocab))
}

pub(crate) fn ingest(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let dir = ctx.cfg.require("html_dir", &ctx.cfg.paths.html_dir)?;
    let entries = corpus::read_manifest(&ctx.manifest_path()?).map_err(|e| corpus_err("ingest", e))?;
    if entries.is_empty() {
        return Err(data("ingest", "manifest lists no pages"));
    }
    let docs = entries
        .par_iter()
        .map(|entry| {
            let path = dir.join(&entry.file);
            let markup = std::fs::read_to_string(&path).map_err(|e| data("ingest", format!("{}: {e}", path.display())))?;
            let fetched = entry.fetched_at.unwrap_or(chrono::DateTime::UNIX_EPOCH);
            let raw = RawArticle::new(&entry.url, &entry.source_id, markup, fetched).map_err(|e| corpus_err("ingest", e))?;
            let mut doc = corpus::extract_article(&raw, entry.fallback_date).map_err(|e| corpus_err("ingest", e))?;
            doc.canonicalize_tags();
            Ok(doc)
        })
        .collect::<Result<Vec<Document>, CliError>>()?;
    let mut docs = docs;
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    corpus::validate_corpus(&docs).map_err(|e| corpus_err("ingest", e))?;
    out.add("corpus.jsonl", corpus::jsonl_string(&docs));
    state.corpus = Some(docs);
    // anything derived from an older corpus is stale
    state.normalized = None;
    state.vocab = None;
    Ok(())
}

pub(crate) fn normalize(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let (normalized, vocab) = build_normalized(ctx, state.corpus(ctx)?)?;
    out.add("normalized.jsonl", corpus::jsonl_string(&normalized));
    out.add("vocab.json", vocab.to_json());
    state.normalized = Some(normalized);
    state.vocab = Some(vocab);
    Ok(())
}

#[derive(Serialize)]
struct TrainingSummary {
    labels: Vec<String>,
    seed: u64,
    train_documents: usize,
    holdout_documents: usize,
    loss_history: Vec<f64>,
    train: EvalMetrics,
    holdout: Option<EvalMetrics>,
}

/// Trains one model; every `holdout_every`-th document is kept out of
/// training and only evaluated.
#[allow(clippy::too_many_arguments)]
fn fit_model(
    ctx: &Ctx,
    stage: &str,
    examples: Vec<Example>,
    labels: Vec<String>,
    spec: &ModelSpec,
    train: &TrainConfig,
    threshold: f64,
    seed: u64,
    embedding_rows: usize,
) -> Result<(ConvTextModel, TrainConfig, TrainingSummary), CliError> {
    let k = ctx.cfg.holdout_every;
    let (mut fit, mut held) = (Vec::new(), Vec::new());
    for (i, ex) in examples.into_iter().enumerate() {
        if k > 0 && (i + 1) % k == 0 {
            held.push(ex);
        } else {
            fit.push(ex);
        }
    }
    let seq = ctx.cfg.text.max_sequence_length;
    let init = ConvTextModel::new(spec, embedding_rows, seq, labels.clone(), seed).map_err(|e| classify_err(stage, e))?;
    let train = TrainConfig { seed, ..train.clone() };
    let (model, loss_history) = classify::train(&init, &fit, &train).map_err(|e| classify_err(stage, e))?;
    let train_metrics = classify::evaluate(&model, &fit, threshold).map_err(|e| classify_err(stage, e))?;
    let holdout = if held.is_empty() {
        None
    } else {
        Some(classify::evaluate(&model, &held, threshold).map_err(|e| classify_err(stage, e))?)
    };
    if loss_history.iter().any(|l| !l.is_finite()) {
        return Err(CliError::new(ExitKind::Numeric, stage, "training loss became non-finite"));
    }
    let summary = TrainingSummary {
        labels,
        seed,
        train_documents: fit.len(),
        holdout_documents: held.len(),
        loss_history,
        train: train_metrics,
        holdout,
    };
    Ok((model, train, summary))
}

pub(crate) fn train_tags(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let vectors = state.vectors(ctx)?;
    let rows = state.vocab.as_ref().expect("loaded with vectors").embedding_rows();
    let docs = state.corpus(ctx)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in &d.tags {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let cfg = &ctx.cfg.tags;
    let labels: Vec<String> =
        counts.into_iter().filter(|&(_, n)| n >= cfg.min_tag_frequency).map(|(t, _)| t.to_string()).collect();
    if labels.is_empty() {
        return Err(data("train-tags", format!("no tag occurs in {} or more documents", cfg.min_tag_frequency)));
    }
    let examples: Vec<Example> = docs
        .iter()
        .zip(vectors)
        .map(|(d, (_, ids))| Example {
            ids,
            targets: labels.iter().map(|l| if d.tags.contains(l) { 1.0 } else { 0.0 }).collect(),
        })
        .collect();
    let (model, train, summary) =
        fit_model(ctx, "train-tags", examples, labels, &cfg.model, &cfg.train, cfg.threshold, ctx.cfg.seed, rows)?;
    out.add("models/tagger.json", model.to_json(Some(&train)));
    out.add("models/tagger_training.json", json(&summary));
    state.tagger = Some(model);
    Ok(())
}

pub(crate) fn train_gbv(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let vectors = state.vectors(ctx)?;
    let rows = state.vocab.as_ref().expect("loaded with vectors").embedding_rows();
    let cfg = &ctx.cfg.gbv;
    let docs = state.corpus(ctx)?;
    let examples: Vec<Example> = docs
        .iter()
        .zip(vectors)
        .map(|(d, (_, ids))| Example {
            ids,
            targets: vec![if cfg.tags.iter().any(|t| d.tags.contains(t)) { 1.0 } else { 0.0 }],
        })
        .collect();
    let labels = vec![cfg.tags.join("|")];
    let seed = ctx.cfg.seed.wrapping_add(1);
    let (model, train, summary) =
        fit_model(ctx, "train-gbv", examples, labels, &cfg.model, &cfg.train, cfg.threshold, seed, rows)?;
    out.add("models/scorer.json", model.to_json(Some(&train)));
    out.add("models/scorer_training.json", json(&summary));
    state.scorer = Some(model);
    Ok(())
}

pub(crate) fn score(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let tagger = State::model(&mut state.tagger, ctx, "models/tagger.json", "train-tags")?;
    let scorer = State::model(&mut state.scorer, ctx, "models/scorer.json", "train-gbv")?;
    let vectors = state.vectors(ctx)?;
    let docs = state.corpus(ctx)?;
    let threshold = ctx.cfg.tags.threshold;
    let mut records = docs
        .par_iter()
        .zip(vectors.par_iter())
        .map(|(d, (_, ids))| {
            Ok(ScoreRecord {
                doc_id: d.id.clone(),
                date: d.published_at,
                tags: classify::predict_tags(&tagger, ids, threshold)?,
                gbv: classify::gbv_probability(&scorer, ids)?,
            })
        })
        .collect::<Result<Vec<_>, ClassifyError>>()
        .map_err(|e| classify_err("score", e))?;
    records.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    out.add("scores.jsonl", corpus::jsonl_string(&records));
    state.scores = Some(records);
    Ok(())
}

fn score_series(scores: &[ScoreRecord], granularity: Granularity, stage: &str) -> Result<TimeSeries, CliError> {
    let points: Vec<(NaiveDate, f64)> = scores.iter().map(|s| (s.date, s.gbv)).collect();
    timeseries::aggregate(&points, granularity).map_err(|e| series_err(stage, e))
}

fn series_csv(series: &TimeSeries, stage: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    series.write_csv(&mut buf).map_err(|e| series_err(stage, e))?;
    Ok(buf)
}

pub(crate) fn series(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let scores = state.scores(ctx)?;
    let daily = score_series(scores, Granularity::Daily, "series")?;
    let monthly = score_series(scores, Granularity::Monthly, "series")?;
    out.add("series/daily.csv", series_csv(&daily, "series")?);
    out.add("series/monthly.csv", series_csv(&monthly, "series")?);

    let cfg = &ctx.cfg.series;
    let chosen = if cfg.granularity == Granularity::Daily { &daily } else { &monthly };
    let d = timeseries::decompose_ma(chosen, cfg.period).map_err(|e| series_err("series", e))?;
    out.add("series/decomposition.csv", emit::decomposition_csv(&d).map_err(|e| emit_err("series", e))?);
    out.add("series/decomposition.svg", emit::decomposition_svg(&d, "Mean score decomposition"));
    let ratio = timeseries::trend_ratio(&d, cfg.trend_ratio_lag);
    out.add("series/trend_ratio.json", json(&serde_json::json!({ "lag": cfg.trend_ratio_lag, "ratio": ratio })));
    Ok(())
}

pub(crate) fn anomalies(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let cfg = &ctx.cfg.anomalies;
    let mut fit_cfg = cfg.fit.clone();
    if let Some(p) = &ctx.cfg.paths.holidays {
        fit_cfg.holidays = HolidaySet::read_json(p).map_err(|e| series_err("anomalies", e))?;
    }
    let titles: BTreeMap<String, String> = state.corpus(ctx)?.iter().map(|d| (d.id.clone(), d.title.clone())).collect();
    let scores = state.scores(ctx)?;
    let series = score_series(scores, cfg.granularity, "anomalies")?;
    let model = timeseries::fit_structural(&series, &fit_cfg).map_err(|e| series_err("anomalies", e))?;
    let report = timeseries::detect_anomalies(&series, &model);

    let mut best: BTreeMap<NaiveDate, (f64, &str)> = BTreeMap::new();
    for s in scores {
        let bucket = cfg.granularity.bucket(s.date);
        let e = best.entry(bucket).or_insert((f64::NEG_INFINITY, ""));
        if s.gbv > e.0 {
            *e = (s.gbv, s.doc_id.as_str());
        }
    }
    let headlines: BTreeMap<NaiveDate, String> = best
        .into_iter()
        .map(|(date, (_, id))| (date, titles.get(id).cloned().unwrap_or_default()))
        .collect();

    let mut csv = Vec::new();
    timeseries::write_anomaly_csv(&report, &mut csv).map_err(|e| series_err("anomalies", e))?;
    out.add("anomalies/anomalies.csv", csv);
    out.add("anomalies/table.csv", emit::anomaly_table_csv(&report, &headlines).map_err(|e| emit_err("anomalies", e))?);
    out.add("anomalies/fit.svg", emit::anomaly_chart_svg(&report, "Mean score and 99% interval"));
    out.add("anomalies/model.json", json(&model));
    Ok(())
}

fn read_survey(path: &Path, granularity: Granularity) -> Result<TimeSeries, CliError> {
    let raw = TimeSeries::read_csv(path, Granularity::Daily).map_err(|e| series_err("ccf", e))?;
    timeseries::aggregate(raw.points(), granularity).map_err(|e| series_err("ccf", e))
}

pub(crate) fn ccf(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let cfg = &ctx.cfg.ccf;
    let survey_path = ctx.cfg.require("survey", &ctx.cfg.paths.survey)?;
    let survey = read_survey(&survey_path, cfg.granularity)?;
    let scores = score_series(state.scores(ctx)?, cfg.granularity, "ccf")?;
    let result = timeseries::ccf(&scores, &survey, cfg.max_lag).map_err(|e| series_err("ccf", e))?;
    out.add("ccf/ccf.csv", emit::ccf_csv(&result).map_err(|e| emit_err("ccf", e))?);
    out.add("ccf/ccf.svg", emit::ccf_chart_svg(&result, "Score vs survey cross-correlation"));
    out.add(
        "ccf/summary.json",
        json(&serde_json::json!({
            "max_lag": cfg.max_lag,
            "peak_lag": result.peak_lag,
            "peak_correlation": result.peak_correlation(),
        })),
    );
    Ok(())
}

pub(crate) fn mapper(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let cfg = &ctx.cfg.mapper;
    let tagger = State::model(&mut state.tagger, ctx, "models/tagger.json", "train-tags")?;
    let vectors = state.vectors(ctx)?;
    let scores = state.scores(ctx)?;
    let gbv: BTreeMap<String, f64> = scores.iter().map(|s| (s.doc_id.clone(), s.gbv)).collect();
    let keep: BTreeSet<String> = match cfg.subset {
        Subset::All => gbv.keys().cloned().collect(),
        Subset::Gbv => tda::select_above(&gbv, ctx.cfg.gbv.select_threshold).into_iter().collect(),
        Subset::Year(y) => scores.iter().filter(|s| s.date.year() == y).map(|s| s.doc_id.clone()).collect(),
    };
    let mut docs: Vec<(String, Vec<u32>)> = vectors.into_iter().filter(|(id, _)| keep.contains(id)).collect();
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    if docs.is_empty() {
        return Err(data("mapper", format!("subset {:?} selects no documents", cfg.subset)));
    }
    let cloud = tda::tag_probability_cloud(&tagger, &docs, &gbv).map_err(|e| tda_err("mapper", e))?;
    let pca = tda::pca_fit(&cloud.coords, cfg.pca_dim).map_err(|e| tda_err("mapper", e))?;
    let reduced = tda::pca_transform(&pca, &cloud.coords).map_err(|e| tda_err("mapper", e))?;
    let cloud = cloud.with_coords(reduced).map_err(|e| tda_err("mapper", e))?;
    let graph = tda::mapper(&cloud, Lens::Coordinate(cfg.lens), &cfg.cover, cfg.cluster_eps).map_err(|e| tda_err("mapper", e))?;
    let graph = tda::decorate(&graph);
    out.add("mapper/pca.json", json(&pca));
    out.add("mapper/graph.json", graph.to_json());
    out.add("mapper/graph.dot", emit::mapper_dot(&graph));
    out.add(
        "mapper/summary.json",
        json(&serde_json::json!({
            "points": cloud.len(),
            "nodes": graph.nodes.len(),
            "edges": graph.edges.len(),
            "components": graph.components(),
            "first_betti": graph.first_betti(),
        })),
    );
    Ok(())
}

pub(crate) fn report(ctx: &Ctx, state: &mut State, out: &mut Artifacts) -> Result<(), CliError> {
    let cfg = &ctx.cfg.report;
    let scores = state.scores(ctx)?;
    let all = emit::tag_frequency(scores.iter().map(|s| &s.tags), cfg.top_tags).map_err(|e| emit_err("report", e))?;
    out.add("report/tags_all.csv", emit::tag_frequency_csv(&all).map_err(|e| emit_err("report", e))?);
    out.add("report/tags_all.svg", emit::tag_frequency_svg(&all, "Predicted tags, all documents"));
    let threshold = ctx.cfg.gbv.threshold;
    let high = scores.iter().filter(|s| s.gbv > threshold).map(|s| &s.tags);
    match emit::tag_frequency(high, cfg.top_tags) {
        Ok(gbv) => {
            out.add("report/tags_gbv.csv", emit::tag_frequency_csv(&gbv).map_err(|e| emit_err("report", e))?);
            out.add("report/tags_gbv.svg", emit::tag_frequency_svg(&gbv, "Predicted tags, high-score documents"));
        }
        // no document above the threshold: the table is empty, not an error
        Err(EmitError::EmptyInput) => {
            let empty = emit::TagFrequencyReport { documents: 0, rows: Vec::new() };
            out.add("report/tags_gbv.csv", emit::tag_frequency_csv(&empty).map_err(|e| emit_err("report", e))?);
        }
        Err(e) => return Err(emit_err("report", e)),
    }

    let daily = score_series(scores, Granularity::Daily, "report")?;
    let scale = match cfg.heatmap_scale {
        HeatmapScale::Global => emit::global_scale(&daily),
        HeatmapScale::PerYear => None,
    };
    let years: BTreeSet<i32> = daily.dates().map(|d| d.year()).collect();
    for year in years {
        let (map, svg) = emit::render_heatmap(&daily, year, scale).map_err(|e| emit_err("report", e))?;
        out.add(format!("report/heatmap_{year}.svg"), svg);
        out.add(format!("report/heatmap_{year}.json"), json(&map));
    }
    Ok(())
}
