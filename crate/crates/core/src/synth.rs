//! Seeded generator for a small Spanish-like news corpus.
//!
//! Two latent topics: gender-violence reporting and everything else
//! (economy or politics). Weekends carry more of the first topic, and two
//! weekdays get a burst of extra articles on it. The generator also emits a
//! survey series that follows the daily topic share three days later, and
//! renders each document as a small HTML page for the ingestion path.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::timeseries::{Granularity, HolidaySet, TimeSeries};

pub const GBV_TAG: &str = "violencia de género";

const GBV_WORDS: &[&str] = &[
    "violencia", "machista", "mujer", "víctima", "agresor", "maltrato", "denuncia", "asesinato", "pareja",
    "expareja", "feminicidio", "acoso", "alejamiento", "agresión", "igualdad", "amenazas", "lesiones",
    "detenido", "guardia", "protección", "juzgado", "crimen", "violador", "abusos",
];
const ECONOMY_WORDS: &[&str] = &[
    "economía", "mercado", "empresa", "inversión", "bolsa", "inflación", "empleo", "presupuesto", "banco",
    "crecimiento", "exportaciones", "beneficios", "impuestos", "salarios", "consumo", "industria", "deuda",
    "accionistas", "facturación", "precios",
];
const POLITICS_WORDS: &[&str] = &[
    "gobierno", "elecciones", "partido", "votación", "parlamento", "ministro", "candidato", "campaña",
    "oposición", "coalición", "senado", "diputados", "escaños", "encuesta", "alcalde", "congreso",
    "investidura", "mitin", "programa", "reforma",
];
const FILLER_WORDS: &[&str] = &[
    "ciudad", "ayer", "fuentes", "informó", "según", "martes", "semana", "vecinos", "calle", "madrid",
    "sevilla", "barcelona", "valencia", "mañana", "tarde", "explicó", "aseguró", "horas", "centro", "año",
    "declaraciones", "comunicado", "pasado", "jornada", "provincia",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub docs_per_day: usize,
    /// Day offsets that receive extra topic articles.
    pub spike_days: Vec<usize>,
    pub spike_docs: usize,
    pub survey_lag: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2019, 3, 4).expect("valid date"),
            days: 63,
            docs_per_day: 3,
            spike_days: vec![23, 45],
            spike_docs: 8,
            survey_lag: 3,
            seed: 2019,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub docs: Vec<Document>,
    /// Share of topic articles per day, as generated.
    pub topic_share: TimeSeries,
    pub survey: TimeSeries,
    pub holidays: Vec<HolidaySet>,
    pub spike_dates: Vec<NaiveDate>,
}

impl SynthCorpus {
    pub fn is_gbv(doc: &Document) -> bool {
        doc.tags.contains(GBV_TAG)
    }
}

fn sentence(rng: &mut ChaCha8Rng, topic: &[&str], other: &[&str], words: usize) -> String {
    let mut out: Vec<&str> = Vec::with_capacity(words);
    for _ in 0..words {
        let r: f64 = rng.random();
        let pool = if r < 0.45 {
            topic
        } else if r < 0.5 {
            other
        } else {
            FILLER_WORDS
        };
        out.push(pool.choose(rng).expect("non-empty pool"));
    }
    let mut s = out.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s + "."
}

fn document(rng: &mut ChaCha8Rng, date: NaiveDate, seq: usize, gbv: bool) -> Document {
    let politics = rng.random_bool(0.5);
    let (topic, other, mut tags): (&[&str], &[&str], BTreeSet<String>) = if gbv {
        let mut t = BTreeSet::from([GBV_TAG.to_string(), "sucesos".to_string()]);
        if rng.random_bool(0.5) {
            t.insert("justicia".into());
        }
        (GBV_WORDS, if politics { POLITICS_WORDS } else { ECONOMY_WORDS }, t)
    } else if politics {
        let mut t = BTreeSet::from(["política".to_string()]);
        if rng.random_bool(0.5) {
            t.insert("elecciones".into());
        }
        (POLITICS_WORDS, GBV_WORDS, t)
    } else {
        (ECONOMY_WORDS, POLITICS_WORDS, BTreeSet::from(["economía".to_string()]))
    };
    if rng.random_bool(0.2) {
        tags.insert("sociedad".into());
    }
    let paragraphs: Vec<String> = (0..3)
        .map(|_| {
            let n = rng.random_range(2..4);
            (0..n)
                .map(|_| {
                    let words = rng.random_range(7..12);
                    sentence(rng, topic, other, words)
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Document {
        id: format!("synth-{}-{:03}", date.format("%Y%m%d"), seq),
        source_id: ["diario-norte", "diario-sur", "la-gaceta"][seq % 3].to_string(),
        published_at: date,
        title: sentence(rng, topic, FILLER_WORDS, 6).trim_end_matches('.').to_string(),
        body: paragraphs.join("\n"),
        tags,
    }
}

pub fn synth_corpus(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut docs = Vec::new();
    let mut share = Vec::new();
    let mut spike_dates = Vec::new();
    for day in 0..cfg.days {
        let date = cfg.start + chrono::Days::new(day as u64);
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        // weekends: two topic articles out of three; weekdays: none or one
        let mut flags: Vec<bool> = (0..cfg.docs_per_day)
            .map(|i| if weekend { i < 2 } else { i == 0 && rng.random_bool(0.3) })
            .collect();
        if cfg.spike_days.contains(&day) {
            flags.extend(std::iter::repeat_n(true, cfg.spike_docs));
            spike_dates.push(date);
        }
        flags.shuffle(&mut rng);
        share.push((date, flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64));
        for (seq, gbv) in flags.into_iter().enumerate() {
            docs.push(document(&mut rng, date, seq, gbv));
        }
    }

    let survey_points = (cfg.survey_lag..cfg.days)
        .map(|i| {
            let noise: f64 = rng.random_range(-0.01..0.01);
            (share[i].0, 0.2 + 0.5 * share[i - cfg.survey_lag].1 + noise)
        })
        .collect();

    let end = cfg.start + chrono::Days::new(cfg.days as u64);
    let holidays = [("fiestas", [(4, 19), (5, 1), (12, 25)])]
        .iter()
        .map(|(name, days)| HolidaySet {
            name: name.to_string(),
            dates: (cfg.start.year()..=end.year())
                .flat_map(|y| days.iter().filter_map(move |&(m, d)| NaiveDate::from_ymd_opt(y, m, d)))
                .collect(),
        })
        .collect();

    SynthCorpus {
        docs,
        topic_share: TimeSeries::new(share, Granularity::Daily).expect("ordered days"),
        survey: TimeSeries::new(survey_points, Granularity::Daily).expect("ordered days"),
        holidays,
        spike_dates,
    }
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A news page with navigation, scripts and a footer around the article.
pub fn synth_html(doc: &Document) -> String {
    let tags: Vec<&str> = doc.tags.iter().map(String::as_str).collect();
    let paragraphs: String = doc.body.lines().map(|p| format!("      <p>{}</p>\n", escape_html(p))).collect();
    format!(
        r#"<!DOCTYPE html>
<html lang="es">
<head>
  <meta charset="utf-8">
  <title>{title}</title>
  <meta name="keywords" content="{keywords}">
  <meta property="article:published_time" content="{date}T08:00:00+01:00">
  <script>window.dataLayer = [];</script>
</head>
<body>
  <nav><p>Portada | Nacional | Economía | Sucesos</p></nav>
  <article>
    <h1>{title}</h1>
{paragraphs}  </article>
  <aside><p>Lo más leído</p></aside>
  <footer><p>Aviso legal. Política de cookies.</p></footer>
</body>
</html>
"#,
        title = escape_html(&doc.title),
        keywords = escape_html(&tags.join(", ")),
        date = doc.published_at,
    )
}

/// Holiday sets as the JSON map written to fixture files.
pub fn holidays_json(sets: &[HolidaySet]) -> String {
    let map: BTreeMap<&str, &BTreeSet<NaiveDate>> = sets.iter().map(|h| (h.name.as_str(), &h.dates)).collect();
    serde_json::to_string_pretty(&map).expect("holidays serialize") + "\n"
}
