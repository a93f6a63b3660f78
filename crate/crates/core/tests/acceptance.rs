//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are printed even when everything passes.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mediaseries::classify::{
    evaluate, gradient_check, gradient_check_sampled, predict_tags, train_until, ConvTextModel, Example, ModelSpec,
    TrainConfig,
};
use mediaseries::corpus::{build_vocabulary, default_stopwords, normalize_document, vectorize, NormalizedDoc};
use mediaseries::emit::{ramp_color, CalendarHeatmap};
use mediaseries::synth::{synth_corpus, SynthConfig, SynthCorpus};
use mediaseries::tda::{mapper, pca_fit, pca_transform, select_above, Cover, Lens, PointCloud, GBV_SELECT_THRESHOLD};
use mediaseries::timeseries::{
    ccf_values, decompose_values, detect_anomalies, fit_structural, read_anomaly_csv, Granularity, HolidaySet,
    Seasonality, StructuralConfig, TimeSeries,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

// Moving-average reference written from the definition, loop by loop.
fn reference_decomposition(x: &[f64], p: usize) -> (Vec<Option<f64>>, Vec<f64>) {
    let n = x.len();
    let mut trend = vec![None; n];
    for t in 0..n {
        if p % 2 == 1 {
            let h = p / 2;
            if t >= h && t + h < n {
                trend[t] = Some(x[t - h..=t + h].iter().sum::<f64>() / p as f64);
            }
        } else {
            let h = p / 2;
            if t >= h && t + h < n {
                let mut s = 0.5 * x[t - h] + 0.5 * x[t + h];
                for v in &x[t - h + 1..t + h] {
                    s += v;
                }
                trend[t] = Some(s / p as f64);
            }
        }
    }
    let mut sums = vec![0.0; p];
    let mut counts = vec![0usize; p];
    for t in 0..n {
        if let Some(tr) = trend[t] {
            sums[t % p] += x[t] - tr;
            counts[t % p] += 1;
        }
    }
    let raw: Vec<f64> = (0..p).map(|k| sums[k] / counts[k] as f64).collect();
    let mean = raw.iter().sum::<f64>() / p as f64;
    let seasonal = (0..n).map(|t| raw[t % p] - mean).collect();
    (trend, seasonal)
}

fn decomposition() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(519);
    let (mut worst_rec, mut worst_sum, mut worst_ref) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let p = rng.random_range(2..13);
        let n = p * rng.random_range(5..12) + rng.random_range(0..p);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let (t, s, e) = decompose_values(&x, p).map_err(|e| e.to_string())?;
        for i in 0..n {
            if let (Some(ti), Some(ei)) = (t[i], e[i]) {
                worst_rec = worst_rec.max((ti + s[i] + ei - x[i]).abs());
            }
        }
        for start in (0..=n - p).step_by(p) {
            worst_sum = worst_sum.max(s[start..start + p].iter().sum::<f64>().abs());
        }
        let (rt, rs) = reference_decomposition(&x, p);
        for i in 0..n {
            match (t[i], rt[i]) {
                (Some(a), Some(b)) => worst_ref = worst_ref.max((a - b).abs()),
                (None, None) => {}
                _ => return Err(format!("trend support differs at {i} for period {p}")),
            }
            worst_ref = worst_ref.max((s[i] - rs[i]).abs());
        }
    }
    check(worst_rec <= 1e-12, format!("reconstruction error {worst_rec:e}"))?;
    check(worst_sum <= 1e-9, format!("seasonal period sum {worst_sum:e}"))?;
    check(worst_ref <= 1e-9, format!("reference mismatch {worst_ref:e}"))?;

    let mut closed = 0.0f64;
    for p in [4usize, 7, 12] {
        let n = 6 * p;
        let ramp: Vec<f64> = (0..n).map(|t| 3.0 - 0.25 * t as f64).collect();
        let (t, s, e) = decompose_values(&ramp, p).map_err(|e| e.to_string())?;
        for i in 0..n {
            if let Some(ti) = t[i] {
                closed = closed.max((ti - ramp[i]).abs()).max(e[i].unwrap().abs());
            }
            closed = closed.max(s[i].abs());
        }
        let wave: Vec<f64> = (0..n).map(|t| 2.0 * (2.0 * PI * t as f64 / p as f64).sin()).collect();
        let (t, s, e) = decompose_values(&wave, p).map_err(|e| e.to_string())?;
        for i in 0..n {
            if let Some(ti) = t[i] {
                closed = closed.max(ti.abs()).max(e[i].unwrap().abs());
            }
            closed = closed.max((s[i] - wave[i]).abs());
        }
    }
    check(closed <= 1e-9, format!("closed-form error {closed:e}"))?;
    within(started.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "reconstruction {worst_rec:.1e}, period sum {worst_sum:.1e}, closed form {closed:.1e}, {:.2?}",
        started.elapsed()
    ))
}

fn gradients() -> Outcome {
    let started = Instant::now();
    let narrow_nn1 = ModelSpec { embed_dim: 6, channels: vec![8, 8], kernel_width: 5, pool_after: vec![] };
    let narrow_nn2 = ModelSpec { embed_dim: 6, channels: vec![5, 8, 8, 8], kernel_width: 5, pool_after: vec![1] };
    let mut worst = BTreeMap::new();
    for (name, spec, labels, full) in [
        ("nn1", narrow_nn1, 5, true),
        ("nn2", narrow_nn2, 1, true),
        ("nn1 default-width sampled, informational", ModelSpec::tagger(), 5, false),
        ("nn2 default-width sampled, informational", ModelSpec::scorer(), 1, false),
    ] {
        let mut w = 0.0f64;
        for instance in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(520 + instance);
            let seq = if full { 16 } else { 32 };
            let rows = 30;
            let names = (0..labels).map(|i| format!("l{i}")).collect();
            let mut model = ConvTextModel::new(&spec, rows, seq, names, 1000 + instance).map_err(|e| e.to_string())?;
            // non-zero biases so every bias gradient is exercised
            let mut params = model.parameters_mut();
            let tensors = params.len();
            for (ti, tensor) in params.iter_mut().enumerate() {
                if ti > 0 && (ti % 2 == 0 || ti == tensors - 1) {
                    tensor.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
                }
            }
            let used = rng.random_range(seq / 2..=seq);
            let ids: Vec<u32> =
                (0..seq).map(|i| if i < used { rng.random_range(1..rows as u32) } else { 0 }).collect();
            let targets: Vec<f64> = (0..labels).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
            let err = if full {
                gradient_check(&model, &ids, &targets)
            } else {
                gradient_check_sampled(&model, &ids, &targets, 300, instance)
            }
            .map_err(|e| e.to_string())?;
            w = w.max(err);
        }
        worst.insert(name, w);
    }
    // Default-width models are only probed on sampled coordinates. There a
    // ReLU or max-pool switch inside ±h can dominate, so they are reported
    // but do not decide the outcome.
    for (name, w) in worst.iter().filter(|(n, _)| !n.ends_with("informational")) {
        check(*w < 1e-4, format!("{name}: max relative error {w:e}"))?;
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    let summary: Vec<String> = worst.iter().map(|(n, w)| format!("{n} {w:.1e}")).collect();
    Ok(format!("{}, {:.2?}", summary.join(", "), started.elapsed()))
}

/// Acceptance-scale sequence length for the synthetic corpus.
const SEQUENCE_LENGTH: usize = 64;

fn convergence() -> Outcome {
    let started = Instant::now();
    let corpus = synth_corpus(&SynthConfig::default());
    let stop = default_stopwords();
    let normalized: Vec<NormalizedDoc> =
        corpus.docs.iter().map(|d| normalize_document(&d.id, &d.text(true), &stop)).collect();
    let vocab = build_vocabulary(&normalized, 2, 50_000, SEQUENCE_LENGTH).map_err(|e| e.to_string())?;
    let (mut train_set, mut held) = (Vec::new(), Vec::new());
    for (i, (doc, norm)) in corpus.docs.iter().zip(&normalized).enumerate() {
        let ex = Example { ids: vectorize(norm, &vocab), targets: vec![f64::from(u8::from(SynthCorpus::is_gbv(doc)))] };
        if i % 5 == 4 {
            held.push(ex);
        } else {
            train_set.push(ex);
        }
    }
    let cfg = TrainConfig { epochs: 200, ..TrainConfig::default() };
    let init = ConvTextModel::new(&ModelSpec::scorer(), vocab.embedding_rows(), SEQUENCE_LENGTH, vec!["gbv".into()], 521)
        .map_err(|e| e.to_string())?;
    let mut reached = None;
    let (model, history) = train_until(&init, &train_set, &cfg, |epoch, m, _| {
        let acc = evaluate(m, &train_set, 0.5).map(|e| e.subset_accuracy).unwrap_or(0.0);
        if acc >= 0.95 {
            reached = Some(epoch + 1);
        }
        reached.is_some()
    })
    .map_err(|e| e.to_string())?;
    let train_acc = evaluate(&model, &train_set, 0.5).map_err(|e| e.to_string())?.subset_accuracy;
    let held_acc = evaluate(&model, &held, 0.5).map_err(|e| e.to_string())?.subset_accuracy;
    let epochs = history.len();
    check(reached.is_some(), format!("training accuracy {train_acc:.3} after {epochs} epochs"))?;
    check(train_acc >= 0.95, format!("training accuracy {train_acc:.3}"))?;
    check(held_acc >= 0.90, format!("held-out accuracy {held_acc:.3}"))?;
    within(started.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "train {train_acc:.3}, held-out {held_acc:.3} after {epochs} epochs ({} train / {} held-out docs), {:.2?}",
        train_set.len(),
        held.len(),
        started.elapsed()
    ))
}

fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
}

fn structural() -> Outcome {
    let started = Instant::now();
    let n = 400usize;
    let span = (n - 1) as f64;
    let dates: Vec<NaiveDate> = (0..n as u64).map(|i| day0() + chrono::Days::new(i)).collect();
    let holidays = HolidaySet {
        name: "fiestas".into(),
        dates: [17u64, 108, 230, 351].iter().map(|&d| day0() + chrono::Days::new(d)).collect(),
    };
    let seasonalities = vec![Seasonality { period: 7.0, order: 3 }, Seasonality { period: 91.25, order: 2 }];
    let mut cfg = StructuralConfig {
        n_changepoints: 8,
        changepoint_range: 0.8,
        seasonalities: seasonalities.clone(),
        holidays: vec![holidays.clone()],
        ridge_lambda: 0.0,
    };

    // truth: level 0.3, slope 0.2 per span, slope change -0.5 at day 200
    let (level, slope, delta, cp_day) = (0.3, 0.2, -0.5, 200.0);
    let fourier = [(0.05, -0.02), (0.01, 0.03), (-0.015, 0.0), (0.04, 0.02), (-0.01, 0.005)];
    let holiday_effect = 0.12;
    let trend = |d: f64| level + slope * d / span + delta * ((d - cp_day) / span).max(0.0);
    let truth = |i: usize| {
        let d = i as f64;
        let mut v = trend(d);
        let mut k = 0;
        for s in &seasonalities {
            for h in 1..=s.order {
                let a = 2.0 * PI * h as f64 * d / s.period;
                v += fourier[k].0 * a.cos() + fourier[k].1 * a.sin();
                k += 1;
            }
        }
        if holidays.dates.contains(&dates[i]) {
            v += holiday_effect;
        }
        v
    };
    let clean: Vec<(NaiveDate, f64)> = (0..n).map(|i| (dates[i], truth(i))).collect();
    let model = fit_structural(&TimeSeries::new(clean, Granularity::Daily).unwrap(), &cfg).map_err(|e| e.to_string())?;

    let mut err = (model.base_level - level).abs().max((model.base_slope - slope).abs());
    let target_cp = day0() + chrono::Days::new(cp_day as u64);
    check(model.changepoints.iter().any(|(d, _)| *d == target_cp), "no changepoint on the planted day")?;
    for (d, v) in &model.changepoints {
        let want = if *d == target_cp { delta } else { 0.0 };
        err = err.max((v - want).abs());
    }
    let mut k = 0;
    for f in &model.fourier {
        for (c, s) in f.cos.iter().zip(&f.sin) {
            err = err.max((c - fourier[k].0).abs()).max((s - fourier[k].1).abs());
            k += 1;
        }
    }
    err = err.max((model.holiday_effects["fiestas"] - holiday_effect).abs());
    check(err <= 1e-6, format!("noiseless coefficient error {err:e}"))?;

    // noisy: default ridge
    cfg.ridge_lambda = StructuralConfig::default().ridge_lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(522);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let noisy: Vec<(NaiveDate, f64)> = (0..n).map(|i| (dates[i], truth(i) + noise.sample(&mut rng))).collect();
    let model = fit_structural(&TimeSeries::new(noisy, Granularity::Daily).unwrap(), &cfg).map_err(|e| e.to_string())?;
    let rmse =
        ((0..n).map(|i| (model.trend(dates[i]) - trend(i as f64)).powi(2)).sum::<f64>() / n as f64).sqrt();
    check(rmse <= 0.005, format!("noisy trend RMSE {rmse:e}"))?;
    within(started.elapsed(), Duration::from_secs(10))?;
    Ok(format!("coefficient error {err:.1e}, noisy trend RMSE {rmse:.1e}, {:.2?}", started.elapsed()))
}

fn calibration() -> Outcome {
    let started = Instant::now();
    let n = 5000usize;
    let sigma = 0.02;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut fractions = Vec::new();
    let mut spikes_flagged = 0;
    let seeds = 5u64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(523 + seed);
        let spike_at = rng.random_range(100..n - 100);
        let points: Vec<(NaiveDate, f64)> = (0..n)
            .map(|i| {
                let d = i as f64;
                let mut v = 0.2 + 0.00002 * d + 0.03 * (2.0 * PI * d / 7.0).sin() + 0.02 * (2.0 * PI * d / 365.25).cos()
                    + noise.sample(&mut rng);
                if i == spike_at {
                    v += 10.0 * sigma;
                }
                (day0() + chrono::Days::new(i as u64), v)
            })
            .collect();
        let series = TimeSeries::new(points, Granularity::Daily).unwrap();
        let model = fit_structural(&series, &StructuralConfig::default()).map_err(|e| e.to_string())?;
        let report = detect_anomalies(&series, &model);
        let spike_date = day0() + chrono::Days::new(spike_at as u64);
        let flagged: Vec<_> = report.anomalies().map(|r| r.date).collect();
        if flagged.contains(&spike_date) {
            spikes_flagged += 1;
        }
        // the planted spike is not part of the calibration count
        let background = flagged.iter().filter(|d| **d != spike_date).count();
        fractions.push(background as f64 / (n - 1) as f64);
    }
    for f in &fractions {
        check((f - 0.01).abs() <= 0.007, format!("flagged fraction {:.4}", f))?;
    }
    check(spikes_flagged == seeds, format!("+10σ spike flagged in {spikes_flagged}/{seeds} runs"))?;
    within(started.elapsed(), Duration::from_secs(10))?;
    let shown: Vec<String> = fractions.iter().map(|f| format!("{:.2}%", 100.0 * f)).collect();
    Ok(format!("flagged {}; spike flagged {spikes_flagged}/{seeds}, {:.2?}", shown.join(" "), started.elapsed()))
}

fn cross_correlation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(524);
    let n = 120;
    // y_{t+3} = x_t
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|t| if t >= 3 { x[t - 3] } else { rng.random_range(-1.0..1.0) }).collect();
    let r = ccf_values(&x, &y, 12).map_err(|e| e.to_string())?;
    check(r.peak_lag == 3, format!("peak lag {}", r.peak_lag))?;
    check(r.peak_correlation() >= 1.0 - 1e-9, format!("peak r {}", r.peak_correlation()))?;
    let auto = ccf_values(&x, &x, 12).map_err(|e| e.to_string())?;
    check(auto.peak_lag == 0, format!("autocorrelation peak at {}", auto.peak_lag))?;
    Ok(format!("peak lag {} with r = {:.12}, autocorrelation peak {}", r.peak_lag, r.peak_correlation(), auto.peak_lag))
}

fn cloud_of(points: Vec<Vec<f64>>) -> PointCloud {
    let ids: Vec<String> = (0..points.len()).map(|i| format!("p{i:04}")).collect();
    let extra = ids.iter().map(|id| (id.clone(), 0.0)).collect();
    PointCloud::new(ids, points, extra).unwrap()
}

fn mapper_topology() -> Outcome {
    let cover = Cover::default();
    let circle: Vec<Vec<f64>> = (0..240)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / 240.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let g = mapper(&cloud_of(circle), Lens::Coordinate(0), &cover, Some(0.2)).map_err(|e| e.to_string())?;
    check(g.first_betti() == 1 && g.components() == 1, format!("circle: betti {} components {}", g.first_betti(), g.components()))?;
    let circle_summary = format!("circle {} nodes / {} edges / betti {}", g.nodes.len(), g.edges.len(), g.first_betti());

    let mut rng = ChaCha8Rng::seed_from_u64(525);
    let normal = Normal::new(0.0, 0.5).unwrap();
    let blobs: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let cx = if i < 150 { 0.0 } else { 10.0 };
            vec![cx + normal.sample(&mut rng), normal.sample(&mut rng)]
        })
        .collect();
    let cloud = cloud_of(blobs);
    let g = mapper(&cloud, Lens::Coordinate(0), &cover, None).map_err(|e| e.to_string())?;
    let side = |id: &String| id[1..].parse::<usize>().unwrap() < 150;
    let node_side: Vec<BTreeSet<bool>> = g.nodes.iter().map(|n| n.members.iter().map(side).collect()).collect();
    check(node_side.iter().all(|s| s.len() == 1), "a node mixes both blobs")?;
    let cross = g.edges.iter().filter(|e| node_side[e.source] != node_side[e.target]).count();
    check(g.components() >= 2 && cross == 0, format!("blobs: {} components, {cross} cross edges", g.components()))?;
    let blob_summary = format!("blobs {} components / {cross} cross edges", g.components());

    // brute-force invariants on random clouds
    let mut checked = 0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let n = [50, 120, 200, 320, 450, 500][seed as usize];
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cloud = cloud_of(pts);
        let cover = Cover { n_intervals: 3 + seed as usize, overlap: 0.2 + 0.05 * seed as f64 };
        let g = mapper(&cloud, Lens::Coordinate(0), &cover, None).map_err(|e| e.to_string())?;
        let lens: Vec<f64> = cloud.coords.iter().map(|r| r[0]).collect();
        let (lo, hi) = lens.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let intervals = cover.intervals(lo, hi);
        for (i, id) in cloud.ids.iter().enumerate() {
            for (k, (a, b)) in intervals.iter().enumerate() {
                let inside = lens[i] >= *a && lens[i] <= *b;
                let holders = g.nodes.iter().filter(|nd| nd.interval == k && nd.members.contains(id)).count();
                check(holders == usize::from(inside), format!("point {id} in {holders} nodes of interval {k}"))?;
            }
        }
        let edges: BTreeMap<(usize, usize), usize> = g.edges.iter().map(|e| ((e.source, e.target), e.shared)).collect();
        for a in 0..g.nodes.len() {
            for b in a + 1..g.nodes.len() {
                let ma: BTreeSet<_> = g.nodes[a].members.iter().collect();
                let shared = g.nodes[b].members.iter().filter(|m| ma.contains(m)).count();
                let got = edges.get(&(a, b)).or_else(|| edges.get(&(b, a))).copied().unwrap_or(0);
                check(got == shared, format!("nodes {a},{b}: edge weight {got}, shared {shared}"))?;
            }
        }
        checked += n;
    }
    Ok(format!("{circle_summary}; {blob_summary}; invariants on {checked} points"))
}

fn pca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(526);
    let mut ortho = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(10..80);
        let d = rng.random_range(2..8);
        let data: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let m = pca_fit(&data, d).map_err(|e| e.to_string())?;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                ortho = ortho.max((dot - f64::from(u8::from(i == j))).abs());
            }
        }
    }
    check(ortho <= 1e-9, format!("orthonormality error {ortho:e}"))?;

    let u = [0.3, -0.2, 0.7, 0.1, 0.5];
    let v = [-0.4, 0.6, 0.1, 0.35, -0.2];
    let origin = [1.0, -2.0, 0.5, 3.0, 0.0];
    let plane: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            (0..5).map(|k| origin[k] + a * u[k] + b * v[k]).collect()
        })
        .collect();
    let m = pca_fit(&plane, 2).map_err(|e| e.to_string())?;
    let back = m.inverse(&pca_transform(&m, &plane).map_err(|e| e.to_string())?);
    let rec = plane
        .iter()
        .zip(&back)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    check(rec <= 1e-9, format!("plane reconstruction error {rec:e}"))?;
    Ok(format!("orthonormality {ortho:.1e}, plane reconstruction {rec:.1e}"))
}

fn run_all(out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_mediaseries"))
        .arg("--config")
        .arg(common::fixtures_dir().join("config.json"))
        .arg(format!("--paths.output_dir={}", out.display()))
        .arg("all")
        .env_remove("MEDIASERIES_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    check(o.status.success(), format!("all failed: {}", String::from_utf8_lossy(&o.stderr)))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_all(&a)?;
    run_all(&b)?;
    let (ta, tb) = (common::read_tree(&a), common::read_tree(&b));
    check(!ta.is_empty() && ta == tb, "output trees differ between runs")?;

    let spikes: BTreeSet<NaiveDate> = synth_corpus(&SynthConfig::default()).spike_dates.into_iter().collect();
    let report = read_anomaly_csv(&ta[Path::new("anomalies/anomalies.csv")][..]).map_err(|e| e.to_string())?;
    let flagged: BTreeSet<NaiveDate> = report.anomalies().map(|r| r.date).collect();
    check(spikes.is_subset(&flagged), format!("flagged {flagged:?}, spikes {spikes:?}"))?;

    let map: CalendarHeatmap =
        serde_json::from_slice(&ta[Path::new("report/heatmap_2019.json")]).map_err(|e| e.to_string())?;
    let svg = String::from_utf8_lossy(&ta[Path::new("report/heatmap_2019.svg")]).into_owned();
    let coolest_spike = spikes.iter().map(|d| map.scale.position(map.cells[d])).fold(f64::INFINITY, f64::min);
    for (date, value) in &map.cells {
        let fill = format!(r#"fill="{}" data-date="{date}""#, ramp_color(map.scale.position(*value)));
        check(svg.contains(&fill), format!("heatmap cell {date} not drawn as {fill}"))?;
        if !spikes.contains(date) {
            check(map.scale.position(*value) < coolest_spike, format!("{date} is as warm as a spike day"))?;
        }
    }
    Ok(format!("{} files identical across runs; spike days {:?} flagged and warmest", ta.len(), spikes))
}

fn thresholds() -> Outcome {
    let spec = ModelSpec { embed_dim: 2, channels: vec![2], kernel_width: 1, pool_after: vec![] };
    let mut m = ConvTextModel::new(&spec, 4, 3, vec!["a".into(), "b".into()], 1).unwrap();
    m.zero_parameters();
    let ids = [2, 3, 0];
    check(m.forward(&ids).unwrap() == vec![0.5, 0.5], "zero model is not exactly 0.5")?;
    check(predict_tags(&m, &ids, 0.5).unwrap().is_empty(), "p = 0.5 selected a tag")?;
    {
        let mut params = m.parameters_mut();
        let bias = params.last_mut().unwrap();
        bias[1] = 1e-12;
    }
    let tags = predict_tags(&m, &ids, 0.5).unwrap();
    check(tags == BTreeSet::from(["b".to_string()]), format!("just above 0.5 selected {tags:?}"))?;

    let at = GBV_SELECT_THRESHOLD;
    let above = f64::from_bits(at.to_bits() + 1);
    let below = f64::from_bits(at.to_bits() - 1);
    let scores: BTreeMap<String, f64> =
        [("at", at), ("above", above), ("below", below), ("one", 1.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let picked = select_above(&scores, GBV_SELECT_THRESHOLD);
    check(picked == vec!["above".to_string(), "one".to_string()], format!("selected {picked:?}"))?;
    Ok("p = 0.5 and p = 0.9999 excluded, next representable values included".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("decomposition oracle", decomposition),
        ("gradient check", gradients),
        ("classifier convergence", convergence),
        ("structural-fit recovery", structural),
        ("anomaly calibration", calibration),
        ("ccf lag recovery", cross_correlation),
        ("mapper topology", mapper_topology),
        ("pca", pca),
        ("end-to-end determinism", end_to_end),
        ("threshold semantics", thresholds),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
