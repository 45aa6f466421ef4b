use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    build_chart, nearest_grid_cell, nearest_masked_cell, segment_windows, ChartArtifact, CityInventory, DistanceMetric,
    GeoError, GriddedProduct, WindowSpec, DEFAULT_DELTA_DAYS, DEFAULT_RHO,
};
use crate::canon::{format_timestamp, CanonicalSeries, Provenance, UnitTable};
use crate::clock::Clock;
use crate::llm::{ChatMessage, ChatRequest, LlmBackend, Purpose};
use crate::stats::{mean, population_std};
use crate::textforge::{
    parse_generated, validate_item, DatasetRecord, DropCounters, EvidenceRef, EvidenceStore, GenerationContext, QAItem,
    QaFormat, Split, VisualCategory, OPEN_ANSWER_BUDGET,
};

/// Injected anomaly magnitude in standard deviations.
pub const SPIKE_SIGMAS: f64 = 5.0;
/// Masked share of a window for imputation items.
pub const IMPUTATION_SPAN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualConfig {
    pub cities: Vec<String>,
    pub variables: Vec<String>,
    pub delta_days: i64,
    pub rho: f64,
    pub metric: DistanceMetric,
    pub categories: Vec<VisualCategory>,
    pub formats: Vec<QaFormat>,
    pub spike_sigmas: f64,
    pub mask_fraction: f64,
    pub open_budget: usize,
    pub seed: u64,
}

impl Default for VisualConfig {
    fn default() -> Self {
        Self {
            cities: Vec::new(),
            variables: Vec::new(),
            delta_days: DEFAULT_DELTA_DAYS,
            rho: DEFAULT_RHO,
            metric: DistanceMetric::Spherical,
            categories: VisualCategory::ALL.to_vec(),
            formats: QaFormat::ALL.to_vec(),
            spike_sigmas: SPIKE_SIGMAS,
            mask_fraction: IMPUTATION_SPAN,
            open_budget: OPEN_ANSWER_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualForgeOutput {
    /// Window charts followed by their perturbed variants.
    pub charts: Vec<ChartArtifact>,
    pub records: Vec<DatasetRecord>,
    pub drops: DropCounters,
    pub windows_kept: usize,
}

/// Items and the derived charts they are grounded in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartItems {
    pub items: Vec<QAItem>,
    pub derived: Vec<ChartArtifact>,
    pub drops: DropCounters,
}

fn chart_rng(seed: u64, chart_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(chart_id.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

fn window_of(artifact: &ChartArtifact) -> WindowSpec {
    let m = &artifact.metadata;
    WindowSpec {
        index: 0,
        delta_days: (m.end - m.start).num_days(),
        start: m.start,
        end: m.end,
        observed: 0,
        expected: 0,
        completeness: 1.0,
        rho: 1.0,
    }
}

/// Re-renders `series` under the window of `base`, with `suffix` appended to the id.
fn derived_chart(base: &ChartArtifact, series: CanonicalSeries, suffix: &str) -> Result<ChartArtifact, GeoError> {
    let mut out = build_chart(&series, &window_of(base), &base.metadata.city, &base.metadata.variable)?;
    out.metadata.id = format!("{}_{suffix}", base.metadata.id);
    out.provenance = base.provenance.clone();
    Ok(out)
}

fn item(
    id: String,
    format: QaFormat,
    question: String,
    answer: String,
    options: Vec<String>,
    chart: &str,
    cat: VisualCategory,
) -> QAItem {
    QAItem {
        id,
        format,
        question,
        answer,
        options,
        evidence: vec![EvidenceRef::Chart(chart.to_string())],
        split: Split::Visual,
        category: Some(cat),
        gold_value: None,
        tolerance: None,
        review_flag: false,
    }
}

fn day_of(artifact: &ChartArtifact, k: usize) -> usize {
    (artifact.data.records()[k].timestamp - artifact.metadata.start).num_days() as usize + 1
}

fn spread(values: &[f64]) -> f64 {
    let m = mean(values).unwrap_or(0.0);
    let s = population_std(values, m);
    if s > 0.0 {
        s
    } else {
        (m.abs() * 0.1).max(1.0)
    }
}

/// Adds `sigmas` standard deviations to the observed value on `day`
/// (1-based from the window start) and asks where the anomaly is.
pub fn anomaly_items(
    artifact: &ChartArtifact,
    day: usize,
    sigmas: f64,
    formats: &[QaFormat],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<QAItem>, ChartArtifact), GeoError> {
    let recs = artifact.data.records();
    let target =
        (0..recs.len()).find(|&k| day_of(artifact, k) == day && recs[k].value.is_some()).ok_or(GeoError::EmptySlice)?;
    let observed: Vec<f64> = artifact.data.observed().map(|(_, v)| v).collect();
    let sigma = spread(&observed);
    let mut records = recs.to_vec();
    records[target].value = records[target].value.map(|v| v + sigmas * sigma);
    let series = CanonicalSeries::new(records, UnitTable::builtin())?;
    let chart = derived_chart(artifact, series, "anomaly")?;
    let kind = if sigmas >= 0.0 { "spike" } else { "drop" };

    let mut other_days: Vec<usize> =
        (0..recs.len()).filter(|&k| k != target && recs[k].value.is_some()).map(|k| day_of(artifact, k)).collect();
    other_days.dedup();
    other_days.shuffle(rng);
    let distractors: Vec<usize> = other_days.into_iter().take(3).collect();
    let m = &artifact.metadata;
    let stem = format!(
        "The {} chart for {} starting {} contains one abnormal {kind}",
        m.variable,
        m.city,
        m.start.format("%Y-%m-%d")
    );
    let id = |f: QaFormat, n: usize| format!("vqa:anomaly:{}:{}-{n}", chart.metadata.id, f.as_str());
    let mut items = Vec::new();
    for &format in formats {
        match format {
            QaFormat::Mcq if distractors.len() == 3 => {
                let mut options: Vec<String> = distractors.iter().map(|d| format!("day {d}")).collect();
                options.push(format!("day {day}"));
                options.shuffle(rng);
                let mut it = item(
                    id(format, 0),
                    format,
                    format!("{stem}. On which day does it occur?"),
                    format!("day {day}"),
                    options,
                    &chart.metadata.id,
                    VisualCategory::Anomaly,
                );
                it.gold_value = Some(day as f64);
                items.push(it);
            }
            QaFormat::Mcq => {}
            QaFormat::Open => {
                let mut it = item(
                    id(format, 0),
                    format,
                    format!("{stem}. On which day does it occur, and is it a spike or a drop?"),
                    format!("day {day}, {kind}"),
                    Vec::new(),
                    &chart.metadata.id,
                    VisualCategory::Anomaly,
                );
                it.gold_value = Some(day as f64);
                items.push(it);
            }
            QaFormat::Tf => {
                let Some(wrong) = distractors.first() else { continue };
                items.push(item(
                    id(format, 0),
                    format,
                    format!("{stem} on day {day}."),
                    "true".into(),
                    Vec::new(),
                    &chart.metadata.id,
                    VisualCategory::Anomaly,
                ));
                items.push(item(
                    id(format, 1),
                    format,
                    format!("{stem} on day {wrong}."),
                    "false".into(),
                    Vec::new(),
                    &chart.metadata.id,
                    VisualCategory::Anomaly,
                ));
            }
        }
    }
    Ok((items, chart))
}

/// Masks `len` records from index `start` and asks for their mean. The
/// tolerance is the population std of the observed values around the span.
pub fn imputation_items(
    artifact: &ChartArtifact,
    start: usize,
    len: usize,
    formats: &[QaFormat],
) -> Result<(Vec<QAItem>, ChartArtifact), GeoError> {
    let recs = artifact.data.records();
    if len == 0 || start + len > recs.len() {
        return Err(GeoError::SliceOutsideWindow);
    }
    let hidden: Vec<f64> = recs[start..start + len].iter().filter_map(|r| r.value).collect();
    let gold = mean(&hidden).ok_or(GeoError::EmptySlice)?;
    let lo = start.saturating_sub(len);
    let hi = (start + 2 * len).min(recs.len());
    let local: Vec<f64> = recs[lo..hi].iter().filter_map(|r| r.value).collect();
    let tolerance = population_std(&local, mean(&local).unwrap_or(gold)).max(1e-6 * gold.abs().max(1.0));
    let mut records = recs.to_vec();
    for r in &mut records[start..start + len] {
        r.value = None;
    }
    let series = CanonicalSeries::new(records, UnitTable::builtin())?;
    let chart = derived_chart(artifact, series, "imputation")?;
    let m = &artifact.metadata;
    let (from, to) = (day_of(artifact, start), day_of(artifact, start + len - 1));
    let stem = format!(
        "Days {from} to {to} are hidden in the {} chart for {} starting {}",
        m.variable,
        m.city,
        m.start.format("%Y-%m-%d")
    );
    let step = tolerance.max(gold.abs() * 0.05).max(0.1);
    let fmt = |v: f64| format!("{v:.2} {}", m.unit);
    let id = |f: QaFormat, n: usize| format!("vqa:imputation:{}:{}-{n}", chart.metadata.id, f.as_str());
    let mut items = Vec::new();
    for &format in formats {
        let mut push = |mut it: QAItem, numeric: bool| {
            if numeric {
                it.gold_value = Some(gold);
                it.tolerance = Some(tolerance);
            }
            items.push(it);
        };
        let q = format!("{stem}. What is the mean of the hidden values?");
        match format {
            QaFormat::Mcq => {
                let mut options =
                    vec![fmt(gold - 3.0 * step), fmt(gold), fmt(gold + 2.0 * step), fmt(gold + 4.0 * step)];
                options.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
                push(
                    item(id(format, 0), format, q, fmt(gold), options, &chart.metadata.id, VisualCategory::Imputation),
                    true,
                );
            }
            QaFormat::Open => push(
                item(id(format, 0), format, q, fmt(gold), Vec::new(), &chart.metadata.id, VisualCategory::Imputation),
                true,
            ),
            QaFormat::Tf => {
                let s = |v: f64| format!("{stem}; their mean is about {}.", fmt(v));
                push(
                    item(
                        id(format, 0),
                        format,
                        s(gold),
                        "true".into(),
                        Vec::new(),
                        &chart.metadata.id,
                        VisualCategory::Imputation,
                    ),
                    false,
                );
                push(
                    item(
                        id(format, 1),
                        format,
                        s(gold + 3.0 * step),
                        "false".into(),
                        Vec::new(),
                        &chart.metadata.id,
                        VisualCategory::Imputation,
                    ),
                    false,
                );
            }
        }
    }
    Ok((items, chart))
}

fn visual_prompt(artifact: &ChartArtifact, category: VisualCategory, format: QaFormat) -> String {
    let m = &artifact.metadata;
    let task = match category {
        VisualCategory::Forecasting => "about how the series is likely to continue after the window",
        _ => "that require reasoning over the trend, extremes and variability shown",
    };
    let shape = match format {
        QaFormat::Mcq => r#"[{"question": "...", "options": ["...", "...", "..."], "answer": "<one of the options>"}]"#,
        QaFormat::Open => r#"[{"question": "...", "answer": "..."}]"#,
        QaFormat::Tf => r#"[{"entailed": "...", "contradicted": "..."}]"#,
    };
    format!(
        "Chart {id}: {var} ({unit}) for {city}, {start} to {end}. count={n} min={min} max={max} mean={mean} std={std} slope_per_day={slope}.\nWrite {fmt} questions {task}. Reply with JSON only, shaped as {shape}.",
        id = m.id,
        var = m.variable,
        unit = m.unit,
        city = m.city,
        start = format_timestamp(&m.start),
        end = format_timestamp(&m.end),
        n = m.stats.count,
        min = m.stats.min,
        max = m.stats.max,
        mean = m.stats.mean,
        std = m.stats.std,
        slope = m.slope_per_day,
        fmt = format.as_str(),
    )
}

/// All requested categories and formats for one chart. Anomaly and
/// imputation are deterministic given the seed; forecasting and reasoning
/// go through the backend (key `<category>:<chart id>:<format>`).
pub fn visual_items_for_chart(
    artifact: &ChartArtifact,
    cfg: &VisualConfig,
    backend: &dyn LlmBackend,
) -> Result<ChartItems, GeoError> {
    let mut rng = chart_rng(cfg.seed, &artifact.metadata.id);
    let mut out = ChartItems::default();
    let recs = artifact.data.records();
    let keep = |items: Vec<QAItem>, out: &mut ChartItems| {
        for it in items {
            match validate_item(&it, cfg.open_budget) {
                Ok(()) => out.items.push(it),
                Err(d) => out.drops.bump(d),
            }
        }
    };
    for &category in &cfg.categories {
        match category {
            VisualCategory::Anomaly => {
                let candidates: Vec<usize> = (0..recs.len()).filter(|&k| recs[k].value.is_some()).collect();
                let Some(&k) = candidates.choose(&mut rng) else { continue };
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let (items, chart) =
                    anomaly_items(artifact, day_of(artifact, k), sign * cfg.spike_sigmas, &cfg.formats, &mut rng)?;
                keep(items, &mut out);
                out.derived.push(chart);
            }
            VisualCategory::Imputation => {
                let len = ((recs.len() as f64 * cfg.mask_fraction).round() as usize).clamp(1, recs.len());
                let starts: Vec<usize> =
                    (0..=recs.len() - len).filter(|&s| recs[s..s + len].iter().any(|r| r.value.is_some())).collect();
                let Some(&s) = starts.choose(&mut rng) else { continue };
                let (items, chart) = imputation_items(artifact, s, len, &cfg.formats)?;
                keep(items, &mut out);
                out.derived.push(chart);
            }
            VisualCategory::Forecasting | VisualCategory::Reasoning => {
                for &format in &cfg.formats {
                    let key = format!("{}:{}:{}", category.as_str(), artifact.metadata.id, format.as_str());
                    let req = ChatRequest::new(
                        Purpose::VisualQa,
                        key.clone(),
                        0,
                        vec![ChatMessage::user(visual_prompt(artifact, category, format))],
                    );
                    let raw = backend.complete(&req)?;
                    let ctx = GenerationContext {
                        id_prefix: &format!("vqa:{key}"),
                        format,
                        evidence: vec![EvidenceRef::Chart(artifact.metadata.id.clone())],
                        split: Split::Visual,
                        category: Some(category),
                        open_budget: cfg.open_budget,
                    };
                    out.items.extend(parse_generated(&raw, &ctx, &mut out.drops));
                }
            }
        }
    }
    Ok(out)
}

/// City lookup, grid cell, series, windows, charts and items for every
/// configured (city, variable). Charts are processed in parallel; output
/// order follows the configuration.
pub fn forge_visual(
    product: &GriddedProduct,
    inventory: &CityInventory,
    cfg: &VisualConfig,
    backend: &dyn LlmBackend,
    clock: &dyn Clock,
) -> Result<VisualForgeOutput, GeoError> {
    let units = UnitTable::builtin();
    let mut charts = Vec::new();
    for city in &cfg.cities {
        let found = inventory.lookup(city)?;
        let cell = match &product.mask {
            Some(_) => {
                nearest_masked_cell(found.city.point, &product.grid, cfg.metric, |i, j| product.is_usable((i, j)))
                    .ok_or_else(|| GeoError::UnknownRegion(format!("{city}: no usable grid cell")))?
            }
            None => nearest_grid_cell(found.city.point, &product.grid, cfg.metric),
        };
        for variable in &cfg.variables {
            let series = product.extract_series(cell, variable, Some(&found.city.name), units)?;
            if series.is_empty() {
                continue;
            }
            let provenance = Provenance::new(
                None,
                Some(format!("{} {} at grid cell ({}, {})", product.source, variable, cell.0, cell.1)),
                format!("{}|{variable}", found.city.name),
                clock.now(),
            )?;
            for w in segment_windows(&series, cfg.delta_days, cfg.rho) {
                let slice = series.slice(w.start, w.end);
                let chart = build_chart(&slice, &w, &found.city.name, variable)?.with_provenance(provenance.clone());
                charts.push(chart);
            }
        }
    }
    let windows_kept = charts.len();
    let per_chart: Vec<ChartItems> =
        charts.par_iter().map(|c| visual_items_for_chart(c, cfg, backend)).collect::<Result<_, _>>()?;

    let mut store = EvidenceStore::default();
    let mut drops = DropCounters::default();
    let mut derived = Vec::new();
    let mut items = Vec::new();
    for (chart, ci) in charts.iter().zip(per_chart) {
        if let Some(p) = &chart.provenance {
            store.add_chart(&chart.metadata.id, p.clone());
        }
        for d in &ci.derived {
            if let Some(p) = &d.provenance {
                store.add_chart(&d.metadata.id, p.clone());
            }
        }
        drops.merge(&ci.drops);
        derived.extend(ci.derived);
        items.extend(ci.items);
    }
    let mut records = Vec::new();
    for item in items {
        match store.resolve(&item) {
            Ok(provenance) => records.push(DatasetRecord { item, provenance }),
            Err(d) => drops.bump(d),
        }
    }
    charts.extend(derived);
    Ok(VisualForgeOutput { charts, records, drops, windows_kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{CanonicalRecord, GeoPoint};
    use crate::llm::ScriptedBackend;
    use chrono::{Duration, TimeZone, Utc};

    fn chart(values: &[Option<f64>]) -> ChartArtifact {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let recs = values
            .iter()
            .enumerate()
            .map(|(d, v)| CanonicalRecord {
                timestamp: t0 + Duration::days(d as i64),
                variable: "temperature".into(),
                value: *v,
                unit: "°C".into(),
                location: GeoPoint::new(25.25, 51.5).unwrap(),
                city: Some("Doha".into()),
                source: "fixture".into(),
            })
            .collect();
        let series = CanonicalSeries::new(recs, UnitTable::builtin()).unwrap();
        let w = WindowSpec {
            index: 0,
            delta_days: values.len() as i64,
            start: t0,
            end: t0 + Duration::days(values.len() as i64),
            observed: values.len(),
            expected: values.len(),
            completeness: 1.0,
            rho: 0.8,
        };
        let p = Provenance::new(None, Some("fixture".into()), "Doha|temperature", t0).unwrap();
        build_chart(&series, &w, "Doha", "temperature").unwrap().with_provenance(p)
    }

    fn wavy() -> ChartArtifact {
        chart(&(0..90).map(|d| Some(30.0 + (d as f64 / 7.0).sin())).collect::<Vec<_>>())
    }

    #[test]
    fn injected_spike_is_the_gold_option() {
        let base = wavy();
        let mut rng = chart_rng(7, "x");
        let (items, derived) = anomaly_items(&base, 30, SPIKE_SIGMAS, &QaFormat::ALL, &mut rng).unwrap();
        let mcq = items.iter().find(|i| i.format == QaFormat::Mcq).unwrap();
        assert_eq!(mcq.answer, "day 30");
        assert_eq!(mcq.options.len(), 4);
        assert!(mcq.options.contains(&"day 30".to_string()));
        assert!(validate_item(mcq, OPEN_ANSWER_BUDGET).is_ok());
        let orig = base.data.records()[29].value.unwrap();
        let spiked = derived.data.records()[29].value.unwrap();
        let observed: Vec<f64> = base.data.observed().map(|(_, v)| v).collect();
        let sd = population_std(&observed, mean(&observed).unwrap());
        assert!((spiked - orig - 5.0 * sd).abs() < 1e-9);
        assert_eq!(items.iter().filter(|i| i.format == QaFormat::Tf).count(), 2);
        assert!(derived.metadata.id.ends_with("_anomaly"));
    }

    #[test]
    fn constant_series_imputation_gold_is_the_constant() {
        let base = chart(&[Some(21.5); 90]);
        let (items, derived) = imputation_items(&base, 40, 10, &[QaFormat::Open, QaFormat::Mcq]).unwrap();
        for it in &items {
            assert_eq!(it.gold_value, Some(21.5));
            assert_eq!(it.answer, "21.50 °C");
        }
        assert_eq!(derived.data.records().iter().filter(|r| r.value.is_none()).count(), 10);
    }

    #[test]
    fn deterministic_categories_repeat_exactly() {
        let base = wavy();
        let cfg = VisualConfig {
            categories: vec![VisualCategory::Anomaly, VisualCategory::Imputation],
            seed: 42,
            ..Default::default()
        };
        let a = visual_items_for_chart(&base, &cfg, &ScriptedBackend::new()).unwrap();
        let b = visual_items_for_chart(&base, &cfg, &ScriptedBackend::new()).unwrap();
        assert_eq!(a, b);
        assert!(a.items.len() >= 6);
    }

    #[test]
    fn backend_reasoning_items_are_validated() {
        let base = wavy();
        let key = format!("reasoning:{}:mcq", base.metadata.id);
        let backend = ScriptedBackend::new().with(
            Purpose::VisualQa,
            &key,
            vec![r#"[{"question":"Is the window warmer at the end than the start?","options":["yes","no","unchanged"],"answer":"yes"},{"question":"bad","options":["a","b","c"],"answer":"d"}]"#.into()],
        );
        let cfg = VisualConfig {
            categories: vec![VisualCategory::Reasoning],
            formats: vec![QaFormat::Mcq],
            ..Default::default()
        };
        let out = visual_items_for_chart(&base, &cfg, &backend).unwrap();
        assert_eq!(out.items.len(), 1);
        assert_eq!(out.items[0].evidence, vec![EvidenceRef::Chart(base.metadata.id.clone())]);
        assert_eq!(out.drops.total(), 1);
    }
}
