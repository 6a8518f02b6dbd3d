use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, sample_variance, EvalError, EvaluationReport, RunMetadata};
use crate::classify::{
    build_fewshot_anchors, classify, AnchorSet, Exemplar, Metric, Prediction, PredictionRecord,
};
use crate::embedding::{Embedding, EmbeddingProvider, ALT_MODEL};
use crate::model::{ActivityWindow, HomeLayout};
use crate::textgen::{raw_event_text, summarize, DescriptorRegistry, SummaryConfig};

/// Inputs shared by every runner.
pub struct Experiment<'a> {
    pub dataset: String,
    pub windows: &'a [ActivityWindow],
    pub layout: &'a HomeLayout,
    pub summary: &'a SummaryConfig,
    pub descriptors: &'a DescriptorRegistry,
    pub provider: &'a dyn EmbeddingProvider,
    pub metric: Metric,
    pub config_digests: BTreeMap<String, String>,
    /// Worker threads; 0 uses the global rayon pool.
    pub parallelism: usize,
}

impl<'a> Experiment<'a> {
    pub fn new(
        dataset: impl Into<String>,
        windows: &'a [ActivityWindow],
        layout: &'a HomeLayout,
        summary: &'a SummaryConfig,
        descriptors: &'a DescriptorRegistry,
        provider: &'a dyn EmbeddingProvider,
    ) -> Self {
        Experiment {
            dataset: dataset.into(),
            windows,
            layout,
            summary,
            descriptors,
            provider,
            metric: Metric::Cosine,
            config_digests: BTreeMap::new(),
            parallelism: 0,
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_digest(mut self, key: impl Into<String>, digest: impl Into<String>) -> Self {
        self.config_digests.insert(key.into(), digest.into());
        self
    }

    pub fn with_parallelism(mut self, threads: usize) -> Self {
        self.parallelism = threads;
        self
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, EvalError> {
        if self.parallelism == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))?;
        Ok(pool.install(f))
    }

    fn check_corpus(&self, windows: &[ActivityWindow]) -> Result<(), EvalError> {
        if windows.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let mut missing = BTreeSet::new();
        for w in windows {
            if let Some(v) = w.validate().first() {
                return Err(EvalError::InvalidWindow {
                    window_id: w.window_id.clone(),
                    reason: v.to_string(),
                });
            }
            let label = w
                .ground_truth
                .as_deref()
                .ok_or_else(|| EvalError::Unlabeled(w.window_id.clone()))?;
            if !self.descriptors.contains(label) {
                missing.insert(label.to_string());
            }
        }
        if !missing.is_empty() {
            return Err(EvalError::MissingDescriptors(missing.into_iter().collect()));
        }
        Ok(())
    }

    fn window_text(&self, w: &ActivityWindow, source: TextSource) -> String {
        match source {
            TextSource::Summary => summarize(w, self.layout, self.summary).text,
            TextSource::RawEvents => raw_event_text(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextSource {
    Summary,
    RawEvents,
}

#[derive(Clone, Copy)]
struct Variant<'p> {
    config: &'static str,
    text: TextSource,
    bare_labels: bool,
    provider: &'p dyn EmbeddingProvider,
    metric: Metric,
}

impl<'p> Variant<'p> {
    fn proposed(exp: &Experiment<'p>) -> Self {
        Variant {
            config: AblationCell::Proposed.key(),
            text: TextSource::Summary,
            bare_labels: false,
            provider: exp.provider,
            metric: exp.metric,
        }
    }
}

fn provider_label(p: &dyn EmbeddingProvider) -> String {
    format!("{}:{}", p.backend(), p.model_name())
}

/// Embeds each distinct text once and fans the results back out.
fn embed_unique(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
) -> Result<Vec<Embedding>, EvalError> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut unique: Vec<String> = Vec::new();
    let positions: Vec<usize> = texts
        .iter()
        .map(|t| {
            *slot.entry(t.as_str()).or_insert_with(|| {
                unique.push(t.clone());
                unique.len() - 1
            })
        })
        .collect();
    let embedded = provider.embed_batch(&unique)?;
    Ok(positions.into_iter().map(|i| embedded[i].clone()).collect())
}

/// Query embeddings for `windows` plus the descriptor anchor set, from one batch.
fn prepare(
    exp: &Experiment,
    windows: &[ActivityWindow],
    v: &Variant,
) -> Result<(Vec<Embedding>, AnchorSet), EvalError> {
    let registry = if v.bare_labels {
        exp.descriptors.bare_labels()
    } else {
        exp.descriptors.clone()
    };
    let mut texts: Vec<String> = windows
        .par_iter()
        .map(|w| exp.window_text(w, v.text))
        .collect();
    let n = texts.len();
    texts.extend(registry.iter().map(|d| d.text.clone()));
    let mut embedded = embed_unique(v.provider, &texts)?;
    let descriptor_embs = embedded.split_off(n);
    let anchors = AnchorSet::from_descriptors(
        registry
            .iter()
            .map(|d| d.label.clone())
            .zip(descriptor_embs),
    )?;
    Ok((embedded, anchors))
}

fn classify_all(
    windows: &[ActivityWindow],
    queries: &[Embedding],
    anchors: &AnchorSet,
    metric: Metric,
) -> Result<Vec<Prediction>, EvalError> {
    windows
        .par_iter()
        .zip(queries.par_iter())
        .map(|(w, q)| classify(&w.window_id, q, anchors, metric).map_err(EvalError::from))
        .collect()
}

/// Report plus line-delimited predictions for one evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotRun {
    pub report: EvaluationReport,
    pub predictions: Vec<PredictionRecord>,
}

fn score(
    exp: &Experiment,
    v: &Variant,
    windows: &[ActivityWindow],
    predictions: &[Prediction],
    anchors: &AnchorSet,
    shots: Option<(usize, u64)>,
) -> Result<ZeroShotRun, EvalError> {
    let pairs: Vec<(&str, &str)> = windows
        .iter()
        .zip(predictions)
        .map(|(w, p)| {
            (
                w.ground_truth.as_deref().unwrap_or(""),
                p.predicted_label.as_str(),
            )
        })
        .collect();
    let metrics = compute_metrics(&pairs, anchors.labels())?;
    let records = windows
        .iter()
        .zip(predictions)
        .map(|(w, p)| PredictionRecord::new(p, anchors, w.ground_truth.as_deref()))
        .collect();
    Ok(ZeroShotRun {
        report: EvaluationReport {
            metadata: RunMetadata {
                dataset: exp.dataset.clone(),
                config: v.config.to_string(),
                provider: provider_label(v.provider),
                metric: v.metric,
                config_digests: exp.config_digests.clone(),
                shots_per_class: shots.map(|s| s.0),
                seed: shots.map(|s| s.1),
            },
            metrics,
        },
        predictions: records,
    })
}

fn evaluate_variant(
    exp: &Experiment,
    windows: &[ActivityWindow],
    v: &Variant,
) -> Result<ZeroShotRun, EvalError> {
    let (queries, anchors) = prepare(exp, windows, v)?;
    let predictions = classify_all(windows, &queries, &anchors, v.metric)?;
    score(exp, v, windows, &predictions, &anchors, None)
}

/// Summarize, embed, classify against the descriptors, score.
///
/// Every ground-truth label must have a descriptor; this is checked before
/// anything is embedded.
pub fn run_zero_shot(exp: &Experiment) -> Result<ZeroShotRun, EvalError> {
    exp.check_corpus(exp.windows)?;
    exp.install(|| evaluate_variant(exp, exp.windows, &Variant::proposed(exp)))?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationCell {
    Proposed,
    NoSummary,
    NoDescriptor,
    AltEncoder,
    L2Metric,
}

impl AblationCell {
    pub const ALL: [AblationCell; 5] = [
        AblationCell::Proposed,
        AblationCell::NoSummary,
        AblationCell::NoDescriptor,
        AblationCell::AltEncoder,
        AblationCell::L2Metric,
    ];

    pub fn key(self) -> &'static str {
        match self {
            AblationCell::Proposed => "proposed",
            AblationCell::NoSummary => "no_summary",
            AblationCell::NoDescriptor => "no_descriptor",
            AblationCell::AltEncoder => "alt_encoder",
            AblationCell::L2Metric => "l2_metric",
        }
    }

    /// Row label for tables.
    pub fn method(self, alt_model: &str) -> String {
        match self {
            AblationCell::Proposed => "Ours (proposed)".into(),
            AblationCell::NoSummary => "w/o summary".into(),
            AblationCell::NoDescriptor => "w/o activity descriptors".into(),
            AblationCell::AltEncoder => format!("w {alt_model}"),
            AblationCell::L2Metric => "w L2-Norm".into(),
        }
    }
}

/// The encoder for the alternate-encoder cell, or why there is none.
pub enum AltEncoder<'a> {
    Ready(&'a dyn EmbeddingProvider),
    Unavailable { model_name: String, reason: String },
}

impl AltEncoder<'_> {
    pub fn unavailable(reason: impl Into<String>) -> Self {
        AltEncoder::Unavailable {
            model_name: ALT_MODEL.to_string(),
            reason: reason.into(),
        }
    }

    fn model_name(&self) -> &str {
        match self {
            AltEncoder::Ready(p) => p.model_name(),
            AltEncoder::Unavailable { model_name, .. } => model_name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Available { report: Box<EvaluationReport> },
    Unavailable { reason: String },
}

impl CellOutcome {
    pub fn report(&self) -> Option<&EvaluationReport> {
        match self {
            CellOutcome::Available { report } => Some(report),
            CellOutcome::Unavailable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub cell: AblationCell,
    pub method: String,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub dataset: String,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn get(&self, cell: AblationCell) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.cell == cell)
    }
}

/// Evaluates the proposed configuration and its four ablations.
///
/// Only the alternate-encoder cell tolerates failure: it is reported as
/// unavailable and the other cells still run.
pub fn run_ablation(exp: &Experiment, alt: &AltEncoder) -> Result<AblationTable, EvalError> {
    exp.check_corpus(exp.windows)?;
    let base = Variant::proposed(exp);
    let alt_model = alt.model_name().to_string();
    let cells: Vec<AblationCell> = AblationCell::ALL.to_vec();
    let rows = exp.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                let mut v = Variant {
                    config: cell.key(),
                    ..base
                };
                match cell {
                    AblationCell::Proposed => {}
                    AblationCell::NoSummary => v.text = TextSource::RawEvents,
                    AblationCell::NoDescriptor => v.bare_labels = true,
                    AblationCell::L2Metric => v.metric = Metric::L2,
                    AblationCell::AltEncoder => match alt {
                        AltEncoder::Ready(p) => v.provider = *p,
                        AltEncoder::Unavailable { reason, .. } => {
                            return Ok(AblationRow {
                                cell,
                                method: cell.method(&alt_model),
                                outcome: CellOutcome::Unavailable {
                                    reason: reason.clone(),
                                },
                            })
                        }
                    },
                }
                let outcome = match evaluate_variant(exp, exp.windows, &v) {
                    Ok(run) => CellOutcome::Available {
                        report: Box::new(run.report),
                    },
                    Err(EvalError::Embed(e)) if cell == AblationCell::AltEncoder => {
                        CellOutcome::Unavailable {
                            reason: e.to_string(),
                        }
                    }
                    Err(e) => return Err(e),
                };
                Ok(AblationRow {
                    cell,
                    method: cell.method(&alt_model),
                    outcome,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()
    })??;
    Ok(AblationTable {
        dataset: exp.dataset.clone(),
        rows,
    })
}

/// Which labeled windows may serve as exemplars. Support is taken per class
/// from the earliest windows; everything else is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SupportSplit {
    /// The first `per_class` windows of each class.
    Earliest { per_class: usize },
    /// The first `floor(fraction * n)` windows of a class with `n` windows.
    Fraction { fraction: f64 },
}

impl Default for SupportSplit {
    fn default() -> Self {
        SupportSplit::Earliest { per_class: 5 }
    }
}

impl SupportSplit {
    /// Returns `(support, evaluation)` index lists. Support is grouped by
    /// label in canonical order, chronological within a label; evaluation
    /// keeps corpus order.
    pub fn split(&self, windows: &[ActivityWindow]) -> (Vec<usize>, Vec<usize>) {
        let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, w) in windows.iter().enumerate() {
            if let Some(l) = w.ground_truth.as_deref() {
                by_label.entry(l).or_default().push(i);
            }
        }
        let mut support = Vec::new();
        let mut taken = vec![false; windows.len()];
        for idx in by_label.values_mut() {
            idx.sort_by(|&a, &b| {
                (windows[a].start, &windows[a].window_id)
                    .cmp(&(windows[b].start, &windows[b].window_id))
            });
            let k = match *self {
                SupportSplit::Earliest { per_class } => per_class,
                SupportSplit::Fraction { fraction } => {
                    (fraction.clamp(0.0, 1.0) * idx.len() as f64).floor() as usize
                }
            }
            .min(idx.len());
            for &i in &idx[..k] {
                taken[i] = true;
                support.push(i);
            }
        }
        let eval = (0..windows.len()).filter(|&i| !taken[i]).collect();
        (support, eval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotRun {
    pub shots_per_class: usize,
    pub seed: u64,
    pub exemplar_ids: Vec<String>,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAggregate {
    pub shots_per_class: usize,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub mean_f1_weighted: f64,
    pub variance_f1_weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSweep {
    pub support_ids: Vec<String>,
    /// Zero-shot report on the evaluation split.
    pub baseline: EvaluationReport,
    pub runs: Vec<FewShotRun>,
    pub aggregates: Vec<ShotAggregate>,
}

/// Draws `shots` exemplars per class, uniformly without replacement.
fn sample_exemplars(
    pools: &BTreeMap<String, Vec<Exemplar>>,
    shots: usize,
    seed: u64,
) -> Vec<Exemplar> {
    if shots == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for pool in pools.values() {
        let k = shots.min(pool.len());
        let mut idx = rand::seq::index::sample(&mut rng, pool.len(), k).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| pool[i].clone()));
    }
    out
}

/// Few-shot sweep over every `(shots, seed)` pair.
///
/// Exemplars come only from the support split and are evaluated only on the
/// remaining windows. With zero shots the anchor set is the descriptor set
/// and the report equals `baseline`.
pub fn run_few_shot(
    exp: &Experiment,
    split: SupportSplit,
    shots: &[usize],
    seeds: &[u64],
) -> Result<FewShotSweep, EvalError> {
    exp.check_corpus(exp.windows)?;
    let (support_idx, eval_idx) = split.split(exp.windows);
    if support_idx.is_empty() {
        return Err(EvalError::EmptySupport);
    }
    let eval: Vec<ActivityWindow> = eval_idx.iter().map(|&i| exp.windows[i].clone()).collect();
    if eval.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let v = Variant::proposed(exp);
    exp.install(|| {
        let (queries, base) = prepare(exp, &eval, &v)?;
        let mut pools: BTreeMap<String, Vec<Exemplar>> = BTreeMap::new();
        for &i in &support_idx {
            let w = &exp.windows[i];
            let label = w.ground_truth.clone().unwrap_or_default();
            pools.entry(label.clone()).or_default().push(Exemplar {
                window_id: w.window_id.clone(),
                summary: exp.window_text(w, TextSource::Summary),
                label,
            });
        }

        let base_preds = classify_all(&eval, &queries, &base, v.metric)?;
        let baseline = score(exp, &v, &eval, &base_preds, &base, None)?.report;

        let cells: Vec<(usize, u64)> = shots
            .iter()
            .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
            .collect();
        let runs = cells
            .par_iter()
            .map(|&(s, seed)| {
                let exemplars = sample_exemplars(&pools, s, seed);
                let anchors = build_fewshot_anchors(&base, &exemplars, v.provider)?;
                let preds = classify_all(&eval, &queries, &anchors, v.metric)?;
                let tag = (s > 0).then_some((s, seed));
                Ok(FewShotRun {
                    shots_per_class: s,
                    seed,
                    exemplar_ids: exemplars.into_iter().map(|e| e.window_id).collect(),
                    report: score(exp, &v, &eval, &preds, &anchors, tag)?.report,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;

        let mut aggregates = Vec::new();
        for &s in shots.iter().collect::<BTreeSet<_>>() {
            let group: Vec<&FewShotRun> = runs.iter().filter(|r| r.shots_per_class == s).collect();
            let f1: Vec<f64> = group.iter().map(|r| r.report.metrics.f1_weighted).collect();
            let acc: Vec<f64> = group.iter().map(|r| r.report.metrics.accuracy).collect();
            let n = group.len().max(1) as f64;
            aggregates.push(ShotAggregate {
                shots_per_class: s,
                runs: group.len(),
                mean_accuracy: acc.iter().sum::<f64>() / n,
                mean_f1_weighted: f1.iter().sum::<f64>() / n,
                variance_f1_weighted: sample_variance(&f1),
            });
        }
        Ok(FewShotSweep {
            support_ids: support_idx
                .iter()
                .map(|&i| exp.windows[i].window_id.clone())
                .collect(),
            baseline,
            runs,
            aggregates,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TestEmbedder;
    use crate::model::{Modality, SensorEvent, SensorInfo};
    use chrono::NaiveDate;

    fn layout() -> HomeLayout {
        let mut l = HomeLayout::new("toy");
        for (id, loc, ctx, m) in [
            ("K1", "in the kitchen", "stove", Modality::Motion),
            ("B1", "in the bedroom", "bed", Modality::Motion),
            ("DR1", "at the front door", "front door", Modality::Door),
        ] {
            l.sensors.insert(
                id.to_string(),
                SensorInfo {
                    location_phrase: loc.into(),
                    context_phrase: ctx.into(),
                    modality: m,
                },
            );
        }
        l
    }

    fn window(id: &str, label: &str, day: u32, hour: u32, sensor: &str, n: u32) -> ActivityWindow {
        let t0 = NaiveDate::from_ymd_opt(2024, 1, day)
            .unwrap()
            .and_hms_opt(hour, 0, 0)
            .unwrap();
        let events = (0..n)
            .map(|i| {
                SensorEvent::new(
                    t0 + chrono::Duration::seconds(i as i64 * 30),
                    sensor,
                    Modality::Motion,
                    "ON",
                )
                .unwrap()
            })
            .collect();
        ActivityWindow::new(id, Some(label.to_string()), events)
    }

    fn corpus() -> Vec<ActivityWindow> {
        let mut out = Vec::new();
        for d in 1..=4 {
            out.push(window(&format!("c{d}"), "Cook", d, 8, "K1", 3 + d));
            out.push(window(&format!("s{d}"), "Sleep", d, 23, "B1", 2 + d));
            out.push(window(&format!("l{d}"), "Leave_Home", d, 9, "DR1", 1 + d));
        }
        out
    }

    fn descriptors() -> DescriptorRegistry {
        DescriptorRegistry::from_pairs([
            (
                "Cook",
                "Cooking takes place for minutes in the kitchen near the stove",
            ),
            (
                "Sleep",
                "Sleeping takes place for hours in the bedroom on the bed",
            ),
            (
                "Leave_Home",
                "Leaving home takes a few seconds at the front door",
            ),
        ])
        .unwrap()
    }

    #[test]
    fn zero_shot_is_deterministic() {
        let (w, l, d, cfg) = (corpus(), layout(), descriptors(), SummaryConfig::default());
        let p = TestEmbedder::new(32);
        let exp = Experiment::new("toy", &w, &l, &cfg, &d, &p).with_digest("run", "abc");
        let a = run_zero_shot(&exp).unwrap();
        let b = run_zero_shot(&exp.with_parallelism(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.report.metrics.total, 12);
        assert_eq!(a.predictions.len(), 12);
        assert_eq!(a.report.metadata.config_digests["run"], "abc");
        assert_eq!(
            a.report.metrics.confusion.labels(),
            ["Cook", "Leave_Home", "Sleep"]
        );
    }

    #[test]
    fn corpus_preconditions() {
        let (l, cfg, d) = (layout(), SummaryConfig::default(), descriptors());
        let p = TestEmbedder::new(8);
        let empty: Vec<ActivityWindow> = Vec::new();
        assert!(matches!(
            run_zero_shot(&Experiment::new("x", &empty, &l, &cfg, &d, &p)),
            Err(EvalError::EmptyCorpus)
        ));
        let w = vec![
            window("e1", "Eat", 1, 12, "K1", 2),
            window("z1", "Zzz", 1, 12, "K1", 2),
        ];
        match run_zero_shot(&Experiment::new("x", &w, &l, &cfg, &d, &p)) {
            Err(EvalError::MissingDescriptors(m)) => assert_eq!(m, ["Eat", "Zzz"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ablation_has_five_rows_and_l2_matches() {
        let (w, l, d, cfg) = (corpus(), layout(), descriptors(), SummaryConfig::default());
        let p = TestEmbedder::new(64);
        let exp = Experiment::new("toy", &w, &l, &cfg, &d, &p);
        let table = run_ablation(&exp, &AltEncoder::unavailable("no cache")).unwrap();
        assert_eq!(table.rows.len(), 5);
        let proposed = table
            .get(AblationCell::Proposed)
            .unwrap()
            .outcome
            .report()
            .unwrap();
        let l2 = table
            .get(AblationCell::L2Metric)
            .unwrap()
            .outcome
            .report()
            .unwrap();
        assert_eq!(proposed.metrics, l2.metrics);
        assert_eq!(l2.metadata.metric, Metric::L2);
        assert!(table
            .get(AblationCell::AltEncoder)
            .unwrap()
            .outcome
            .report()
            .is_none());
        assert_eq!(*proposed, run_zero_shot(&exp).unwrap().report,);

        let alt = TestEmbedder::with_model(ALT_MODEL, 64);
        let table = run_ablation(&exp, &AltEncoder::Ready(&alt)).unwrap();
        let row = table.get(AblationCell::AltEncoder).unwrap();
        assert_eq!(row.method, "w paraphrase-distilroberta-base-v2");
        assert!(row.outcome.report().is_some());
    }

    #[test]
    fn support_split_is_chronological_and_disjoint() {
        let w = corpus();
        let (support, eval) = SupportSplit::Earliest { per_class: 2 }.split(&w);
        let ids: Vec<&str> = support.iter().map(|&i| w[i].window_id.as_str()).collect();
        assert_eq!(ids, ["c1", "c2", "l1", "l2", "s1", "s2"]);
        assert_eq!(eval.len(), 6);
        assert!(support.iter().all(|i| !eval.contains(i)));
        let (support, _) = SupportSplit::Fraction { fraction: 0.5 }.split(&w);
        assert_eq!(support.len(), 6);
    }

    #[test]
    fn few_shot_sweep() {
        let (w, l, d, cfg) = (corpus(), layout(), descriptors(), SummaryConfig::default());
        let p = TestEmbedder::new(32);
        let exp = Experiment::new("toy", &w, &l, &cfg, &d, &p);
        let split = SupportSplit::Earliest { per_class: 2 };
        let sweep = run_few_shot(&exp, split, &[0, 1, 2], &[1, 2, 3]).unwrap();
        assert_eq!(sweep.runs.len(), 9);
        for r in sweep.runs.iter().filter(|r| r.shots_per_class == 0) {
            assert_eq!(r.report, sweep.baseline);
            assert!(r.exemplar_ids.is_empty());
        }
        for r in &sweep.runs {
            assert_eq!(r.exemplar_ids.len(), 3 * r.shots_per_class);
            assert!(r
                .exemplar_ids
                .iter()
                .all(|id| sweep.support_ids.contains(id)));
        }
        assert_eq!(sweep.aggregates.len(), 3);
        assert_eq!(sweep.aggregates[0].variance_f1_weighted, Some(0.0));

        let again = run_few_shot(&exp, split, &[0, 1, 2], &[1, 2, 3]).unwrap();
        assert_eq!(sweep, again);

        let (_, eval) = split.split(&w);
        let eval_windows: Vec<ActivityWindow> = eval.iter().map(|&i| w[i].clone()).collect();
        let zs = run_zero_shot(&Experiment::new("toy", &eval_windows, &l, &cfg, &d, &p)).unwrap();
        assert_eq!(zs.report, sweep.baseline);

        assert!(matches!(
            run_few_shot(&exp, SupportSplit::Earliest { per_class: 0 }, &[1], &[1]),
            Err(EvalError::EmptySupport)
        ));
    }
}
