//! Nearest-anchor classification over embedded label descriptions and exemplars.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbedError, Embedding, EmbeddingProvider};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("anchor set is empty")]
    EmptyAnchors,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate anchor id `{0}`")]
    DuplicateAnchor(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Cosine,
    L2,
}

impl Metric {
    /// Whether score `a` beats `b`; equal scores never do.
    pub fn beats(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Cosine => a > b,
            Metric::L2 => a < b,
        }
    }

    pub fn score(self, a: &[f32], b: &[f32]) -> Result<f64, ClassifyError> {
        match self {
            Metric::Cosine => cosine(a, b),
            Metric::L2 => l2_distance(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::L2 => "l2",
        })
    }
}

fn check_dims(a: &[f32], b: &[f32]) -> Result<(), ClassifyError> {
    if a.len() != b.len() {
        Err(ClassifyError::DimMismatch(a.len(), b.len()))
    } else {
        Ok(())
    }
}

/// Cosine similarity, accumulated in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, ClassifyError> {
    check_dims(a, b)?;
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(ClassifyError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Euclidean distance, accumulated in `f64`.
pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f64, ClassifyError> {
    check_dims(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    Descriptor,
    Exemplar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub anchor_id: String,
    pub label: String,
    pub kind: AnchorKind,
    pub embedding: Embedding,
}

/// Class representatives in canonical order: descriptors sorted by label,
/// then exemplars in insertion order. Ties resolve to the earlier anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    labels: Vec<String>,
    anchors: Vec<Anchor>,
}

pub fn descriptor_anchor_id(label: &str) -> String {
    format!("descriptor:{label}")
}

pub fn exemplar_anchor_id(window_id: &str) -> String {
    format!("exemplar:{window_id}")
}

impl AnchorSet {
    /// One descriptor anchor per label; the label set is exactly these labels.
    pub fn from_descriptors<I>(descriptors: I) -> Result<Self, ClassifyError>
    where
        I: IntoIterator<Item = (String, Embedding)>,
    {
        let mut items: Vec<(String, Embedding)> = descriptors.into_iter().collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(p) = items.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(ClassifyError::DuplicateLabel(p[0].0.clone()));
        }
        let mut set = AnchorSet::labels_only(items.iter().map(|(l, _)| l.clone()))?;
        for (label, embedding) in items {
            set.push(Anchor {
                anchor_id: descriptor_anchor_id(&label),
                label,
                kind: AnchorKind::Descriptor,
                embedding,
            })?;
        }
        if set.anchors.is_empty() {
            return Err(ClassifyError::EmptyAnchors);
        }
        Ok(set)
    }

    /// A label set with no anchors yet, the base for exemplar-only classification.
    pub fn labels_only<I: IntoIterator<Item = String>>(labels: I) -> Result<Self, ClassifyError> {
        let mut sorted: Vec<String> = labels.into_iter().collect();
        sorted.sort();
        if let Some(p) = sorted.windows(2).find(|p| p[0] == p[1]) {
            return Err(ClassifyError::DuplicateLabel(p[0].clone()));
        }
        Ok(AnchorSet {
            labels: sorted,
            anchors: Vec::new(),
        })
    }

    fn push(&mut self, anchor: Anchor) -> Result<(), ClassifyError> {
        if self.labels.binary_search(&anchor.label).is_err() {
            return Err(ClassifyError::UnknownLabel(anchor.label));
        }
        if self.anchors.iter().any(|a| a.anchor_id == anchor.anchor_id) {
            return Err(ClassifyError::DuplicateAnchor(anchor.anchor_id));
        }
        if let Some(first) = self.anchors.first() {
            if first.embedding.dim() != anchor.embedding.dim() {
                return Err(ClassifyError::DimMismatch(
                    first.embedding.dim(),
                    anchor.embedding.dim(),
                ));
            }
        }
        self.anchors.push(anchor);
        Ok(())
    }

    /// Returns a new set with exemplar anchors appended after the existing ones.
    pub fn with_exemplars<I>(&self, exemplars: I) -> Result<AnchorSet, ClassifyError>
    where
        I: IntoIterator<Item = (String, String, Embedding)>,
    {
        let mut out = self.clone();
        for (window_id, label, embedding) in exemplars {
            out.push(Anchor {
                anchor_id: exemplar_anchor_id(&window_id),
                label,
                kind: AnchorKind::Exemplar,
                embedding,
            })?;
        }
        Ok(out)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Labels without any anchor.
    pub fn uncovered_labels(&self) -> Vec<String> {
        let covered: BTreeSet<&str> = self.anchors.iter().map(|a| a.label.as_str()).collect();
        self.labels
            .iter()
            .filter(|l| !covered.contains(l.as_str()))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub window_id: String,
    pub predicted_label: String,
    pub winning_anchor_id: String,
    pub scores: Vec<f64>,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnchor {
    pub anchor_id: String,
    pub label: String,
    pub score: f64,
}

impl Prediction {
    /// The `n` best anchors under the metric, ties in anchor order.
    pub fn top(&self, anchors: &AnchorSet, n: usize) -> Vec<ScoredAnchor> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        let metric = self.metric;
        idx.sort_by(|&a, &b| {
            let (sa, sb) = (self.scores[a], self.scores[b]);
            let ord = match metric {
                Metric::Cosine => sb.total_cmp(&sa),
                Metric::L2 => sa.total_cmp(&sb),
            };
            ord.then(a.cmp(&b))
        });
        idx.into_iter()
            .take(n)
            .map(|i| {
                let a = &anchors.anchors()[i];
                ScoredAnchor {
                    anchor_id: a.anchor_id.clone(),
                    label: a.label.clone(),
                    score: self.scores[i],
                }
            })
            .collect()
    }
}

/// Line-delimited export of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub window_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    pub predicted_label: String,
    pub metric: Metric,
    pub top: Vec<ScoredAnchor>,
}

impl PredictionRecord {
    pub fn new(p: &Prediction, anchors: &AnchorSet, ground_truth: Option<&str>) -> Self {
        PredictionRecord {
            window_id: p.window_id.clone(),
            ground_truth: ground_truth.map(str::to_string),
            predicted_label: p.predicted_label.clone(),
            metric: p.metric,
            top: p.top(anchors, 3),
        }
    }
}

/// Scores the query against every anchor and picks the best one.
pub fn classify(
    window_id: &str,
    query: &Embedding,
    anchors: &AnchorSet,
    metric: Metric,
) -> Result<Prediction, ClassifyError> {
    if anchors.is_empty() {
        return Err(ClassifyError::EmptyAnchors);
    }
    let scores = anchors
        .anchors()
        .iter()
        .map(|a| metric.score(query.vector(), a.embedding.vector()))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if metric.beats(*s, scores[best]) {
            best = i;
        }
    }
    let winner = &anchors.anchors()[best];
    Ok(Prediction {
        window_id: window_id.to_string(),
        predicted_label: winner.label.clone(),
        winning_anchor_id: winner.anchor_id.clone(),
        scores,
        metric,
    })
}

/// A labeled window offered as an extra class anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub window_id: String,
    pub summary: String,
    pub label: String,
}

/// Embeds exemplar summaries and appends them to `base` as exemplar anchors.
pub fn build_fewshot_anchors(
    base: &AnchorSet,
    exemplars: &[Exemplar],
    provider: &dyn EmbeddingProvider,
) -> Result<AnchorSet, ClassifyError> {
    if exemplars.is_empty() {
        return Ok(base.clone());
    }
    for e in exemplars {
        if base.labels.binary_search(&e.label).is_err() {
            return Err(ClassifyError::UnknownLabel(e.label.clone()));
        }
    }
    let texts: Vec<String> = exemplars.iter().map(|e| e.summary.clone()).collect();
    let embedded = provider.embed_batch(&texts)?;
    base.with_exemplars(
        exemplars
            .iter()
            .zip(embedded)
            .map(|(e, emb)| (e.window_id.clone(), e.label.clone(), emb)),
    )
}
