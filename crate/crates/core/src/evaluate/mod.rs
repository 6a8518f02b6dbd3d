//! Metrics, confusion matrices and the experiment runners.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::ClassifyError;
use crate::embedding::EmbedError;

mod report;
mod runner;

pub use report::{
    ablation_csv, confusion_csv, fewshot_csv, flat_csv, flat_rows, heatmap, to_pretty_json, FlatRow,
};
pub use runner::{
    run_ablation, run_few_shot, run_zero_shot, AblationCell, AblationRow, AblationTable,
    AltEncoder, CellOutcome, Experiment, FewShotRun, FewShotSweep, ShotAggregate, SupportSplit,
    ZeroShotRun,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no (truth, predicted) pairs to score")]
    EmptyPairs,
    #[error("label `{0}` is not in the label set")]
    UnknownLabel(String),
    #[error("duplicate label `{0}` in the label set")]
    DuplicateLabel(String),
    #[error("corpus has no windows")]
    EmptyCorpus,
    #[error("window {window_id}: {reason}")]
    InvalidWindow { window_id: String, reason: String },
    #[error("window {0} has no ground-truth label")]
    Unlabeled(String),
    #[error("no descriptor for label(s): {}", .0.join(", "))]
    MissingDescriptors(Vec<String>),
    #[error("support split is empty for every class")]
    EmptySupport,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Classify(ClassifyError),
}

impl From<ClassifyError> for EvalError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Embed(inner) => EvalError::Embed(inner),
            other => EvalError::Classify(other),
        }
    }
}

/// Rows are ground truth, columns are predictions, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub total: u64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Derives every score from the counts; zero denominators give 0.
    pub fn from_confusion(confusion: ConfusionMatrix) -> Metrics {
        let total = confusion.total();
        let per_class: Vec<ClassMetrics> = confusion
            .labels()
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let tp = confusion.get(i, i);
                let support = confusion.row_sum(i);
                let precision = ratio(tp, confusion.col_sum(i));
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    label: label.clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let n = per_class.len();
        let f1_macro = if n == 0 {
            0.0
        } else {
            per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64
        };
        let f1_weighted = if total == 0 {
            0.0
        } else {
            per_class
                .iter()
                .map(|c| c.f1 * c.support as f64)
                .sum::<f64>()
                / total as f64
        };
        Metrics {
            accuracy: ratio(confusion.trace(), total),
            f1_weighted,
            f1_macro,
            total,
            per_class,
            confusion,
        }
    }
}

/// Scores `(truth, predicted)` pairs over `labels`, which fixes the matrix
/// order and the macro-average denominator.
pub fn compute_metrics<T: AsRef<str>, P: AsRef<str>>(
    pairs: &[(T, P)],
    labels: &[String],
) -> Result<Metrics, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyPairs);
    }
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.as_str(), i).is_some() {
            return Err(EvalError::DuplicateLabel(l.clone()));
        }
    }
    let lookup = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| EvalError::UnknownLabel(l.to_string()))
    };
    let mut confusion = ConfusionMatrix::new(labels.to_vec());
    for (t, p) in pairs {
        let (ti, pi) = (lookup(t.as_ref())?, lookup(p.as_ref())?);
        confusion.add(ti, pi);
    }
    Ok(Metrics::from_confusion(confusion))
}

/// Identifies the run that produced a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset: String,
    pub config: String,
    pub provider: String,
    pub metric: crate::classify::Metric,
    pub config_digests: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: RunMetadata,
    pub metrics: Metrics,
}

/// Sample variance with the n - 1 denominator; `None` below two values.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    Some(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64)
}
