//! Serializers for report artifacts. All of them return strings; callers
//! decide where to write.

use serde::Serialize;

use super::{AblationTable, ConfusionMatrix, EvaluationReport, FewShotSweep};

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// One `(dataset, config, metric, value)` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatRow {
    pub dataset: String,
    pub config: String,
    pub metric: String,
    pub value: f64,
}

/// Headline metrics followed by per-class F1 (`f1:<label>`).
pub fn flat_rows(report: &EvaluationReport) -> Vec<FlatRow> {
    let md = &report.metadata;
    let m = &report.metrics;
    let mut config = md.config.clone();
    if let (Some(s), Some(seed)) = (md.shots_per_class, md.seed) {
        config = format!("{config}/shots={s}/seed={seed}");
    }
    let row = |metric: String, value: f64| FlatRow {
        dataset: md.dataset.clone(),
        config: config.clone(),
        metric,
        value,
    };
    let mut out = vec![
        row("accuracy".into(), m.accuracy),
        row("f1_weighted".into(), m.f1_weighted),
        row("f1_macro".into(), m.f1_macro),
    ];
    out.extend(
        m.per_class
            .iter()
            .map(|c| row(format!("f1:{}", c.label), c.f1)),
    );
    out
}

pub fn flat_csv(rows: &[FlatRow], run_digest: &str) -> String {
    csv_string(
        &["dataset", "config", "metric", "value", "run_digest"],
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.config.clone(),
                r.metric.clone(),
                r.value.to_string(),
                run_digest.to_string(),
            ]
        }),
    )
}

/// One row per ablation cell, in table order; unavailable cells have empty values.
pub fn ablation_csv(tables: &[AblationTable], run_digest: &str) -> String {
    let rows = tables.iter().flat_map(|t| {
        t.rows.iter().map(move |r| {
            let (status, vals) = match r.outcome.report() {
                Some(rep) => {
                    let m = &rep.metrics;
                    (
                        "ok".to_string(),
                        [m.accuracy, m.f1_weighted, m.f1_macro].map(|v| v.to_string()),
                    )
                }
                None => (
                    "unavailable".to_string(),
                    [String::new(), String::new(), String::new()],
                ),
            };
            let [a, fw, fm] = vals;
            vec![
                t.dataset.clone(),
                r.method.clone(),
                a,
                fw,
                fm,
                status,
                run_digest.to_string(),
            ]
        })
    });
    csv_string(
        &[
            "dataset",
            "method",
            "accuracy",
            "f1_weighted",
            "f1_macro",
            "status",
            "run_digest",
        ],
        rows,
    )
}

/// Labeled matrix; rows are ground truth.
pub fn confusion_csv(cm: &ConfusionMatrix, run_digest: &str) -> String {
    let mut header = vec!["truth\\predicted".to_string()];
    header.extend(cm.labels().iter().cloned());
    header.push("run_digest".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(
        &header_refs,
        cm.labels().iter().zip(cm.counts()).map(|(l, row)| {
            let mut r = vec![l.clone()];
            r.extend(row.iter().map(u64::to_string));
            r.push(run_digest.to_string());
            r
        }),
    )
}

pub fn fewshot_csv(dataset: &str, sweep: &FewShotSweep, run_digest: &str) -> String {
    csv_string(
        &[
            "dataset",
            "shots_per_class",
            "runs",
            "mean_accuracy",
            "mean_f1_weighted",
            "variance_f1_weighted",
            "zero_shot_f1_weighted",
            "run_digest",
        ],
        sweep.aggregates.iter().map(|a| {
            vec![
                dataset.to_string(),
                a.shots_per_class.to_string(),
                a.runs.to_string(),
                a.mean_accuracy.to_string(),
                a.mean_f1_weighted.to_string(),
                a.variance_f1_weighted
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                sweep.baseline.metrics.f1_weighted.to_string(),
                run_digest.to_string(),
            ]
        }),
    )
}

const SHADES: &[u8] = b" .:-=+*#%@";

/// Row-normalized terminal rendering. Column `j` is the `j`-th row label.
pub fn heatmap(cm: &ConfusionMatrix) -> String {
    let labels = cm.labels();
    let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    let idx: String = (0..labels.len())
        .map(|j| char::from(b'0' + (j % 10) as u8))
        .collect();
    out.push_str(&format!("{:>w$}     |{idx}|\n", "", w = width));
    for (i, l) in labels.iter().enumerate() {
        let support = cm.row_sum(i);
        let cells: String = (0..labels.len())
            .map(|j| {
                if support == 0 {
                    return ' ';
                }
                let frac = cm.get(i, j) as f64 / support as f64;
                let k = (frac * (SHADES.len() - 1) as f64).round() as usize;
                char::from(SHADES[k])
            })
            .collect();
        out.push_str(&format!("{l:>width$} {:>3} |{cells}| {support}\n", i % 10));
    }
    out
}
