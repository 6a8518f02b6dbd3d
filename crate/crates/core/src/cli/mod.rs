//! The `zshar` command: argument parsing, run configs and subcommands.
//!
//! Exit codes: 0 success, 1 config or validation error, 2 data error,
//! 3 embedding provider error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{descriptor_anchor_id, ClassifyError};
use crate::embedding::Backend;
use crate::embedding::{EmbedError, EmbeddingProvider, ProviderSpec, ALT_MODEL, ENDPOINT_ENV};
use crate::evaluate::{
    ablation_csv, confusion_csv, fewshot_csv, flat_csv, flat_rows, heatmap, run_ablation,
    run_few_shot, run_zero_shot, to_pretty_json, AltEncoder, EvalError, EvaluationReport,
    Experiment, FlatRow,
};
use crate::ingest::{
    filter_labels, read_casas_file, read_csv_file, CsvMapping, IngestError, SegmentationReport,
};
use crate::model::{read_corpus, write_corpus, ActivityWindow, HomeLayout, ModelError};
use crate::textgen::{
    load_descriptors, raw_event_text, summarize, DescriptorRegistry, SummaryConfig, TextRecord,
};

mod config;

pub use config::{
    file_digest, files_digest, Adapter, DatasetSpec, ExperimentSpec, LoadedConfig, RunConfig,
};

/// Cache-miss listings are cut to this many digests.
pub const MAX_LISTED_MISSES: usize = 20;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Provider(m) => m,
        }
    }
}

fn provider_error(e: &EmbedError) -> CliError {
    if let EmbedError::CacheMiss { digests } = e {
        let mut msg = format!(
            "{} text(s) missing from the embedding cache; re-export them and retry. Missing digests:",
            digests.len()
        );
        for d in digests.iter().take(MAX_LISTED_MISSES) {
            msg.push_str(&format!("\n  {d}"));
        }
        if digests.len() > MAX_LISTED_MISSES {
            msg.push_str(&format!(
                "\n  ... and {} more",
                digests.len() - MAX_LISTED_MISSES
            ));
        }
        return CliError::Provider(msg);
    }
    CliError::Provider(e.to_string())
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match &e {
            EvalError::Embed(inner) => provider_error(inner),
            EvalError::Classify(ClassifyError::DimMismatch(..) | ClassifyError::ZeroNorm) => {
                CliError::Provider(e.to_string())
            }
            EvalError::MissingDescriptors(_) | EvalError::Pool(_) | EvalError::Classify(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Mapping(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "zshar",
    version,
    about = "Zero-shot activity recognition from smart-home sensor logs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw logs into a line-delimited corpus of annotated windows
    Ingest(IngestArgs),
    /// Render window summaries, the input of the embedding exporter
    Summarize(SummarizeArgs),
    /// Execute the experiment described by a run config
    Run(RunArgs),
    /// Check a run config and print its digest
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input format
    #[arg(long, value_enum, default_value = "casas")]
    pub adapter: Adapter,
    /// Home layout TOML; its modalities override id-prefix guesses
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Column mapping TOML, required by the csv adapter
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Drop windows with this ground-truth label (repeatable)
    #[arg(long = "drop-label", value_name = "LABEL")]
    pub drop_labels: Vec<String>,
    /// Output corpus (line-delimited JSON)
    #[arg(short, long)]
    pub out: PathBuf,
    /// Segmentation report path [default: <OUT>.report.json]
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Raw input files; parsed in parallel, each with its own window-id prefix
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Corpus produced by `ingest`
    #[arg(long)]
    pub corpus: PathBuf,
    /// Home layout TOML
    #[arg(long)]
    pub layout: PathBuf,
    /// Summary config TOML [default: built-in periods, top two]
    #[arg(long)]
    pub summary_config: Option<PathBuf>,
    /// Output summaries file, one `{window_id, text}` record per line
    #[arg(short, long)]
    pub out: PathBuf,
    /// Descriptor TOML to export alongside the summaries
    #[arg(long, requires = "descriptors_out")]
    pub descriptors: Option<PathBuf>,
    /// Output for descriptor records, ids `descriptor:<label>`
    #[arg(long, requires = "descriptors")]
    pub descriptors_out: Option<PathBuf>,
    /// Also export the raw-event texts (`raw:<window_id>`) and bare labels
    /// (`label:<label>`) that the ablation runs embed
    #[arg(long)]
    pub with_ablation_texts: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run config TOML
    pub config: PathBuf,
    /// Embedding service URL for the http backend, overriding the config
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run config TOML
    pub config: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Summarize(a) => cmd_summarize(&a),
        Command::Run(a) => cmd_run(&a),
        Command::ValidateConfig(a) => cmd_validate_config(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Windows and the merged report for a list of files. Files are parsed in
/// parallel; output keeps the argument order.
pub fn ingest_files(
    adapter: Adapter,
    files: &[PathBuf],
    layout: Option<&HomeLayout>,
    mapping: Option<&CsvMapping>,
) -> Result<(Vec<ActivityWindow>, SegmentationReport), CliError> {
    for f in files {
        if !f.is_file() {
            return Err(CliError::Data(format!("no such file: {}", f.display())));
        }
    }
    let parts: Vec<Result<(Vec<ActivityWindow>, SegmentationReport), CliError>> = files
        .par_iter()
        .map(|f| match adapter {
            Adapter::Casas => read_casas_file(f, layout).map_err(CliError::from),
            Adapter::Csv => {
                let m = mapping
                    .ok_or_else(|| CliError::Config("csv adapter needs a column mapping".into()))?;
                read_csv_file(f, m, layout).map_err(CliError::from)
            }
            Adapter::Corpus => {
                let w = read_corpus(f).map_err(|e| CliError::Data(e.to_string()))?;
                let report = SegmentationReport {
                    windows_emitted: w.len(),
                    events_total: w.iter().map(|w| w.events.len()).sum(),
                    events_in_windows: w.iter().map(|w| w.events.len()).sum(),
                    ..SegmentationReport::default()
                };
                Ok((w, report))
            }
        })
        .collect();
    let mut windows = Vec::new();
    let mut report = SegmentationReport::default();
    for (f, part) in files.iter().zip(parts) {
        let (w, r) = part?;
        for s in r.lines_skipped.iter().take(5) {
            eprintln!("warning: {}:{}: {}", f.display(), s.line, s.reason);
        }
        if r.lines_skipped.len() > 5 {
            eprintln!(
                "warning: {}: {} more unparseable lines",
                f.display(),
                r.lines_skipped.len() - 5
            );
        }
        windows.extend(w);
        report.merge(&r);
    }
    Ok((windows, report))
}

fn load_layout(path: &Path) -> Result<HomeLayout, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "layout not found: {}",
            path.display()
        )));
    }
    HomeLayout::load(path).map_err(|e| CliError::Config(e.to_string()))
}

fn load_summary_config(path: Option<&Path>) -> Result<SummaryConfig, CliError> {
    match path {
        Some(p) => SummaryConfig::load(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(SummaryConfig::default()),
    }
}

fn load_registry(path: &Path) -> Result<DescriptorRegistry, CliError> {
    let reg = load_descriptors(path).map_err(|e| CliError::Config(e.to_string()))?;
    for w in reg.warnings() {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(reg)
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    windows_written: usize,
    windows_filtered: usize,
    segmentation: &'a SegmentationReport,
}

pub fn cmd_ingest(a: &IngestArgs) -> Result<(), CliError> {
    let layout = a.layout.as_deref().map(load_layout).transpose()?;
    let mapping = match (&a.mapping, a.adapter) {
        (Some(m), _) => Some(CsvMapping::load(m)?),
        (None, Adapter::Csv) => {
            return Err(CliError::Config(
                "--mapping is required with --adapter csv".into(),
            ))
        }
        (None, _) => None,
    };
    let (windows, report) = ingest_files(a.adapter, &a.files, layout.as_ref(), mapping.as_ref())?;
    let drop: BTreeSet<String> = a.drop_labels.iter().cloned().collect();
    let before = windows.len();
    let windows = filter_labels(windows, &drop);
    write_corpus(&a.out, &windows).map_err(|e| CliError::Data(e.to_string()))?;
    let summary = IngestSummary {
        windows_written: windows.len(),
        windows_filtered: before - windows.len(),
        segmentation: &report,
    };
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    write_file(&report_path, &to_pretty_json(&summary))?;
    println!("windows written      {}", summary.windows_written);
    println!("windows filtered     {}", summary.windows_filtered);
    println!(
        "orphan begins/ends   {}/{}",
        report.orphan_begins, report.orphan_ends
    );
    println!(
        "events               {} = {} in windows + {} orphaned + {} unannotated",
        report.events_total,
        report.events_in_windows,
        report.events_orphaned,
        report.events_unannotated
    );
    println!("lines skipped        {}", report.lines_skipped.len());
    println!("corpus               {}", a.out.display());
    println!("report               {}", report_path.display());
    Ok(())
}

fn check_windows(windows: &[ActivityWindow]) -> Result<(), CliError> {
    for w in windows {
        if let Some(v) = w.validate().first() {
            return Err(CliError::Data(format!(
                "invalid window {}: {v}",
                w.window_id
            )));
        }
    }
    Ok(())
}

pub fn cmd_summarize(a: &SummarizeArgs) -> Result<(), CliError> {
    let layout = load_layout(&a.layout)?;
    let cfg = load_summary_config(a.summary_config.as_deref())?;
    let windows = read_corpus(&a.corpus).map_err(|e| CliError::Data(e.to_string()))?;
    check_windows(&windows)?;
    let mut records: Vec<TextRecord> = windows
        .par_iter()
        .map(|w| TextRecord::from(&summarize(w, &layout, &cfg)))
        .collect();
    if a.with_ablation_texts {
        records.extend(windows.iter().map(|w| TextRecord {
            window_id: format!("raw:{}", w.window_id),
            text: raw_event_text(w),
        }));
    }
    write_file(&a.out, &jsonl(&records))?;
    println!("{} records -> {}", records.len(), a.out.display());
    if let (Some(d), Some(out)) = (&a.descriptors, &a.descriptors_out) {
        let reg = load_registry(d)?;
        let mut recs: Vec<TextRecord> = reg
            .iter()
            .map(|d| TextRecord {
                window_id: descriptor_anchor_id(&d.label),
                text: d.text.clone(),
            })
            .collect();
        if a.with_ablation_texts {
            recs.extend(reg.bare_labels().iter().map(|d| TextRecord {
                window_id: format!("label:{}", d.label),
                text: d.text.clone(),
            }));
        }
        write_file(out, &jsonl(&recs))?;
        println!("{} records -> {}", recs.len(), out.display());
    }
    Ok(())
}

pub fn cmd_validate_config(a: &ValidateArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(&a.config).map_err(CliError::Config)?;
    let errs = loaded.resolved.validate();
    if !errs.is_empty() {
        return Err(CliError::Config(format!(
            "{} is invalid:\n  {}",
            a.config.display(),
            errs.join("\n  ")
        )));
    }
    println!("ok {}", loaded.digest);
    Ok(())
}

/// Everything a dataset contributes to an experiment.
struct PreparedDataset {
    name: String,
    windows: Vec<ActivityWindow>,
    layout: HomeLayout,
    descriptors: DescriptorRegistry,
    digests: Vec<(String, String)>,
}

fn digest_or_data(r: std::io::Result<String>, what: &str) -> Result<String, CliError> {
    r.map_err(|e| CliError::Data(format!("cannot hash {what}: {e}")))
}

fn prepare_dataset(d: &DatasetSpec) -> Result<PreparedDataset, CliError> {
    let layout = load_layout(&d.layout)?;
    let mapping = d.csv_mapping.as_deref().map(CsvMapping::load).transpose()?;
    let drop: BTreeSet<String> = d.drop_labels.iter().cloned().collect();
    let descriptors = load_registry(&d.descriptors)?.without(&drop);
    let (windows, _) = ingest_files(d.adapter, &d.paths, Some(&layout), mapping.as_ref())?;
    let windows = filter_labels(windows, &drop);
    let mut digests = vec![
        (
            "data".to_string(),
            digest_or_data(files_digest(&d.paths), "data")?,
        ),
        (
            "descriptors".to_string(),
            digest_or_data(file_digest(&d.descriptors), "descriptors")?,
        ),
        (
            "layout".to_string(),
            digest_or_data(file_digest(&d.layout), "layout")?,
        ),
    ];
    if let Some(m) = &d.csv_mapping {
        digests.push((
            "csv_mapping".into(),
            digest_or_data(file_digest(m), "csv mapping")?,
        ));
    }
    Ok(PreparedDataset {
        name: d.name.clone(),
        windows,
        layout,
        descriptors,
        digests,
    })
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    run_digest: &'a str,
    #[serde(flatten)]
    record: &'a T,
}

struct Artifacts {
    root: PathBuf,
    digest: String,
    flat: Vec<FlatRow>,
    headline: Vec<(String, String, EvaluationReport)>,
}

impl Artifacts {
    fn report(&mut self, rel: &str, report: &EvaluationReport) -> Result<(), CliError> {
        write_file(&self.root.join(rel), &to_pretty_json(report))?;
        self.flat.extend(flat_rows(report));
        Ok(())
    }

    fn confusion(&self, dir: &str, report: &EvaluationReport) -> Result<(), CliError> {
        let cm = &report.metrics.confusion;
        write_file(
            &self.root.join(dir).join("confusion.csv"),
            &confusion_csv(cm, &self.digest),
        )?;
        write_file(
            &self.root.join(dir).join("heatmap.txt"),
            &format!("run {}\n{}", self.digest, heatmap(cm)),
        )
    }
}

fn build_alt<'a>(
    cfg: &RunConfig,
    holder: &'a mut Option<Arc<dyn EmbeddingProvider>>,
) -> AltEncoder<'a> {
    let spec = match &cfg.alt_provider {
        Some(s) => s.clone(),
        None if cfg.provider.backend == Backend::Test => ProviderSpec {
            model_name: ALT_MODEL.to_string(),
            ..cfg.provider.clone()
        },
        None => return AltEncoder::unavailable("no alt_provider configured"),
    };
    match spec.build() {
        Ok(p) => {
            *holder = Some(p);
            AltEncoder::Ready(holder.as_deref().expect("just set"))
        }
        Err(e) => AltEncoder::Unavailable {
            model_name: spec.model_name.clone(),
            reason: e.to_string(),
        },
    }
}

pub fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let loaded = LoadedConfig::load(&a.config).map_err(CliError::Config)?;
    let mut cfg = loaded.resolved.clone();
    if let Some(ep) = a.endpoint.as_ref().filter(|e| !e.is_empty()) {
        cfg.provider.endpoint = Some(ep.clone());
    }
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(CliError::Config(format!(
            "{} is invalid:\n  {}",
            a.config.display(),
            errs.join("\n  ")
        )));
    }
    let summary = load_summary_config(cfg.summary_config.as_deref())?;
    let provider = cfg.provider.build().map_err(|e| provider_error(&e))?;
    let mut alt_holder = None;
    let alt = if matches!(cfg.experiment, ExperimentSpec::Ablation) {
        build_alt(&cfg, &mut alt_holder)
    } else {
        AltEncoder::unavailable("not requested")
    };

    let mut art = Artifacts {
        root: cfg.output_dir.clone(),
        digest: loaded.digest.clone(),
        flat: Vec::new(),
        headline: Vec::new(),
    };
    let mut ablation_tables = Vec::new();
    let mut fewshot_rows = String::new();

    for spec in &cfg.datasets {
        let ds = prepare_dataset(spec)?;
        let mut exp = Experiment::new(
            ds.name.clone(),
            &ds.windows,
            &ds.layout,
            &summary,
            &ds.descriptors,
            provider.as_ref(),
        )
        .with_metric(cfg.metric)
        .with_parallelism(cfg.parallelism)
        .with_digest("run", &loaded.digest);
        for (k, v) in &ds.digests {
            exp = exp.with_digest(k.clone(), v.clone());
        }
        if let Some(s) = &cfg.summary_config {
            exp = exp.with_digest("summary", digest_or_data(file_digest(s), "summary config")?);
        }
        let name = ds.name.as_str();
        match &cfg.experiment {
            ExperimentSpec::ZeroShot => {
                let run = run_zero_shot(&exp)?;
                art.report(&format!("{name}/zero_shot.report.json"), &run.report)?;
                art.confusion(name, &run.report)?;
                let stamped: Vec<Stamped<_>> = run
                    .predictions
                    .iter()
                    .map(|r| Stamped {
                        run_digest: &art.digest,
                        record: r,
                    })
                    .collect();
                write_file(
                    &art.root.join(name).join("predictions.jsonl"),
                    &jsonl(&stamped),
                )?;
                art.headline
                    .push((name.to_string(), "zero_shot".into(), run.report));
            }
            ExperimentSpec::Ablation => {
                let table = run_ablation(&exp, &alt)?;
                for row in &table.rows {
                    match row.outcome.report() {
                        Some(rep) => {
                            art.report(
                                &format!("{name}/ablation/{}.report.json", row.cell.key()),
                                rep,
                            )?;
                            art.headline
                                .push((name.to_string(), row.method.clone(), rep.clone()));
                        }
                        None => eprintln!("warning: {name}: `{}` unavailable", row.method),
                    }
                }
                if let Some(rep) = table.rows[0].outcome.report() {
                    art.confusion(name, rep)?;
                }
                ablation_tables.push(table);
            }
            ExperimentSpec::FewShot { shots, support } => {
                let sweep = run_few_shot(&exp, *support, shots, &cfg.seeds)?;
                art.report(
                    &format!("{name}/few_shot/baseline.report.json"),
                    &sweep.baseline,
                )?;
                for r in &sweep.runs {
                    art.report(
                        &format!(
                            "{name}/few_shot/shots-{}-seed-{}.report.json",
                            r.shots_per_class, r.seed
                        ),
                        &r.report,
                    )?;
                }
                write_file(
                    &art.root.join(name).join("few_shot").join("sweep.json"),
                    &to_pretty_json(&Stamped {
                        run_digest: &art.digest,
                        record: &sweep,
                    }),
                )?;
                let csv = fewshot_csv(name, &sweep, &art.digest);
                if fewshot_rows.is_empty() {
                    fewshot_rows.push_str(&csv);
                } else {
                    fewshot_rows.extend(csv.lines().skip(1).map(|l| format!("{l}\n")));
                }
                art.headline.push((
                    name.to_string(),
                    "zero_shot (eval split)".into(),
                    sweep.baseline.clone(),
                ));
                for agg in &sweep.aggregates {
                    println!(
                        "{name} shots={} runs={} mean_f1_weighted={:.4} variance={}",
                        agg.shots_per_class,
                        agg.runs,
                        agg.mean_f1_weighted,
                        agg.variance_f1_weighted
                            .map(|v| format!("{v:.6}"))
                            .unwrap_or_else(|| "n/a".into())
                    );
                }
            }
        }
    }

    write_file(
        &art.root.join("metrics.csv"),
        &flat_csv(&art.flat, &art.digest),
    )?;
    if !ablation_tables.is_empty() {
        write_file(
            &art.root.join("ablation.csv"),
            &ablation_csv(&ablation_tables, &art.digest),
        )?;
    }
    if !fewshot_rows.is_empty() {
        write_file(&art.root.join("few_shot.csv"), &fewshot_rows)?;
    }
    write_file(
        &art.root.join("run.toml"),
        &format!(
            "# run digest {}\n{}",
            loaded.digest,
            loaded.written.to_toml_string()
        ),
    )?;

    println!("run {}", loaded.digest);
    println!(
        "{:<12} {:<40} {:>8} {:>8} {:>8}",
        "dataset", "config", "acc", "f1_w", "f1_m"
    );
    for (ds, config, rep) in &art.headline {
        let m = &rep.metrics;
        println!(
            "{ds:<12} {config:<40} {:>8.4} {:>8.4} {:>8.4}",
            m.accuracy, m.f1_weighted, m.f1_macro
        );
    }
    println!("artifacts in {}", art.root.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TextDigest;

    #[test]
    fn cache_miss_listing_is_capped() {
        let digests: Vec<TextDigest> = (0..25).map(|i| TextDigest::of(&i.to_string())).collect();
        let e = provider_error(&EmbedError::CacheMiss {
            digests: digests.clone(),
        });
        assert_eq!(e.exit_code(), 3);
        let msg = e.message();
        assert!(msg.contains(&digests[19].to_hex()));
        assert!(!msg.contains(&digests[20].to_hex()));
        assert!(msg.contains("and 5 more"));
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(CliError::from(EvalError::EmptyCorpus).exit_code(), 2);
        assert_eq!(
            CliError::from(EvalError::MissingDescriptors(vec!["X".into()])).exit_code(),
            1
        );
        assert_eq!(
            CliError::from(EvalError::Embed(EmbedError::ZeroNorm)).exit_code(),
            3
        );
    }

    #[test]
    fn help_lists_every_flag() {
        use clap::CommandFactory;
        let mut cmd = Cli::command();
        for sub in cmd.get_subcommands_mut() {
            let help = sub.render_long_help().to_string();
            for arg in sub.get_arguments() {
                if let Some(long) = arg.get_long() {
                    assert!(
                        help.contains(&format!("--{long}")),
                        "{} lacks --{long}",
                        sub.get_name()
                    );
                }
            }
        }
        let run_help = cmd
            .find_subcommand_mut("run")
            .unwrap()
            .render_long_help()
            .to_string();
        assert!(run_help.contains(ENDPOINT_ENV));
    }
}
