//! Run manifests: one TOML file describes datasets, provider and experiment.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::Metric;
use crate::embedding::{Backend, ProviderSpec};
use crate::evaluate::SupportSplit;
use crate::ingest::CsvMapping;
use crate::model::HomeLayout;
use crate::textgen::{load_descriptors, SummaryConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    /// Whitespace-separated CASAS event log
    Casas,
    /// Header CSV read through a column mapping
    Csv,
    /// Already-ingested line-delimited corpus
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub adapter: Adapter,
    pub paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_mapping: Option<PathBuf>,
    pub layout: PathBuf,
    pub descriptors: PathBuf,
    /// Ground-truth labels removed from both corpus and descriptors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drop_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    ZeroShot,
    Ablation,
    FewShot {
        shots: Vec<usize>,
        #[serde(default)]
        support: SupportSplit,
    },
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_config: Option<PathBuf>,
    #[serde(default)]
    pub metric: Metric,
    /// Worker threads for classification; 0 means one per core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub provider: ProviderSpec,
    /// Encoder for the alternate-encoder ablation cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_provider: Option<ProviderSpec>,
    pub experiment: ExperimentSpec,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_provider(base: &Path, spec: &ProviderSpec) -> ProviderSpec {
    let mut out = spec.clone();
    out.cache_path = spec.cache_path.as_deref().map(|p| resolve(base, p));
    out
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    /// SHA-256 over the canonical JSON form, as written (paths unresolved).
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("run configs serialize");
        hex::encode(Sha256::digest(&json))
    }

    /// Copy with every relative path joined onto `base`.
    pub fn resolved(&self, base: &Path) -> RunConfig {
        let mut out = self.clone();
        out.output_dir = resolve(base, &self.output_dir);
        out.summary_config = self.summary_config.as_deref().map(|p| resolve(base, p));
        out.provider = resolve_provider(base, &self.provider);
        out.alt_provider = self
            .alt_provider
            .as_ref()
            .map(|p| resolve_provider(base, p));
        for d in &mut out.datasets {
            d.paths = d.paths.iter().map(|p| resolve(base, p)).collect();
            d.csv_mapping = d.csv_mapping.as_deref().map(|p| resolve(base, p));
            d.layout = resolve(base, &d.layout);
            d.descriptors = resolve(base, &d.descriptors);
        }
        out
    }

    /// All problems with a resolved config; empty when it is runnable.
    ///
    /// Creates the output directory to prove it is writable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let need_file = |what: &str, p: &Path, errs: &mut Vec<String>| {
            if !p.is_file() {
                errs.push(format!("{what} not found: {}", p.display()));
                false
            } else {
                true
            }
        };
        if self.datasets.is_empty() {
            errs.push("no [[dataset]] entries".into());
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if d.name.is_empty() || d.name.contains(['/', '\\']) || d.name.starts_with('.') {
                errs.push(format!(
                    "dataset name `{}` is not a plain directory name",
                    d.name
                ));
            }
            if !names.insert(d.name.as_str()) {
                errs.push(format!("duplicate dataset name `{}`", d.name));
            }
            if d.paths.is_empty() {
                errs.push(format!("dataset `{}` lists no paths", d.name));
            }
            for p in &d.paths {
                need_file("data file", p, &mut errs);
            }
            match (d.adapter, &d.csv_mapping) {
                (Adapter::Csv, None) => errs.push(format!(
                    "dataset `{}`: csv adapter needs csv_mapping",
                    d.name
                )),
                (Adapter::Csv, Some(m)) if need_file("csv mapping", m, &mut errs) => {
                    if let Err(e) = CsvMapping::load(m) {
                        errs.push(e.to_string());
                    }
                }
                _ => {}
            }
            if need_file("layout", &d.layout, &mut errs) {
                if let Err(e) = HomeLayout::load(&d.layout) {
                    errs.push(e.to_string());
                }
            }
            if need_file("descriptors", &d.descriptors, &mut errs) {
                if let Err(e) = load_descriptors(&d.descriptors) {
                    errs.push(e.to_string());
                }
            }
        }
        if let Some(s) = &self.summary_config {
            if need_file("summary config", s, &mut errs) {
                if let Err(e) = SummaryConfig::load(s) {
                    errs.push(e.to_string());
                }
            }
        }
        let providers = std::iter::once(("provider", &self.provider))
            .chain(self.alt_provider.iter().map(|p| ("alt_provider", p)));
        for (what, p) in providers {
            if p.dim == 0 {
                errs.push(format!("{what}: dim must be positive"));
            }
            match p.backend {
                Backend::Cache => match &p.cache_path {
                    None => errs.push(format!("{what}: cache backend needs cache_path")),
                    // A missing alternate cache only disables its ablation cell.
                    Some(c) if what == "provider" => {
                        need_file("embedding cache", c, &mut errs);
                    }
                    Some(_) => {}
                },
                Backend::Http if p.resolved_endpoint().is_none() => errs.push(format!(
                    "{what}: http backend needs endpoint or EMBED_ENDPOINT"
                )),
                _ => {}
            }
        }
        if self.seeds.is_empty() {
            errs.push("seeds must not be empty".into());
        }
        if let ExperimentSpec::FewShot { shots, support } = &self.experiment {
            if shots.is_empty() {
                errs.push("few_shot: shots must not be empty".into());
            }
            if let SupportSplit::Fraction { fraction } = support {
                if !(0.0..=1.0).contains(fraction) {
                    errs.push("few_shot: support fraction must lie in [0, 1]".into());
                }
            }
        }
        if let Err(e) = check_writable(&self.output_dir) {
            errs.push(format!("output_dir {}: {e}", self.output_dir.display()));
        }
        errs
    }
}

fn check_writable(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".zshar-write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)
}

/// A config as written, its digest, and the copy with paths resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub written: RunConfig,
    pub resolved: RunConfig,
    pub digest: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let written =
            RunConfig::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolved = written.resolved(base);
        Ok(LoadedConfig {
            path: path.to_path_buf(),
            digest: written.digest(),
            written,
            resolved,
        })
    }
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// SHA-256 over several files, each prefixed by its length.
pub fn files_digest(paths: &[PathBuf]) -> std::io::Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = std::fs::read(p)?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
output_dir = "out"
seeds = [1, 2]

[provider]
backend = "test"
dim = 32

[experiment]
kind = "few_shot"
shots = [0, 1]

[experiment.support]
policy = "earliest"
per_class = 2

[[dataset]]
name = "toy"
adapter = "corpus"
paths = ["corpus.jsonl"]
layout = "layout.toml"
descriptors = "descriptors.toml"
drop_labels = ["Other"]
"#;

    #[test]
    fn parses_and_round_trips_through_digest() {
        let c = RunConfig::from_toml_str(CONFIG).unwrap();
        assert_eq!(c.metric, Metric::Cosine);
        assert!(matches!(
            c.experiment,
            ExperimentSpec::FewShot { ref shots, support: SupportSplit::Earliest { per_class: 2 } } if shots == &[0, 1]
        ));
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        let other = RunConfig::from_toml_str(&CONFIG.replace("dim = 32", "dim = 16")).unwrap();
        assert_ne!(other.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str(&format!("{CONFIG}\nbogus = 1\n")).is_err());
    }

    #[test]
    fn resolves_relative_paths_only() {
        let c = RunConfig::from_toml_str(CONFIG)
            .unwrap()
            .resolved(Path::new("/base"));
        assert_eq!(c.output_dir, Path::new("/base/out"));
        assert_eq!(c.datasets[0].layout, Path::new("/base/layout.toml"));
    }

    #[test]
    fn validation_names_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::from_toml_str(CONFIG)
            .unwrap()
            .resolved(dir.path());
        let errs = c.validate();
        assert!(errs.iter().any(|e| e.contains("corpus.jsonl")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("layout.toml")), "{errs:?}");
        assert!(dir.path().join("out").is_dir());
    }
}
