//! Registry of one-sentence activity descriptions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("duplicate descriptor for label `{0}`")]
    Duplicate(String),
    #[error("descriptor `{label}`: {reason}")]
    Invalid { label: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityDescriptor {
    pub label: String,
    pub text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    /// Relaxes the one-sentence rule; meant for synthetic fixtures.
    #[serde(default)]
    allow_multi_sentence: bool,
    #[serde(default)]
    descriptor: Vec<ActivityDescriptor>,
}

/// Label → descriptor, iterated in canonical (lexicographic) label order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DescriptorRegistry {
    entries: BTreeMap<String, ActivityDescriptor>,
    #[serde(skip)]
    warnings: Vec<String>,
}

fn check_text(label: &str, text: &str, allow_multi: bool) -> Result<(), DescriptorError> {
    let fail = |reason: &str| DescriptorError::Invalid {
        label: label.to_string(),
        reason: reason.to_string(),
    };
    let body = text.trim();
    if body.is_empty() {
        return Err(fail("empty text"));
    }
    if body.contains(['<', '>']) {
        return Err(fail("contains a placeholder token"));
    }
    if !allow_multi {
        let inner = body.strip_suffix(['.', '!', '?']).unwrap_or(body);
        if inner.contains(['.', '!', '?']) {
            return Err(fail("must be exactly one sentence"));
        }
    }
    Ok(())
}

/// Soft checks on the recommended duration → location ordering.
pub fn lint_descriptor(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let duration = ["second", "minute", "hour"]
        .iter()
        .filter_map(|w| lower.find(w))
        .min();
    let location = [" in the ", " at the "]
        .iter()
        .filter_map(|w| lower.find(w))
        .min();
    let mut out = Vec::new();
    match (duration, location) {
        (None, _) => out.push("does not mention a likely duration".to_string()),
        (Some(d), Some(l)) if l < d => {
            out.push("mentions the location before the duration".to_string())
        }
        _ => {}
    }
    out
}

impl DescriptorRegistry {
    /// Builds a validated registry from `(label, text)` pairs.
    pub fn from_pairs<I, L, T>(pairs: I) -> Result<Self, DescriptorError>
    where
        I: IntoIterator<Item = (L, T)>,
        L: Into<String>,
        T: Into<String>,
    {
        Self::build(pairs, false)
    }

    fn build<I, L, T>(pairs: I, allow_multi: bool) -> Result<Self, DescriptorError>
    where
        I: IntoIterator<Item = (L, T)>,
        L: Into<String>,
        T: Into<String>,
    {
        let mut reg = DescriptorRegistry::default();
        for (label, text) in pairs {
            let (label, text) = (label.into(), text.into());
            if label.trim().is_empty() {
                return Err(DescriptorError::Invalid {
                    label,
                    reason: "empty label".into(),
                });
            }
            check_text(&label, &text, allow_multi)?;
            for w in lint_descriptor(&text) {
                reg.warnings.push(format!("descriptor `{label}` {w}"));
            }
            if reg.entries.contains_key(&label) {
                return Err(DescriptorError::Duplicate(label));
            }
            let text = text.trim().to_string();
            reg.entries
                .insert(label.clone(), ActivityDescriptor { label, text });
        }
        Ok(reg)
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, DescriptorError> {
        let file: DescriptorFile = toml::from_str(text).map_err(|e| DescriptorError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Self::build(
            file.descriptor.into_iter().map(|d| (d.label, d.text)),
            file.allow_multi_sentence,
        )
    }

    pub fn get(&self, label: &str) -> Option<&ActivityDescriptor> {
        self.entries.get(label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.contains_key(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Labels in canonical order.
    pub fn labels(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActivityDescriptor> {
        self.entries.values()
    }

    /// Lint findings collected while loading.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn without(&self, drop: &BTreeSet<String>) -> DescriptorRegistry {
        DescriptorRegistry {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| !drop.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// Registry whose texts are the bare label names with underscores as spaces.
    pub fn bare_labels(&self) -> DescriptorRegistry {
        DescriptorRegistry {
            entries: self
                .entries
                .keys()
                .map(|k| {
                    (
                        k.clone(),
                        ActivityDescriptor {
                            label: k.clone(),
                            text: k.replace('_', " "),
                        },
                    )
                })
                .collect(),
            warnings: Vec::new(),
        }
    }
}

/// Loads and validates a descriptor file.
///
/// ```toml
/// [[descriptor]]
/// label = "Desk_Activity"
/// text = "Desk Activity takes place for minutes when a person uses the desk"
/// ```
pub fn load_descriptors(path: impl AsRef<Path>) -> Result<DescriptorRegistry, DescriptorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DescriptorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    DescriptorRegistry::from_toml_str(&text, &path.display().to_string())
}
