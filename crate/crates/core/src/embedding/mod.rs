//! Sentence-encoder backends.
//!
//! Every provider hands back L2-normalized vectors, so cosine similarity and
//! Euclidean distance rank anchors identically downstream.

mod cache;
mod hashed;
mod http;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{
    cache_read, cache_write, read_cache_bytes, write_cache_bytes, CacheProvider, EmbeddingCache,
    CACHE_MAGIC, CACHE_VERSION,
};
pub use hashed::{test_embed, TestEmbedder};
pub use http::{EmbedRequest, EmbedResponse, HttpProvider};

pub const DEFAULT_MODEL: &str = "all-distilroberta-v1";
pub const ALT_MODEL: &str = "paraphrase-distilroberta-base-v2";
pub const DEFAULT_DIM: usize = 768;
/// Overrides the HTTP provider endpoint when set.
pub const ENDPOINT_ENV: &str = "EMBED_ENDPOINT";

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot embed an empty batch")]
    EmptyBatch,
    #[error("text {index} is empty")]
    EmptyText { index: usize },
    #[error("embedding has a non-finite component")]
    NonFinite,
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("provider returned {found} vectors for {expected} texts")]
    CountMismatch { expected: usize, found: usize },
    #[error("{} text(s) missing from cache, first {}", digests.len(), digests[0])]
    CacheMiss { digests: Vec<TextDigest> },
    #[error("cache was built with model `{found}`, expected `{expected}`")]
    ModelMismatch { expected: String, found: String },
    #[error("corrupt cache at byte {offset}: {reason}")]
    CorruptCache { offset: u64, reason: String },
    #[error("http embedding failed after {attempts} attempt(s): {message}")]
    Http { attempts: u32, message: String },
    #[error("provider misconfigured: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl EmbedError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, EmbedError::Http { .. })
    }
}

/// SHA-256 of the exact text bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TextDigest(pub [u8; 32]);

impl TextDigest {
    pub fn of(text: &str) -> TextDigest {
        TextDigest(Sha256::digest(text.as_bytes()).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for TextDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TextDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TextDigest({})", &self.to_hex()[..12])
    }
}

/// A finite, fixed-dimension vector tied to the text it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    vector: Vec<f32>,
    source_text_hash: TextDigest,
}

impl Embedding {
    pub fn new(vector: Vec<f32>, source_text_hash: TextDigest) -> Result<Self, EmbedError> {
        if vector.is_empty() {
            return Err(EmbedError::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Embedding {
            vector,
            source_text_hash,
        })
    }

    pub fn for_text(text: &str, vector: Vec<f32>) -> Result<Self, EmbedError> {
        Self::new(vector, TextDigest::of(text))
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &[f32] {
        &self.vector
    }

    pub fn source_text_hash(&self) -> TextDigest {
        self.source_text_hash
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.vector)
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Scales to unit Euclidean norm.
    pub fn normalized(mut self) -> Result<Self, EmbedError> {
        normalize_in_place(&mut self.vector)?;
        Ok(self)
    }
}

pub(crate) fn l2_norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|x| f64::from(*x) * f64::from(*x))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn normalize_in_place(v: &mut [f32]) -> Result<(), EmbedError> {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(EmbedError::ZeroNorm);
    }
    for x in v.iter_mut() {
        *x = (f64::from(*x) / norm) as f32;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Cache,
    Http,
    Test,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Cache => "cache",
            Backend::Http => "http",
            Backend::Test => "test",
        })
    }
}

/// The sentence encoder.
///
/// Implementors supply raw vectors; [`EmbeddingProvider::embed_batch`]
/// enforces the shared contract (order, dimension, normalization).
pub trait EmbeddingProvider: Send + Sync {
    fn backend(&self) -> Backend;
    fn model_name(&self) -> &str;
    fn dim(&self) -> usize;

    /// One raw vector per text, in order.
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        if let Some(index) = texts.iter().position(|t| t.is_empty()) {
            return Err(EmbedError::EmptyText { index });
        }
        let raw = self.embed_raw(texts)?;
        if raw.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                expected: texts.len(),
                found: raw.len(),
            });
        }
        raw.into_iter()
            .zip(texts)
            .map(|(v, t)| {
                if v.len() != self.dim() {
                    return Err(EmbedError::DimMismatch {
                        expected: self.dim(),
                        found: v.len(),
                    });
                }
                Embedding::for_text(t, v)?.normalized()
            })
            .collect()
    }
}

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

fn default_batch_size() -> usize {
    64
}

fn default_in_flight() -> usize {
    4
}

fn default_attempts() -> u32 {
    3
}

/// Declarative provider choice, as written in run configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub backend: Backend,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

impl ProviderSpec {
    pub fn test(dim: usize) -> Self {
        ProviderSpec {
            backend: Backend::Test,
            model_name: DEFAULT_MODEL.to_string(),
            dim,
            cache_path: None,
            endpoint: None,
            batch_size: default_batch_size(),
            max_in_flight: default_in_flight(),
            max_attempts: default_attempts(),
        }
    }

    pub fn cache(path: impl Into<PathBuf>, model_name: &str, dim: usize) -> Self {
        ProviderSpec {
            backend: Backend::Cache,
            model_name: model_name.to_string(),
            cache_path: Some(path.into()),
            ..ProviderSpec::test(dim)
        }
    }

    /// Endpoint after applying the `EMBED_ENDPOINT` override.
    pub fn resolved_endpoint(&self) -> Option<String> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| self.endpoint.clone())
    }

    pub fn build(&self) -> Result<Arc<dyn EmbeddingProvider>, EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::Config("dim must be positive".into()));
        }
        match self.backend {
            Backend::Test => Ok(Arc::new(TestEmbedder::with_model(
                &self.model_name,
                self.dim,
            ))),
            Backend::Cache => {
                let path = self
                    .cache_path
                    .as_ref()
                    .ok_or_else(|| EmbedError::Config("cache backend needs cache_path".into()))?;
                let cache = cache_read(path)?;
                Ok(Arc::new(CacheProvider::new(
                    cache,
                    &self.model_name,
                    self.dim,
                )?))
            }
            Backend::Http => {
                let endpoint = self.resolved_endpoint().ok_or_else(|| {
                    EmbedError::Config(format!("http backend needs endpoint or {ENDPOINT_ENV}"))
                })?;
                Ok(Arc::new(HttpProvider::new(
                    endpoint,
                    &self.model_name,
                    self.dim,
                    self.batch_size,
                    self.max_in_flight,
                    self.max_attempts,
                )?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Vec<f32>>, usize);

    impl EmbeddingProvider for Fixed {
        fn backend(&self) -> Backend {
            Backend::Test
        }
        fn model_name(&self) -> &str {
            "fixed"
        }
        fn dim(&self) -> usize {
            self.1
        }
        fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
            Ok(self.0.iter().take(texts.len()).cloned().collect())
        }
    }

    #[test]
    fn batch_contract_normalizes() {
        let p = Fixed(vec![vec![3.0, 4.0], vec![0.0, 2.0]], 2);
        let out = p.embed_batch(&["a".into(), "b".into()]).unwrap();
        assert_eq!(out[0].vector(), &[0.6, 0.8]);
        assert_eq!(out[1].vector(), &[0.0, 1.0]);
        assert_eq!(out[0].source_text_hash(), TextDigest::of("a"));
        assert!(out.iter().all(Embedding::is_unit));
    }

    #[test]
    fn batch_contract_errors() {
        let p = Fixed(vec![vec![1.0, 0.0, 0.0]], 2);
        assert!(matches!(
            p.embed_batch(&["a".into()]),
            Err(EmbedError::DimMismatch {
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(p.embed_batch(&[]), Err(EmbedError::EmptyBatch)));
        assert!(matches!(
            p.embed_batch(&["".into()]),
            Err(EmbedError::EmptyText { index: 0 })
        ));
        let short = Fixed(vec![vec![1.0, 0.0]], 2);
        assert!(matches!(
            short.embed_batch(&["a".into(), "b".into()]),
            Err(EmbedError::CountMismatch { .. })
        ));
        let zero = Fixed(vec![vec![0.0, 0.0]], 2);
        assert!(matches!(
            zero.embed_batch(&["a".into()]),
            Err(EmbedError::ZeroNorm)
        ));
    }

    #[test]
    fn embedding_rejects_non_finite() {
        assert!(matches!(
            Embedding::for_text("x", vec![1.0, f32::NAN]),
            Err(EmbedError::NonFinite)
        ));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            TextDigest::of("abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn provider_spec_defaults() {
        let spec: ProviderSpec = toml::from_str("backend = \"test\"").unwrap();
        assert_eq!(spec.model_name, DEFAULT_MODEL);
        assert_eq!(spec.dim, 768);
        let p = spec.build().unwrap();
        assert_eq!(p.dim(), 768);
        assert_eq!(p.backend(), Backend::Test);
    }

    #[test]
    fn cache_spec_needs_path() {
        let spec: ProviderSpec = toml::from_str("backend = \"cache\"").unwrap();
        assert!(matches!(spec.build(), Err(EmbedError::Config(_))));
    }
}
