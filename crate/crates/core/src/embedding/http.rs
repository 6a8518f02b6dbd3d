//! Client for a remote embedding service.
//!
//! Wire contract: `POST <endpoint>` with `{"model": ..., "texts": [...]}`,
//! answered by `{"dim": n, "vectors": [[...], ...]}`.

use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::{Backend, EmbedError, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f32>>,
}

pub struct HttpProvider {
    client: Client,
    endpoint: String,
    model_name: String,
    dim: usize,
    batch_size: usize,
    max_in_flight: usize,
    max_attempts: u32,
    backoff: Duration,
}

enum Failure {
    Retry(String),
    Fatal(EmbedError),
}

impl HttpProvider {
    pub fn new(
        endpoint: impl Into<String>,
        model_name: &str,
        dim: usize,
        batch_size: usize,
        max_in_flight: usize,
        max_attempts: u32,
    ) -> Result<Self, EmbedError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbedError::Config(e.to_string()))?;
        Ok(HttpProvider {
            client,
            endpoint: endpoint.into(),
            model_name: model_name.to_string(),
            dim,
            batch_size: batch_size.max(1),
            max_in_flight: max_in_flight.max(1),
            max_attempts: max_attempts.max(1),
            backoff: Duration::from_millis(200),
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, Failure> {
        let body = EmbedRequest {
            model: self.model_name.clone(),
            texts: texts.to_vec(),
        };
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .map_err(|e| Failure::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Failure::Retry(format!("server answered {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(EmbedError::Http {
                attempts: 1,
                message: format!("server answered {status}"),
            }));
        }
        let parsed: EmbedResponse = resp
            .json()
            .map_err(|e| Failure::Retry(format!("bad response body: {e}")))?;
        if parsed.dim != self.dim {
            return Err(Failure::Fatal(EmbedError::DimMismatch {
                expected: self.dim,
                found: parsed.dim,
            }));
        }
        Ok(parsed.vectors)
    }

    fn embed_chunk(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            match self.attempt(texts) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(EmbedError::Http { message, .. })) => {
                    return Err(EmbedError::Http {
                        attempts: attempt,
                        message,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    last = msg;
                    if attempt < self.max_attempts {
                        std::thread::sleep(self.backoff * attempt);
                    }
                }
            }
        }
        Err(EmbedError::Http {
            attempts: self.max_attempts,
            message: last,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn backend(&self) -> Backend {
        Backend::Http
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Splits into batches and keeps at most `max_in_flight` requests open.
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let chunks: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.max_in_flight) {
            let results: Vec<Result<Vec<Vec<f32>>, EmbedError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| s.spawn(move || self.embed_chunk(chunk)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for (chunk, r) in wave.iter().zip(results) {
                let vectors = r?;
                if vectors.len() != chunk.len() {
                    return Err(EmbedError::CountMismatch {
                        expected: chunk.len(),
                        found: vectors.len(),
                    });
                }
                out.extend(vectors);
            }
        }
        Ok(out)
    }
}
