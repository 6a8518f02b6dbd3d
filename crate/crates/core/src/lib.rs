//! Zero-shot activity recognition for smart homes.
//!
//! Sensor-event windows are rendered into short natural-language summaries,
//! activity labels into one-sentence descriptions, and both are embedded with
//! a pretrained sentence encoder. Each window gets the label whose embedding
//! is most similar to its summary's. Labeled exemplar windows, when available,
//! join the descriptions as extra anchors.
//!
//! Modules follow the pipeline:
//!
//! - [`model`]: events, windows, labels, home layouts
//! - [`ingest`]: CASAS and CSV parsing, annotation-based segmentation
//! - [`textgen`]: summaries and the descriptor registry
//! - [`embedding`]: encoder backends (file cache, HTTP, deterministic test embedder)
//! - [`classify`]: similarity argmax over descriptor and exemplar anchors
//! - [`evaluate`]: metrics and the zero-shot, ablation and few-shot runners
//! - [`cli`]: run configuration and the `zshar` command implementations

pub mod classify;
pub mod cli;
pub mod embedding;
pub mod evaluate;
pub mod ingest;
pub mod model;
pub mod textgen;
