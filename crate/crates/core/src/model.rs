//! Shared domain types: sensor events, activity windows, labels and home layouts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("sensor id must be non-empty")]
    EmptySensorId,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("layout sensor `{sensor_id}`: {reason}")]
    InvalidLayout { sensor_id: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

/// Kind of sensor that produced an event.
///
/// Unrecognized raw kinds map to [`Modality::Other`]; parsing never fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Modality {
    Motion,
    Door,
    Magnetic,
    Pressure,
    Switch,
    Temperature,
    SmartPlug,
    SmartphoneApp,
    #[default]
    Other,
}

impl Modality {
    pub const ALL: [Modality; 9] = [
        Modality::Motion,
        Modality::Door,
        Modality::Magnetic,
        Modality::Pressure,
        Modality::Switch,
        Modality::Temperature,
        Modality::SmartPlug,
        Modality::SmartphoneApp,
        Modality::Other,
    ];

    /// Lenient parse of a raw modality name.
    pub fn from_raw(raw: &str) -> Modality {
        let norm: String = raw
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "motion" | "pir" => Modality::Motion,
            "door" | "contact" => Modality::Door,
            "magnetic" => Modality::Magnetic,
            "pressure" | "pressuremat" => Modality::Pressure,
            "switch" => Modality::Switch,
            "temperature" | "temp" => Modality::Temperature,
            "smartplug" | "plug" => Modality::SmartPlug,
            "smartphoneapp" | "smartphone" | "app" => Modality::SmartphoneApp,
            _ => Modality::Other,
        }
    }

    /// Canonical machine name used in files.
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Motion => "motion",
            Modality::Door => "door",
            Modality::Magnetic => "magnetic",
            Modality::Pressure => "pressure",
            Modality::Switch => "switch",
            Modality::Temperature => "temperature",
            Modality::SmartPlug => "smart_plug",
            Modality::SmartphoneApp => "smartphone_app",
            Modality::Other => "other",
        }
    }

    /// Word used when the modality appears in prose.
    pub fn word(self) -> &'static str {
        match self {
            Modality::SmartPlug => "smart plug",
            Modality::SmartphoneApp => "smartphone app",
            Modality::Other => "unidentified",
            m => m.as_str(),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Modality {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Modality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(Modality::from_raw(&raw))
    }
}

/// One timestamped sensor firing. Timestamps are zone-naive local time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    into = "(NaiveDateTime, String, Modality, String)",
    try_from = "(NaiveDateTime, String, Modality, String)"
)]
pub struct SensorEvent {
    pub timestamp: NaiveDateTime,
    pub sensor_id: String,
    pub modality: Modality,
    pub value: String,
}

impl SensorEvent {
    pub fn new(
        timestamp: NaiveDateTime,
        sensor_id: impl Into<String>,
        modality: Modality,
        value: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let sensor_id = sensor_id.into();
        if sensor_id.is_empty() {
            return Err(ModelError::EmptySensorId);
        }
        Ok(SensorEvent {
            timestamp,
            sensor_id,
            modality,
            value: value.into(),
        })
    }
}

impl From<SensorEvent> for (NaiveDateTime, String, Modality, String) {
    fn from(e: SensorEvent) -> Self {
        (e.timestamp, e.sensor_id, e.modality, e.value)
    }
}

impl TryFrom<(NaiveDateTime, String, Modality, String)> for SensorEvent {
    type Error = ModelError;

    fn try_from(t: (NaiveDateTime, String, Modality, String)) -> Result<Self, Self::Error> {
        SensorEvent::new(t.0, t.1, t.2, t.3)
    }
}

/// An ordered run of events forming one datapoint to classify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityWindow {
    pub window_id: String,
    pub ground_truth: Option<String>,
    pub events: Vec<SensorEvent>,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

/// A broken [`ActivityWindow`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyWindowId,
    EmptyEvents,
    Unsorted { index: usize },
    StartMismatch,
    EndMismatch,
    StartAfterEnd,
    EmptySensorId { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyWindowId => f.write_str("empty window id"),
            Violation::EmptyEvents => f.write_str("empty events"),
            Violation::Unsorted { index } => write!(f, "unsorted at event {index}"),
            Violation::StartMismatch => f.write_str("start does not match first event"),
            Violation::EndMismatch => f.write_str("end does not match last event"),
            Violation::StartAfterEnd => f.write_str("start after end"),
            Violation::EmptySensorId { index } => write!(f, "empty sensor id at event {index}"),
        }
    }
}

impl ActivityWindow {
    /// Builds a window whose `start`/`end` are taken from the first and last event.
    ///
    /// An empty event list yields a window that fails [`ActivityWindow::validate`].
    pub fn new(
        window_id: impl Into<String>,
        ground_truth: Option<String>,
        events: Vec<SensorEvent>,
    ) -> Self {
        let start = events.first().map(|e| e.timestamp).unwrap_or_default();
        let end = events.last().map(|e| e.timestamp).unwrap_or_default();
        ActivityWindow {
            window_id: window_id.into(),
            ground_truth,
            events,
            start,
            end,
        }
    }

    /// All invariant violations; empty when the window is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.window_id.is_empty() {
            out.push(Violation::EmptyWindowId);
        }
        if self.events.is_empty() {
            out.push(Violation::EmptyEvents);
            return out;
        }
        for (i, pair) in self.events.windows(2).enumerate() {
            if pair[1].timestamp < pair[0].timestamp {
                out.push(Violation::Unsorted { index: i + 1 });
                break;
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.sensor_id.is_empty() {
                out.push(Violation::EmptySensorId { index: i });
            }
        }
        if self.start != self.events[0].timestamp {
            out.push(Violation::StartMismatch);
        }
        if self.end != self.events[self.events.len() - 1].timestamp {
            out.push(Violation::EndMismatch);
        }
        if self.start > self.end {
            out.push(Violation::StartAfterEnd);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn duration(&self) -> chrono::Duration {
        self.end - self.start
    }
}

/// Line-delimited corpus record; `start`/`end` are recomputed on read.
#[derive(Serialize, Deserialize)]
struct WindowRecord {
    window_id: String,
    ground_truth: Option<String>,
    events: Vec<SensorEvent>,
}

impl Serialize for ActivityWindow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WindowRecord {
            window_id: self.window_id.clone(),
            ground_truth: self.ground_truth.clone(),
            events: self.events.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ActivityWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = WindowRecord::deserialize(d)?;
        Ok(ActivityWindow::new(r.window_id, r.ground_truth, r.events))
    }
}

/// An activity class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivityLabel {
    pub name: String,
    pub display: String,
}

impl ActivityLabel {
    /// Display form replaces underscores with spaces.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let display = name.replace('_', " ");
        ActivityLabel { name, display }
    }
}

/// Sorts labels lexicographically by name, rejecting duplicates.
pub fn canonical_label_order<I>(labels: I) -> Result<Vec<ActivityLabel>, ModelError>
where
    I: IntoIterator<Item = ActivityLabel>,
{
    let mut out: Vec<ActivityLabel> = labels.into_iter().collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    if let Some(pair) = out.windows(2).find(|p| p[0].name == p[1].name) {
        return Err(ModelError::DuplicateLabel(pair[0].name.clone()));
    }
    Ok(out)
}

/// Layout metadata for one sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorInfo {
    pub location_phrase: String,
    pub context_phrase: String,
    #[serde(default)]
    pub modality: Modality,
}

pub const UNKNOWN_LOCATION: &str = "in an unknown location";

impl SensorInfo {
    /// Record used for sensors absent from the layout.
    pub fn fallback(modality: Modality) -> SensorInfo {
        SensorInfo {
            location_phrase: UNKNOWN_LOCATION.to_string(),
            context_phrase: format!("{} sensor", modality.word()),
            modality,
        }
    }
}

/// Per-sensor prose phrases for one home.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomeLayout {
    pub home_name: String,
    #[serde(default)]
    pub sensors: BTreeMap<String, SensorInfo>,
}

impl HomeLayout {
    pub fn new(home_name: impl Into<String>) -> Self {
        HomeLayout {
            home_name: home_name.into(),
            sensors: BTreeMap::new(),
        }
    }

    /// Looks up a sensor; unmapped ids get the fallback record with modality `other`.
    pub fn lookup(&self, sensor_id: &str) -> SensorInfo {
        self.lookup_with_hint(sensor_id, Modality::Other)
    }

    /// Like [`HomeLayout::lookup`], but the fallback names `hint` instead of `other`.
    pub fn lookup_with_hint(&self, sensor_id: &str, hint: Modality) -> SensorInfo {
        match self.sensors.get(sensor_id) {
            Some(info) => info.clone(),
            None => SensorInfo::fallback(hint),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (id, info) in &self.sensors {
            if id.is_empty() {
                return Err(ModelError::InvalidLayout {
                    sensor_id: id.clone(),
                    reason: "empty sensor id".into(),
                });
            }
            for (field, text) in [
                ("location_phrase", &info.location_phrase),
                ("context_phrase", &info.context_phrase),
            ] {
                if let Some(reason) = phrase_problem(text) {
                    return Err(ModelError::InvalidLayout {
                        sensor_id: id.clone(),
                        reason: format!("{field} {reason}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ModelError> {
        let layout: HomeLayout = toml::from_str(text).map_err(|e| ModelError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }
}

/// Reason a prose fragment cannot be spliced into generated text.
///
/// Digits are rejected because generated summaries must stay digit-free.
pub(crate) fn phrase_problem(text: &str) -> Option<&'static str> {
    if text.trim().is_empty() {
        Some("is empty")
    } else if text.contains(['<', '>']) {
        Some("contains a placeholder token")
    } else if text.chars().any(|c| c.is_ascii_digit()) {
        Some("contains digits")
    } else {
        None
    }
}

/// One JSON window record per line.
pub fn corpus_to_jsonl(windows: &[ActivityWindow]) -> String {
    let mut out = String::new();
    for w in windows {
        out.push_str(&serde_json::to_string(w).expect("windows serialize"));
        out.push('\n');
    }
    out
}

/// Parses a line-delimited corpus; blank lines are ignored. Windows are
/// not validated here.
pub fn corpus_from_jsonl(text: &str, origin: &str) -> Result<Vec<ActivityWindow>, ModelError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ModelError::Parse {
                path: format!("{origin}:{}", i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<ActivityWindow>, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    corpus_from_jsonl(&text, &path.display().to_string())
}

pub fn write_corpus(path: impl AsRef<Path>, windows: &[ActivityWindow]) -> Result<(), ModelError> {
    let path = path.as_ref();
    std::fs::write(path, corpus_to_jsonl(windows)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Labels present as ground truth in a corpus.
pub fn corpus_labels(windows: &[ActivityWindow]) -> BTreeSet<String> {
    windows
        .iter()
        .filter_map(|w| w.ground_truth.clone())
        .collect()
}
