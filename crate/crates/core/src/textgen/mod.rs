//! Natural-language rendering of activity windows.
//!
//! A summary is a fixed skeleton of sentences: when the activity happened,
//! how long it lasted, where it mostly took place and which sensors fired
//! most, followed by any sentences added by special rules. Every number is
//! spelled out in words.

mod descriptors;
mod words;

use std::collections::HashMap;
use std::hash::Hash;
use std::path::Path;

use chrono::Timelike;
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{phrase_problem, ActivityWindow, HomeLayout, Modality, SensorEvent};

pub use descriptors::{
    lint_descriptor, load_descriptors, ActivityDescriptor, DescriptorError, DescriptorRegistry,
};
pub use words::number_to_words;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("period boundaries: {0}")]
    Periods(String),
    #[error("top-k values must be at least one")]
    TopK,
    #[error("special rule `{name}`: {reason}")]
    Rule { name: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

/// Half-open hour range `[start_hour, end_hour)` naming a period of the day.
/// A range with `start_hour > end_hour` wraps past midnight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRange {
    pub label: String,
    pub start_hour: u32,
    pub end_hour: u32,
}

impl PeriodRange {
    fn new(label: &str, start_hour: u32, end_hour: u32) -> Self {
        PeriodRange {
            label: label.to_string(),
            start_hour,
            end_hour,
        }
    }

    pub fn contains(&self, hour: u32) -> bool {
        if self.start_hour < self.end_hour {
            (self.start_hour..self.end_hour).contains(&hour)
        } else {
            hour >= self.start_hour || hour < self.end_hour
        }
    }
}

/// Regex over event values, compared and serialized by its source text.
#[derive(Debug, Clone)]
pub struct ValuePattern(Regex);

impl ValuePattern {
    pub fn new(pattern: &str) -> Result<Self, regex::Error> {
        Regex::new(pattern).map(ValuePattern)
    }

    pub fn is_match(&self, value: &str) -> bool {
        self.0.is_match(value)
    }
}

impl PartialEq for ValuePattern {
    fn eq(&self, other: &Self) -> bool {
        self.0.as_str() == other.0.as_str()
    }
}

impl Serialize for ValuePattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.0.as_str())
    }
}

impl<'de> Deserialize<'de> for ValuePattern {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        ValuePattern::new(&raw).map_err(serde::de::Error::custom)
    }
}

/// Fires when any single event satisfies every field that is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleTrigger {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sensor_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modalities: Vec<Modality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_pattern: Option<ValuePattern>,
}

impl RuleTrigger {
    fn is_empty(&self) -> bool {
        self.sensor_ids.is_empty() && self.modalities.is_empty() && self.value_pattern.is_none()
    }

    pub fn matches_event(&self, e: &SensorEvent) -> bool {
        (self.sensor_ids.is_empty() || self.sensor_ids.contains(&e.sensor_id))
            && (self.modalities.is_empty() || self.modalities.contains(&e.modality))
            && self
                .value_pattern
                .as_ref()
                .is_none_or(|p| p.is_match(&e.value))
    }

    pub fn fires(&self, w: &ActivityWindow) -> bool {
        !self.is_empty() && w.events.iter().any(|e| self.matches_event(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleEffect {
    /// Puts the sensor ahead of the count ranking in the sensors sentence.
    ForceSensor { sensor_id: String },
    /// Appends a sentence after the skeleton.
    AppendSentence { text: String },
}

/// Commonsense override applied while summarizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialRule {
    pub name: String,
    pub trigger: RuleTrigger,
    pub effect: RuleEffect,
}

impl SpecialRule {
    fn validate(&self) -> Result<(), ConfigError> {
        let fail = |reason: &str| ConfigError::Rule {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.trigger.is_empty() {
            return Err(fail("trigger matches on nothing"));
        }
        match &self.effect {
            RuleEffect::ForceSensor { sensor_id } if sensor_id.trim().is_empty() => {
                Err(fail("empty sensor id"))
            }
            RuleEffect::AppendSentence { text } => {
                let body = strip_terminal(text.trim());
                if let Some(problem) = phrase_problem(body) {
                    return Err(fail(&format!("text {problem}")));
                }
                if body.contains(['.', '!', '?']) {
                    return Err(fail("text must be a single sentence"));
                }
                Ok(())
            }
            RuleEffect::ForceSensor { .. } => Ok(()),
        }
    }
}

fn default_top_k() -> usize {
    2
}

fn default_periods() -> Vec<PeriodRange> {
    vec![
        PeriodRange::new("past midnight", 0, 4),
        PeriodRange::new("early morning", 4, 7),
        PeriodRange::new("morning", 7, 12),
        PeriodRange::new("afternoon", 12, 17),
        PeriodRange::new("evening", 17, 21),
        PeriodRange::new("night", 21, 24),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryConfig {
    #[serde(default = "default_top_k")]
    pub top_k_locations: usize,
    #[serde(default = "default_top_k")]
    pub top_k_sensors: usize,
    #[serde(default = "default_periods")]
    pub periods: Vec<PeriodRange>,
    #[serde(default)]
    pub special_rules: Vec<SpecialRule>,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            top_k_locations: 2,
            top_k_sensors: 2,
            periods: default_periods(),
            special_rules: Vec::new(),
        }
    }
}

impl SummaryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.top_k_locations == 0 || self.top_k_sensors == 0 {
            return Err(ConfigError::TopK);
        }
        let mut cover = [0u32; 24];
        for p in &self.periods {
            if p.start_hour > 23 || p.end_hour > 24 || p.start_hour == p.end_hour {
                return Err(ConfigError::Periods(format!(
                    "`{}` has invalid range [{}, {})",
                    p.label, p.start_hour, p.end_hour
                )));
            }
            if let Some(problem) = phrase_problem(&p.label) {
                return Err(ConfigError::Periods(format!(
                    "label `{}` {problem}",
                    p.label
                )));
            }
            for (h, slot) in cover.iter_mut().enumerate() {
                if p.contains(h as u32) {
                    *slot += 1;
                }
            }
        }
        if let Some(h) = cover.iter().position(|&c| c != 1) {
            let what = if cover[h] == 0 {
                "uncovered"
            } else {
                "covered twice"
            };
            return Err(ConfigError::Periods(format!("hour {h} is {what}")));
        }
        for rule in &self.special_rules {
            rule.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: SummaryConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn period_of(&self, hour: u32) -> &str {
        self.periods
            .iter()
            .find(|p| p.contains(hour))
            .map(|p| p.label.as_str())
            .unwrap_or("")
    }
}

/// Rendered summary of one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub window_id: String,
    pub text: String,
    pub parts: Vec<String>,
}

impl Summary {
    fn from_parts(window_id: &str, parts: Vec<String>) -> Summary {
        let text = format!("{}.", parts.join(". "));
        Summary {
            window_id: window_id.to_string(),
            text,
            parts,
        }
    }
}

fn strip_terminal(text: &str) -> &str {
    text.strip_suffix(['.', '!', '?']).unwrap_or(text)
}

fn clock(hour: u32, cfg: &SummaryConfig) -> String {
    let meridiem = if hour < 12 { "AM" } else { "PM" };
    format!(
        "{} hours {} {}",
        number_to_words(hour as u64),
        meridiem,
        cfg.period_of(hour)
    )
}

/// Start and end at hour granularity.
pub fn time_sentence(w: &ActivityWindow, cfg: &SummaryConfig) -> String {
    format!(
        "The activity started at {} and ended at {}",
        clock(w.start.hour(), cfg),
        clock(w.end.hour(), cfg)
    )
}

/// Duration in the largest unit below which it falls, rounded half-up.
pub fn duration_sentence(w: &ActivityWindow) -> String {
    const MINUTE: i64 = 60_000_000;
    const HOUR: i64 = 60 * MINUTE;
    let micros = (w.end - w.start)
        .num_microseconds()
        .unwrap_or(i64::MAX)
        .max(0);
    let (unit_micros, unit) = if micros < MINUTE {
        (1_000_000, "second")
    } else if micros < HOUR {
        (MINUTE, "minute")
    } else {
        (HOUR, "hour")
    };
    let magnitude = (micros / unit_micros) + i64::from(micros % unit_micros >= unit_micros / 2);
    let plural = if magnitude == 1 { "" } else { "s" };
    format!(
        "The activity was performed for {} {unit}{plural}",
        number_to_words(magnitude as u64)
    )
}

/// Keys ranked by count descending, ties by first occurrence.
fn rank_by_count<K: Eq + Hash + Clone>(keys: impl IntoIterator<Item = K>) -> Vec<K> {
    let mut stats: HashMap<K, (usize, usize)> = HashMap::new();
    for (i, k) in keys.into_iter().enumerate() {
        stats.entry(k).or_insert((0, i)).0 += 1;
    }
    let mut ranked: Vec<(K, (usize, usize))> = stats.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    ranked.into_iter().map(|(k, _)| k).collect()
}

const PREPOSITIONS: [&str; 14] = [
    "in", "at", "on", "near", "by", "inside", "outside", "next", "under", "above", "beside",
    "behind", "around", "between",
];

/// Location phrases are spliced after "taking place" / "parts of it", so each
/// needs a leading preposition; bare nouns get "in".
fn with_preposition(phrase: &str) -> String {
    let first = phrase.split_whitespace().next().unwrap_or("");
    if PREPOSITIONS.iter().any(|p| first.eq_ignore_ascii_case(p)) {
        phrase.to_string()
    } else {
        format!("in {phrase}")
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Most common locations, at most `cfg.top_k_locations` of them.
pub fn location_sentence(w: &ActivityWindow, layout: &HomeLayout, cfg: &SummaryConfig) -> String {
    let ranked = rank_by_count(w.events.iter().map(|e| {
        layout
            .lookup_with_hint(&e.sensor_id, e.modality)
            .location_phrase
    }));
    let top: Vec<String> = ranked
        .iter()
        .take(cfg.top_k_locations.max(1))
        .map(|p| with_preposition(p))
        .collect();
    match top.split_first() {
        None => "The activity is taking place in an unknown location mainly".to_string(),
        Some((main, [])) => format!("The activity is taking place {main} mainly"),
        Some((main, rest)) => format!(
            "The activity is taking place {main} mainly and parts of it {}",
            join_list(rest)
        ),
    }
}

/// Sensor ids in sentence order: forced sensors first, then by count.
pub fn top_sensors(w: &ActivityWindow, cfg: &SummaryConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for rule in &cfg.special_rules {
        if let RuleEffect::ForceSensor { sensor_id } = &rule.effect {
            if !out.contains(sensor_id) && rule.trigger.fires(w) {
                out.push(sensor_id.clone());
            }
        }
    }
    for id in rank_by_count(w.events.iter().map(|e| e.sensor_id.clone())) {
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out.truncate(cfg.top_k_sensors.max(1));
    out
}

/// Most commonly fired sensors rendered through their layout context phrases.
pub fn sensor_sentence(w: &ActivityWindow, layout: &HomeLayout, cfg: &SummaryConfig) -> String {
    let phrases: Vec<String> = top_sensors(w, cfg)
        .iter()
        .map(|id| {
            let hint = w
                .events
                .iter()
                .find(|e| e.sensor_id == *id)
                .map(|e| e.modality)
                .unwrap_or(Modality::Other);
            layout.lookup_with_hint(id, hint).context_phrase
        })
        .collect();
    match phrases.len() {
        0 => "The most commonly fired sensor in this activity is unidentified".to_string(),
        1 => format!(
            "The most commonly fired sensor in this activity is {}",
            phrases[0]
        ),
        n => format!(
            "The {} most commonly fired sensors in this activity are {}",
            number_to_words(n as u64),
            join_list(&phrases)
        ),
    }
}

/// Renders the full summary of a valid window.
pub fn summarize(w: &ActivityWindow, layout: &HomeLayout, cfg: &SummaryConfig) -> Summary {
    let mut parts = vec![
        time_sentence(w, cfg),
        duration_sentence(w),
        location_sentence(w, layout, cfg),
        sensor_sentence(w, layout, cfg),
    ];
    for rule in &cfg.special_rules {
        if let RuleEffect::AppendSentence { text } = &rule.effect {
            if rule.trigger.fires(w) {
                parts.push(strip_terminal(text.trim()).to_string());
            }
        }
    }
    Summary::from_parts(&w.window_id, parts)
}

/// Timestamp-free rendering of the raw events, used when summaries are ablated.
pub fn raw_event_text(w: &ActivityWindow) -> String {
    w.events
        .iter()
        .map(|e| format!("{} sensor {} {}", e.modality.word(), e.sensor_id, e.value))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Line-delimited `(window_id, text)` record, the embedding exporter's input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    pub window_id: String,
    pub text: String,
}

impl From<&Summary> for TextRecord {
    fn from(s: &Summary) -> Self {
        TextRecord {
            window_id: s.window_id.clone(),
            text: s.text.clone(),
        }
    }
}
