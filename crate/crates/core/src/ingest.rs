//! Parsing raw dataset files into annotated activity windows.
//!
//! CASAS logs are whitespace-separated lines of the form
//! `DATE TIME SENSOR VALUE [LABEL MARKER]`. Windows are cut at ground-truth
//! `begin`/`end` markers; events outside any annotated span are discarded.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ActivityWindow, HomeLayout, Modality, SensorEvent};

/// A line that could not be parsed. Recoverable: the caller decides whether to skip.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        ParseError {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv mapping: {0}")]
    Mapping(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Begin,
    End,
}

impl Marker {
    pub fn parse(raw: &str) -> Option<Marker> {
        if raw.eq_ignore_ascii_case("begin") {
            Some(Marker::Begin)
        } else if raw.eq_ignore_ascii_case("end") {
            Some(Marker::End)
        } else {
            None
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Marker::Begin => "begin",
            Marker::End => "end",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub label: String,
    pub marker: Marker,
}

/// One raw log line.
///
/// `annotations` is applied in order after the line's event is recorded. CASAS
/// lines carry at most one; the CSV adapter may put `begin` and `end` on the
/// same row when a label run is one row long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLogLine {
    pub line_no: usize,
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub sensor_id: String,
    pub value: String,
    pub modality: Modality,
    pub annotations: Vec<Annotation>,
}

impl RawLogLine {
    pub fn timestamp(&self) -> NaiveDateTime {
        self.date.and_time(self.time)
    }

    pub fn annotation(&self) -> Option<&Annotation> {
        self.annotations.first()
    }

    /// Converts to an event; a layout entry for the sensor overrides the inferred modality.
    pub fn to_event(&self, layout: Option<&HomeLayout>) -> SensorEvent {
        let modality = layout
            .and_then(|l| l.sensors.get(&self.sensor_id))
            .map(|info| info.modality)
            .unwrap_or(self.modality);
        SensorEvent {
            timestamp: self.timestamp(),
            sensor_id: self.sensor_id.clone(),
            modality,
            value: self.value.clone(),
        }
    }
}

/// Modality implied by a CASAS sensor id prefix.
pub fn modality_from_prefix(sensor_id: &str) -> Modality {
    match sensor_id.chars().next() {
        Some('M') => Modality::Motion,
        Some('D') => Modality::Door,
        Some('T') => Modality::Temperature,
        _ => Modality::Other,
    }
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let b = raw.as_bytes();
    let shape_ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape_ok {
        return None;
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").ok()
}

fn parse_time(raw: &str) -> Option<NaiveTime> {
    let (hms, frac) = match raw.split_once('.') {
        Some((hms, frac)) => (hms, Some(frac)),
        None => (raw, None),
    };
    let b = hms.as_bytes();
    let shape_ok = b.len() == 8
        && b[2] == b':'
        && b[5] == b':'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 2 || i == 5 || c.is_ascii_digit());
    if !shape_ok {
        return None;
    }
    let num = |s: &str| s.parse::<u32>().ok();
    let (h, m, s) = (num(&hms[0..2])?, num(&hms[3..5])?, num(&hms[6..8])?);
    let micros = match frac {
        None => 0,
        Some(f) if (1..=6).contains(&f.len()) && f.bytes().all(|c| c.is_ascii_digit()) => {
            num(f)? * 10u32.pow(6 - f.len() as u32)
        }
        Some(_) => return None,
    };
    NaiveTime::from_hms_micro_opt(h, m, s, micros)
}

/// Parses one CASAS log line. `line_no` is 1-based and only used for diagnostics.
pub fn parse_casas_line(line: &str, line_no: usize) -> Result<RawLogLine, ParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 && fields.len() != 6 {
        return Err(ParseError::new(
            line_no,
            format!("expected 4 or 6 fields, found {}", fields.len()),
        ));
    }
    let date = parse_date(fields[0])
        .ok_or_else(|| ParseError::new(line_no, format!("bad date `{}`", fields[0])))?;
    let time = parse_time(fields[1])
        .ok_or_else(|| ParseError::new(line_no, format!("bad time `{}`", fields[1])))?;
    let annotations = if fields.len() == 6 {
        let marker = Marker::parse(fields[5])
            .ok_or_else(|| ParseError::new(line_no, format!("bad marker `{}`", fields[5])))?;
        vec![Annotation {
            label: fields[4].to_string(),
            marker,
        }]
    } else {
        Vec::new()
    };
    Ok(RawLogLine {
        line_no,
        date,
        time,
        sensor_id: fields[2].to_string(),
        value: fields[3].to_string(),
        modality: modality_from_prefix(fields[2]),
        annotations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Bookkeeping for one segmentation pass.
///
/// Every input event lands in exactly one of `events_in_windows`,
/// `events_orphaned` or `events_unannotated`; every unparseable line in
/// `lines_skipped`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub windows_emitted: usize,
    pub orphan_begins: usize,
    pub orphan_ends: usize,
    pub events_total: usize,
    pub events_in_windows: usize,
    pub events_orphaned: usize,
    pub events_unannotated: usize,
    pub lines_skipped: Vec<SkippedLine>,
}

impl SegmentationReport {
    /// Input lines seen, parsed or not.
    pub fn lines_total(&self) -> usize {
        self.events_total + self.lines_skipped.len()
    }

    /// Whether the event accounting closes.
    pub fn is_conserved(&self) -> bool {
        self.events_total == self.events_in_windows + self.events_orphaned + self.events_unannotated
    }

    pub fn merge(&mut self, other: &SegmentationReport) {
        self.windows_emitted += other.windows_emitted;
        self.orphan_begins += other.orphan_begins;
        self.orphan_ends += other.orphan_ends;
        self.events_total += other.events_total;
        self.events_in_windows += other.events_in_windows;
        self.events_orphaned += other.events_orphaned;
        self.events_unannotated += other.events_unannotated;
        self.lines_skipped
            .extend(other.lines_skipped.iter().cloned());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventState {
    Pending,
    Covered,
}

struct OpenSpan {
    label: String,
    start: usize,
}

/// Single-pass annotation segmenter.
///
/// Events are buffered from the earliest open `begin`; each span references
/// the buffer by absolute index, so nested spans share storage.
pub struct Segmenter<'a> {
    layout: Option<&'a HomeLayout>,
    id_prefix: String,
    next_index: usize,
    buffer_base: usize,
    buffer: VecDeque<(SensorEvent, EventState)>,
    open: Vec<OpenSpan>,
    windows: Vec<ActivityWindow>,
    report: SegmentationReport,
}

impl<'a> Segmenter<'a> {
    pub fn new(id_prefix: impl Into<String>, layout: Option<&'a HomeLayout>) -> Self {
        Segmenter {
            layout,
            id_prefix: id_prefix.into(),
            next_index: 0,
            buffer_base: 0,
            buffer: VecDeque::new(),
            open: Vec::new(),
            windows: Vec::new(),
            report: SegmentationReport::default(),
        }
    }

    pub fn skip(&mut self, err: ParseError) {
        self.report.lines_skipped.push(SkippedLine {
            line: err.line,
            reason: err.reason,
        });
    }

    pub fn push_result(&mut self, line: Result<RawLogLine, ParseError>) {
        match line {
            Ok(l) => self.push(l),
            Err(e) => self.skip(e),
        }
    }

    pub fn push(&mut self, line: RawLogLine) {
        let event = line.to_event(self.layout);
        let index = self.next_index;
        self.next_index += 1;
        self.report.events_total += 1;

        let mut orphan_marker = false;
        let mut opens = Vec::new();
        let mut closes = Vec::new();
        for ann in &line.annotations {
            match ann.marker {
                Marker::Begin => {
                    let already_open = self.open.iter().any(|s| s.label == ann.label)
                        || opens.contains(&ann.label);
                    if already_open {
                        self.report.orphan_begins += 1;
                        orphan_marker = true;
                    } else {
                        opens.push(ann.label.clone());
                    }
                }
                Marker::End => closes.push(ann.label.clone()),
            }
        }

        if self.open.is_empty() && opens.is_empty() {
            // Outside every span; only an `end` could still reference it, and
            // with nothing open that end is an orphan.
            let orphan_end = !closes.is_empty();
            self.report.orphan_ends += closes.len();
            if orphan_end || orphan_marker {
                self.report.events_orphaned += 1;
            } else {
                self.report.events_unannotated += 1;
            }
            self.buffer_base = self.next_index;
            return;
        }

        self.buffer.push_back((event, EventState::Pending));
        for label in opens {
            self.open.push(OpenSpan {
                label,
                start: index,
            });
        }
        for label in closes {
            match self.open.iter().position(|s| s.label == label) {
                Some(pos) => {
                    let span = self.open.remove(pos);
                    self.emit(span, index);
                }
                None => {
                    self.report.orphan_ends += 1;
                }
            }
        }
        if self.open.is_empty() {
            self.flush();
        }
    }

    fn emit(&mut self, span: OpenSpan, end: usize) {
        let lo = span.start - self.buffer_base;
        let hi = end - self.buffer_base;
        let mut events = Vec::with_capacity(hi - lo + 1);
        for slot in self.buffer.range_mut(lo..=hi) {
            slot.1 = EventState::Covered;
            events.push(slot.0.clone());
        }
        // Raw logs occasionally carry clock skew; windows must be time-ordered.
        events.sort_by_key(|e| e.timestamp);
        let id = format!("{}-{:06}", self.id_prefix, self.windows.len() + 1);
        self.windows
            .push(ActivityWindow::new(id, Some(span.label), events));
        self.report.windows_emitted += 1;
    }

    /// Settles buffered events. Before EOF this only runs once every span has
    /// closed, so `Pending` survives only inside spans that never closed.
    fn flush(&mut self) {
        for (_, state) in self.buffer.drain(..) {
            match state {
                EventState::Covered => self.report.events_in_windows += 1,
                EventState::Pending => self.report.events_orphaned += 1,
            }
        }
        self.buffer_base = self.next_index;
    }

    pub fn finish(mut self) -> (Vec<ActivityWindow>, SegmentationReport) {
        self.report.orphan_begins += self.open.len();
        self.open.clear();
        self.flush();
        (self.windows, self.report)
    }
}

/// Cuts windows at matching `begin`/`end` markers.
pub fn segment_by_annotations<I>(
    lines: I,
    id_prefix: &str,
    layout: Option<&HomeLayout>,
) -> (Vec<ActivityWindow>, SegmentationReport)
where
    I: IntoIterator<Item = Result<RawLogLine, ParseError>>,
{
    let mut seg = Segmenter::new(id_prefix, layout);
    for line in lines {
        seg.push_result(line);
    }
    seg.finish()
}

/// Parses CASAS log text line by line. Blank lines are ignored.
pub fn parse_casas_text(text: &str) -> impl Iterator<Item = Result<RawLogLine, ParseError>> + '_ {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_casas_line(l, i + 1))
}

pub fn read_casas_file(
    path: &Path,
    layout: Option<&HomeLayout>,
) -> Result<(Vec<ActivityWindow>, SegmentationReport), IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let prefix = file_prefix(path);
    Ok(segment_by_annotations(
        parse_casas_text(&text),
        &prefix,
        layout,
    ))
}

pub(crate) fn file_prefix(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "w".to_string())
}

/// Column mapping for CSV-shaped datasets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvMapping {
    pub timestamp: String,
    pub sensor_id: String,
    pub value: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub modality: Option<String>,
    /// `chrono` format string, or `epoch_seconds` / `epoch_millis`.
    /// When absent, ISO-8601 with a `T` or space separator is accepted.
    #[serde(default)]
    pub timestamp_format: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl CsvMapping {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| IngestError::Mapping(e.to_string()))
    }

    fn parse_timestamp(&self, raw: &str) -> Option<NaiveDateTime> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        match self.timestamp_format.as_deref() {
            Some("epoch_seconds") => {
                let secs: f64 = raw.parse().ok()?;
                let micros = (secs * 1e6).round() as i64;
                chrono::DateTime::from_timestamp_micros(micros).map(|d| d.naive_utc())
            }
            Some("epoch_millis") => {
                let ms: i64 = raw.parse().ok()?;
                chrono::DateTime::from_timestamp_millis(ms).map(|d| d.naive_utc())
            }
            Some(fmt) => NaiveDateTime::parse_from_str(raw, fmt).ok(),
            None => NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f")
                .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%.f"))
                .ok(),
        }
    }
}

/// Result of reading a CSV dataset: parsed lines plus recoverable row failures.
#[derive(Debug, Default)]
pub struct CsvLines {
    pub lines: Vec<RawLogLine>,
    pub skipped: Vec<ParseError>,
}

impl CsvLines {
    /// Parsed and skipped rows interleaved back into file order.
    pub fn into_results(self) -> Vec<Result<RawLogLine, ParseError>> {
        let mut out: Vec<_> = self
            .lines
            .into_iter()
            .map(Ok)
            .chain(self.skipped.into_iter().map(Err))
            .collect();
        out.sort_by_key(|r| match r {
            Ok(l) => l.line_no,
            Err(e) => e.line,
        });
        out
    }
}

/// Reads a CSV dataset. Label changes between consecutive parsed rows become
/// `begin`/`end` markers; an empty label cell means "unlabeled".
pub fn parse_generic_csv<R: Read>(
    reader: R,
    mapping: &CsvMapping,
) -> Result<CsvLines, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Mapping(format!("column `{name}` not found in header")))
    };
    let ts_col = column(&mapping.timestamp)?;
    let id_col = column(&mapping.sensor_id)?;
    let val_col = column(&mapping.value)?;
    let label_col = mapping.label.as_deref().map(column).transpose()?;
    let mod_col = mapping.modality.as_deref().map(column).transpose()?;

    let mut out = CsvLines::default();
    let mut labels: Vec<Option<String>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Header is line 1.
        let line_no = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.skipped.push(ParseError::new(line_no, e.to_string()));
                continue;
            }
        };
        let field = |c: usize| record.get(c).map(str::trim).unwrap_or("");
        let Some(ts) = mapping.parse_timestamp(field(ts_col)) else {
            out.skipped.push(ParseError::new(
                line_no,
                format!("bad timestamp `{}`", field(ts_col)),
            ));
            continue;
        };
        let sensor_id = field(id_col);
        if sensor_id.is_empty() {
            out.skipped
                .push(ParseError::new(line_no, "empty sensor id"));
            continue;
        }
        let modality = match mod_col {
            Some(c) => Modality::from_raw(field(c)),
            None => Modality::Other,
        };
        let label = label_col
            .map(|c| field(c).to_string())
            .filter(|l| !l.is_empty());
        labels.push(label);
        out.lines.push(RawLogLine {
            line_no,
            date: ts.date(),
            time: ts.time(),
            sensor_id: sensor_id.to_string(),
            value: field(val_col).to_string(),
            modality,
            annotations: Vec::new(),
        });
    }

    for i in 0..out.lines.len() {
        let Some(label) = &labels[i] else { continue };
        let prev = i.checked_sub(1).and_then(|p| labels[p].as_ref());
        let next = labels.get(i + 1).and_then(Option::as_ref);
        if prev != Some(label) {
            out.lines[i].annotations.push(Annotation {
                label: label.clone(),
                marker: Marker::Begin,
            });
        }
        if next != Some(label) {
            out.lines[i].annotations.push(Annotation {
                label: label.clone(),
                marker: Marker::End,
            });
        }
    }
    Ok(out)
}

pub fn read_csv_file(
    path: &Path,
    mapping: &CsvMapping,
    layout: Option<&HomeLayout>,
) -> Result<(Vec<ActivityWindow>, SegmentationReport), IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parsed = parse_generic_csv(file, mapping)?;
    Ok(segment_by_annotations(
        parsed.into_results(),
        &file_prefix(path),
        layout,
    ))
}

/// Drops windows whose ground truth is in `drop`, preserving order.
pub fn filter_labels(windows: Vec<ActivityWindow>, drop: &BTreeSet<String>) -> Vec<ActivityWindow> {
    if drop.is_empty() {
        return windows;
    }
    windows
        .into_iter()
        .filter(|w| w.ground_truth.as_ref().is_none_or(|l| !drop.contains(l)))
        .collect()
}

/// Per-label window counts, useful for reporting class balance.
pub fn label_counts(windows: &[ActivityWindow]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for w in windows {
        if let Some(l) = &w.ground_truth {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_annotated_line() {
        let l = parse_casas_line("2010-11-04 00:03:50.209589 M003 ON Sleeping begin", 1).unwrap();
        assert_eq!(l.sensor_id, "M003");
        assert_eq!(l.value, "ON");
        assert_eq!(l.modality, Modality::Motion);
        assert_eq!(
            l.annotation(),
            Some(&Annotation {
                label: "Sleeping".into(),
                marker: Marker::Begin
            })
        );
        assert_eq!(
            l.time,
            NaiveTime::from_hms_micro_opt(0, 3, 50, 209_589).unwrap()
        );
    }

    #[test]
    fn parses_plain_line() {
        let l = parse_casas_line("2010-11-04 00:03:57.399391 M003 OFF", 2).unwrap();
        assert!(l.annotations.is_empty());
        assert_eq!(l.value, "OFF");
    }

    #[test]
    fn marker_case_is_normalized() {
        let l = parse_casas_line("2010-11-04\t00:03:57 D001 OPEN Leave_Home END", 3).unwrap();
        assert_eq!(l.annotations[0].marker, Marker::End);
        assert_eq!(l.annotations[0].marker.to_string(), "end");
        assert_eq!(l.modality, Modality::Door);
        assert_eq!(l.time, NaiveTime::from_hms_opt(0, 3, 57).unwrap());
    }

    #[test]
    fn fractional_seconds_are_scaled() {
        let l = parse_casas_line("2010-11-04 00:00:01.5 T001 21.5", 1).unwrap();
        assert_eq!(
            l.time,
            NaiveTime::from_hms_micro_opt(0, 0, 1, 500_000).unwrap()
        );
        assert_eq!(l.modality, Modality::Temperature);
    }

    #[test]
    fn malformed_lines_are_errors() {
        let e = parse_casas_line("garbage", 7).unwrap_err();
        assert_eq!(e.line, 7);
        for bad in [
            "2010-11-04 00:03:57 M003",
            "2010-11-04 00:03:57 M003 ON Sleeping",
            "2010-11-04 00:03:57 M003 ON Sleeping begin extra",
            "2010/11/04 00:03:57 M003 ON",
            "2010-13-04 00:03:57 M003 ON",
            "2010-11-04 0:03:57 M003 ON",
            "2010-11-04 00:03:57.1234567 M003 ON",
            "2010-11-04 25:03:57 M003 ON",
            "2010-11-04 00:03:57 M003 ON Sleeping start",
        ] {
            assert!(parse_casas_line(bad, 1).is_err(), "{bad}");
        }
    }

    #[test]
    fn layout_overrides_prefix_modality() {
        let mut layout = HomeLayout::new("h");
        layout.sensors.insert(
            "M050".into(),
            crate::model::SensorInfo {
                location_phrase: "in the hall".into(),
                context_phrase: "pressure mat in the hall".into(),
                modality: Modality::Pressure,
            },
        );
        let l = parse_casas_line("2010-11-04 00:03:57 M050 ON", 1).unwrap();
        assert_eq!(l.to_event(Some(&layout)).modality, Modality::Pressure);
        assert_eq!(l.to_event(None).modality, Modality::Motion);
    }

    fn log(lines: &[&str]) -> (Vec<ActivityWindow>, SegmentationReport) {
        let text = lines.join("\n");
        segment_by_annotations(parse_casas_text(&text), "t", None)
    }

    #[test]
    fn simple_window() {
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON Sleep begin",
            "2010-11-04 00:00:01 M001 OFF",
            "2010-11-04 00:00:02 M002 ON",
            "2010-11-04 00:00:03 M002 OFF",
            "2010-11-04 00:00:04 M001 ON",
            "2010-11-04 00:00:05 M001 OFF Sleep end",
        ]);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].events.len(), 6);
        assert_eq!(w[0].ground_truth.as_deref(), Some("Sleep"));
        assert_eq!(w[0].window_id, "t-000001");
        assert_eq!(r.windows_emitted, 1);
        assert_eq!(r.events_in_windows, 6);
        assert!(r.is_conserved());
    }

    #[test]
    fn nested_windows_are_tracked_independently() {
        // Hand trace: Sleep spans lines 1..=6, Eat spans lines 3..=4.
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON Sleep begin",
            "2010-11-04 00:00:01 M001 OFF",
            "2010-11-04 00:00:02 M002 ON Eat begin",
            "2010-11-04 00:00:03 M002 OFF Eat end",
            "2010-11-04 00:00:04 M001 ON",
            "2010-11-04 00:00:05 M001 OFF Sleep end",
        ]);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].ground_truth.as_deref(), Some("Eat"));
        assert_eq!(w[0].events.len(), 2);
        assert_eq!(w[1].ground_truth.as_deref(), Some("Sleep"));
        assert_eq!(w[1].events.len(), 6);
        assert!(w[1].start <= w[0].start && w[0].end <= w[1].end);
        assert_eq!(r.events_in_windows, 6);
        assert!(r.is_conserved());
    }

    #[test]
    fn unmatched_begin_is_orphan() {
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON Sleep begin",
            "2010-11-04 00:00:01 M001 OFF",
        ]);
        assert!(w.is_empty());
        assert_eq!(r.orphan_begins, 1);
        assert_eq!(r.events_orphaned, 2);
        assert!(r.is_conserved());
    }

    #[test]
    fn unmatched_end_is_orphan() {
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON",
            "2010-11-04 00:00:01 M001 OFF Sleep end",
        ]);
        assert!(w.is_empty());
        assert_eq!(r.orphan_ends, 1);
        assert_eq!(r.events_unannotated, 1);
        assert_eq!(r.events_orphaned, 1);
        assert!(r.is_conserved());
    }

    #[test]
    fn duplicate_same_label_begin_is_ignored() {
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON Sleep begin",
            "2010-11-04 00:00:01 M001 OFF Sleep begin",
            "2010-11-04 00:00:02 M001 ON Sleep end",
        ]);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].events.len(), 3);
        assert_eq!(r.orphan_begins, 1);
        assert!(r.is_conserved());
    }

    #[test]
    fn unannotated_events_between_spans_are_discarded() {
        let (w, r) = log(&[
            "2010-11-04 00:00:00 M001 ON Sleep begin",
            "2010-11-04 00:00:01 M001 OFF Sleep end",
            "2010-11-04 00:00:02 M005 ON",
            "garbage line",
            "2010-11-04 00:00:03 M005 OFF",
            "2010-11-04 00:00:04 M002 ON Eat begin",
            "2010-11-04 00:00:05 M002 OFF Eat end",
        ]);
        assert_eq!(w.len(), 2);
        assert_eq!(r.events_unannotated, 2);
        assert_eq!(r.lines_skipped.len(), 1);
        assert_eq!(r.lines_skipped[0].line, 4);
        assert_eq!(r.lines_total(), 7);
        assert!(r.is_conserved());
    }

    #[test]
    fn skewed_clock_is_sorted_inside_window() {
        let (w, _) = log(&[
            "2010-11-04 00:00:05 M001 ON Sleep begin",
            "2010-11-04 00:00:04 M001 OFF",
            "2010-11-04 00:00:06 M001 ON Sleep end",
        ]);
        assert!(w[0].is_valid());
    }

    fn mapping() -> CsvMapping {
        CsvMapping {
            timestamp: "ts".into(),
            sensor_id: "sensor".into(),
            value: "value".into(),
            label: Some("activity".into()),
            modality: None,
            timestamp_format: None,
            delimiter: ',',
        }
    }

    fn csv_windows(body: &str) -> (Vec<ActivityWindow>, SegmentationReport) {
        let parsed = parse_generic_csv(body.as_bytes(), &mapping()).unwrap();
        segment_by_annotations(parsed.into_results(), "c", None)
    }

    #[test]
    fn csv_single_label_run() {
        let (w, r) = csv_windows(
            "ts,sensor,value,activity\n\
             2020-01-01T08:00:00,S1,ON,A\n\
             2020-01-01T08:00:01,S2,ON,A\n\
             2020-01-01T08:00:02,S1,OFF,A\n",
        );
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].events.len(), 3);
        assert_eq!(w[0].ground_truth.as_deref(), Some("A"));
        assert!(r.is_conserved());
    }

    #[test]
    fn csv_label_change_splits() {
        let (w, _) = csv_windows(
            "ts,sensor,value,activity\n\
             2020-01-01 08:00:00,S1,ON,A\n\
             2020-01-01 08:00:01,S2,ON,A\n\
             2020-01-01 08:00:02,S1,OFF,B\n",
        );
        assert_eq!(w.len(), 2);
        assert_eq!(
            (w[0].events.len(), w[0].ground_truth.as_deref()),
            (2, Some("A"))
        );
        assert_eq!(
            (w[1].events.len(), w[1].ground_truth.as_deref()),
            (1, Some("B"))
        );
    }

    #[test]
    fn csv_empty_timestamp_is_counted_skip() {
        let parsed = parse_generic_csv(
            "ts,sensor,value,activity\n\
             2020-01-01T08:00:00,S1,ON,A\n\
             ,S2,ON,A\n\
             2020-01-01T08:00:02,S1,OFF,A\n"
                .as_bytes(),
            &mapping(),
        )
        .unwrap();
        assert_eq!(parsed.lines.len(), 2);
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.skipped[0].line, 3);
        let (w, r) = segment_by_annotations(parsed.into_results(), "c", None);
        assert_eq!(w.len(), 1);
        assert_eq!(r.lines_skipped.len(), 1);
    }

    #[test]
    fn csv_missing_column_is_fatal() {
        let mut m = mapping();
        m.label = Some("nope".into());
        let err = parse_generic_csv("ts,sensor,value\n".as_bytes(), &m).unwrap_err();
        assert!(matches!(err, IngestError::Mapping(_)));
    }

    #[test]
    fn csv_epoch_millis() {
        let mut m = mapping();
        m.timestamp_format = Some("epoch_millis".into());
        m.modality = Some("kind".into());
        let parsed = parse_generic_csv(
            "ts,sensor,value,activity,kind\n1600000000000,P1,call,Phone,smartphone\n".as_bytes(),
            &m,
        )
        .unwrap();
        assert_eq!(parsed.lines[0].modality, Modality::SmartphoneApp);
        assert_eq!(parsed.lines[0].annotations.len(), 2);
    }

    fn labeled(n: usize, label: &str) -> ActivityWindow {
        let t = NaiveDate::from_ymd_opt(2020, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        ActivityWindow::new(
            format!("w{n}"),
            Some(label.into()),
            vec![SensorEvent::new(t, "S", Modality::Motion, "ON").unwrap()],
        )
    }

    #[test]
    fn filter_drops_listed_labels() {
        let ws: Vec<_> = ["A", "Other", "B", "Other", "C"]
            .iter()
            .enumerate()
            .map(|(i, l)| labeled(i, l))
            .collect();
        let drop: BTreeSet<String> = ["Other".to_string()].into();
        let kept = filter_labels(ws.clone(), &drop);
        let ids: Vec<_> = kept.iter().map(|w| w.window_id.as_str()).collect();
        assert_eq!(ids, ["w0", "w2", "w4"]);
        assert_eq!(filter_labels(ws.clone(), &BTreeSet::new()), ws);
        let all: BTreeSet<String> = ["A", "B", "C", "Other"].map(String::from).into();
        assert!(filter_labels(ws, &all).is_empty());
    }
}
