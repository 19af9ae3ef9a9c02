//! Session data model.
//!
//! A [`SessionRecording`] holds every stream captured during one session,
//! keyed by `(device_id, channel)`, plus the ordered track of game events.
//! All timestamps are seconds relative to the session epoch.

mod align;
mod format;
mod series;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use align::{estimate_offset, merge_streams, ClockOffset, MAX_CLOCK_OFFSET_S};
pub use format::{parse_sample_line, parse_session, sample_line, write_session};
pub use series::{interpolate_at, resample, sliding_windows, UniformSeries, Window};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    /// Raw cardiac waveform, millivolts.
    Pulse,
    /// Skin conductance, microsiemens.
    Eda,
    /// Device-reported heart rate, beats per minute.
    Hr,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Pulse => "pulse",
            Channel::Eda => "eda",
            Channel::Hr => "hr",
        }
    }

    /// Checks a value against the channel's physical range.
    pub fn check_value(self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Invariant(format!("non-finite {self} value")));
        }
        match self {
            Channel::Eda if value < 0.0 => {
                Err(Error::Invariant(format!("eda value {value} is negative")))
            }
            Channel::Hr if !(value > 0.0 && value < 300.0) => {
                Err(Error::Invariant(format!("hr value {value} outside (0, 300)")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pulse" => Ok(Channel::Pulse),
            "eda" => Ok(Channel::Eda),
            "hr" => Ok(Channel::Hr),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

/// One timestamped value of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedValue {
    pub t: f64,
    pub value: f64,
}

impl TimedValue {
    pub fn new(t: f64, value: f64) -> Self {
        TimedValue { t, value }
    }
}

/// A sample as it appears on the wire, tagged with its device and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub device_id: String,
    pub channel: Channel,
    pub value: f64,
}

impl Sample {
    pub fn key(&self) -> StreamKey {
        StreamKey::new(&self.device_id, self.channel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Invariant(format!("sample time {} must be finite and >= 0", self.t)));
        }
        self.channel.check_value(self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamKey {
    pub device_id: String,
    pub channel: Channel,
}

impl StreamKey {
    pub fn new(device_id: impl Into<String>, channel: Channel) -> Self {
        StreamKey { device_id: device_id.into(), channel }
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.device_id, self.channel)
    }
}

/// A declared stream with its nominal sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamDecl {
    pub key: StreamKey,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    StimulusOnset,
    PatternEvent,
    PhaseMarker,
    Rating,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::StimulusOnset => "stimulus_onset",
            EventKind::PatternEvent => "pattern_event",
            EventKind::PhaseMarker => "phase_marker",
            EventKind::Rating => "rating",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stimulus_onset" => Ok(EventKind::StimulusOnset),
            "pattern_event" => Ok(EventKind::PatternEvent),
            "phase_marker" => Ok(EventKind::PhaseMarker),
            "rating" => Ok(EventKind::Rating),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// Protocol phases, carried as the single id of a `phase_marker` event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Calibration,
    Gaming,
    StrongStimulus,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Calibration, Phase::Gaming, Phase::StrongStimulus];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Calibration => "calibration",
            Phase::Gaming => "gaming",
            Phase::StrongStimulus => "strong_stimulus",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

/// A stimulus, pattern occurrence, phase boundary or subjective rating.
///
/// For `phase_marker` events `pattern_ids` holds the phase name; for
/// `stimulus_onset` it holds the stimulus class; for pattern events it holds
/// catalog ids. The payload of a pattern event, when present, is an intensity
/// multiplier (negative values ease the pattern off).
#[derive(Debug, Clone, PartialEq)]
pub struct GameEvent {
    pub t: f64,
    pub kind: EventKind,
    pub pattern_ids: Vec<String>,
    pub payload: Option<f64>,
}

impl GameEvent {
    pub fn pattern(t: f64, id: impl Into<String>) -> Self {
        GameEvent { t, kind: EventKind::PatternEvent, pattern_ids: vec![id.into()], payload: None }
    }

    pub fn stimulus(t: f64, class: impl Into<String>) -> Self {
        GameEvent { t, kind: EventKind::StimulusOnset, pattern_ids: vec![class.into()], payload: None }
    }

    pub fn phase(t: f64, phase: Phase) -> Self {
        GameEvent {
            t,
            kind: EventKind::PhaseMarker,
            pattern_ids: vec![phase.as_str().to_string()],
            payload: None,
        }
    }

    pub fn rating(t: f64, value: f64) -> Self {
        GameEvent { t, kind: EventKind::Rating, pattern_ids: Vec::new(), payload: Some(value) }
    }

    /// The phase this event marks, if it is a phase marker.
    pub fn phase_marker(&self) -> Option<Phase> {
        if self.kind != EventKind::PhaseMarker {
            return None;
        }
        self.pattern_ids.first().and_then(|s| s.parse().ok())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::Invariant(format!("event time {} must be finite and >= 0", self.t)));
        }
        for id in &self.pattern_ids {
            if id.is_empty() || id.contains(',') || id.contains(char::is_whitespace) || id == "-" {
                return Err(Error::Invariant(format!("bad event id `{id}`")));
            }
        }
        if let Some(p) = self.payload {
            if !p.is_finite() {
                return Err(Error::Invariant("non-finite event payload".into()));
            }
        }
        match self.kind {
            EventKind::PatternEvent if self.pattern_ids.is_empty() => {
                Err(Error::Invariant("pattern_event without pattern ids".into()))
            }
            EventKind::Rating => match self.payload {
                Some(p) if (1.0..=9.0).contains(&p) => Ok(()),
                Some(p) => Err(Error::Invariant(format!("rating {p} outside [1, 9]"))),
                None => Err(Error::Invariant("rating without payload".into())),
            },
            EventKind::PhaseMarker if self.phase_marker().is_none() => {
                Err(Error::Invariant("phase_marker must name one known phase".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMeta {
    pub subject_id: String,
    /// ISO-8601 timestamp, kept verbatim.
    pub session_epoch: String,
    pub streams: Vec<StreamDecl>,
}

impl SessionMeta {
    pub fn new(subject_id: impl Into<String>, session_epoch: impl Into<String>) -> Self {
        SessionMeta { subject_id: subject_id.into(), session_epoch: session_epoch.into(), streams: Vec::new() }
    }

    pub fn decl(&self, key: &StreamKey) -> Option<&StreamDecl> {
        self.streams.iter().find(|d| &d.key == key)
    }

    pub fn declares_device(&self, device_id: &str) -> bool {
        self.streams.iter().any(|d| d.key.device_id == device_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecording {
    pub meta: SessionMeta,
    pub streams: BTreeMap<StreamKey, Vec<TimedValue>>,
    pub events: Vec<GameEvent>,
}

impl SessionRecording {
    /// An empty recording; every declared stream starts with no samples.
    pub fn new(mut meta: SessionMeta) -> Self {
        meta.streams.sort_by(|a, b| a.key.cmp(&b.key));
        let streams = meta.streams.iter().map(|d| (d.key.clone(), Vec::new())).collect();
        SessionRecording { meta, streams, events: Vec::new() }
    }

    pub fn stream(&self, key: &StreamKey) -> Option<&[TimedValue]> {
        self.streams.get(key).map(Vec::as_slice)
    }

    /// First stream carrying `channel`, by device id order.
    pub fn first_stream(&self, channel: Channel) -> Option<(&StreamKey, &[TimedValue])> {
        self.streams
            .iter()
            .find(|(k, v)| k.channel == channel && !v.is_empty())
            .map(|(k, v)| (k, v.as_slice()))
    }

    /// Start time of the first event marking `phase` and the start of the
    /// following phase marker (or `None` when the phase runs to the end).
    pub fn phase_span(&self, phase: Phase) -> Option<(f64, Option<f64>)> {
        let idx = self.events.iter().position(|e| e.phase_marker() == Some(phase))?;
        let start = self.events[idx].t;
        let end = self.events[idx + 1..].iter().find(|e| e.kind == EventKind::PhaseMarker).map(|e| e.t);
        Some((start, end))
    }

    /// Latest timestamp among samples and events.
    pub fn end_time(&self) -> f64 {
        let s = self.streams.values().filter_map(|v| v.last()).map(|p| p.t).fold(0.0, f64::max);
        let e = self.events.last().map(|e| e.t).unwrap_or(0.0);
        s.max(e)
    }

    /// Keeps only the given devices' streams and declarations. Events are kept.
    pub fn select_devices(&self, devices: &[&str]) -> SessionRecording {
        let keep = |k: &StreamKey| devices.contains(&k.device_id.as_str());
        let mut meta = self.meta.clone();
        meta.streams.retain(|d| keep(&d.key));
        SessionRecording {
            meta,
            streams: self.streams.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
            events: self.events.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_token("subject id", &self.meta.subject_id)?;
        chrono::DateTime::parse_from_rfc3339(&self.meta.session_epoch)
            .map_err(|e| Error::Invariant(format!("session epoch `{}`: {e}", self.meta.session_epoch)))?;
        for (i, d) in self.meta.streams.iter().enumerate() {
            check_token("device id", &d.key.device_id)?;
            if !(d.rate_hz.is_finite() && d.rate_hz > 0.0) {
                return Err(Error::Invariant(format!("stream {} has invalid rate {}", d.key, d.rate_hz)));
            }
            if self.meta.streams[..i].iter().any(|o| o.key == d.key) {
                return Err(Error::Invariant(format!("stream {} declared twice", d.key)));
            }
        }
        for (key, samples) in &self.streams {
            if self.meta.decl(key).is_none() {
                return Err(Error::Invariant(format!("stream {key} is not declared")));
            }
            let mut prev = f64::NEG_INFINITY;
            for s in samples {
                Sample { t: s.t, device_id: key.device_id.clone(), channel: key.channel, value: s.value }
                    .validate()?;
                if s.t <= prev {
                    return Err(Error::Invariant(format!("stream {key} not strictly increasing at t={}", s.t)));
                }
                prev = s.t;
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &self.events {
            e.validate()?;
            if e.t < prev {
                return Err(Error::Invariant(format!("events out of order at t={}", e.t)));
            }
            prev = e.t;
        }
        Ok(())
    }
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains(char::is_whitespace) || s == "-" {
        return Err(Error::Invariant(format!("{what} `{s}` must be a non-empty token")));
    }
    Ok(())
}
