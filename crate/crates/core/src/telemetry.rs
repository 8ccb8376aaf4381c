//! Session logs: the `.drl` line format, its parser and its serializer.
//!
//! A log holds one trainee's run through one drill level. The first line is
//! a header, every following line is either a sample (`S`) carrying the gaze
//! target and facial action-unit weights at one instant, or an interaction
//! event (`E`) with a scene object:
//!
//! ```text
//! #drl v1 tester=7 level=2
//! S 0 - AU6=0.1200
//! S 100 fire AU1=0.8000 AU2=0.7500
//! E 4200 activate emergency_phone
//! ```
//!
//! Timestamps are milliseconds since level start. No sampling rate is
//! assumed anywhere; durations are always taken from timestamps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::au::{AuCode, Weight};
use crate::sim::{AgentProfile, Experience};

pub const SCHEMA_VERSION: &str = "v1";
const MAGIC: &str = "#drl";

/// Drill level, always one of 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(u8);

impl Level {
    pub const ALL: [Level; 4] = [Level(1), Level(2), Level(3), Level(4)];

    pub fn new(id: u8) -> Option<Level> {
        (1..=4).contains(&id).then_some(Level(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// True for identifiers usable as tester ids and object ids in a log line.
pub fn is_valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s != "-"
        && s.chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && c != '=' && c != '#')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Grab,
    Activate,
    UseStart,
    UseEnd,
    EnterZone,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Grab,
        Action::Activate,
        Action::UseStart,
        Action::UseEnd,
        Action::EnterZone,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Grab => "grab",
            Action::Activate => "activate",
            Action::UseStart => "use_start",
            Action::UseEnd => "use_end",
            Action::EnterZone => "enter_zone",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL.iter().copied().find(|a| a.as_str() == s).ok_or(())
    }
}

/// One joint eye-gaze and facial-expression reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub t_ms: u64,
    pub gaze_target: Option<String>,
    pub aus: BTreeMap<AuCode, Weight>,
}

/// A logged interaction with a scene object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub t_ms: u64,
    pub action: Action,
    pub object: String,
}

/// One trainee, one level.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub tester_id: String,
    pub level: Level,
    pub profile: Option<AgentProfile>,
    pub samples: Vec<SampleRecord>,
    pub events: Vec<InteractionEvent>,
}

/// Which of the two record streams a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Sample,
    Event,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Sample => "sample",
            RecordKind::Event => "event",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("input is not valid UTF-8 (byte offset {0})")]
    Encoding(usize),
    #[error("line 1: missing header line")]
    MissingHeader,
    #[error("line {line}: malformed {field}: {detail}")]
    Malformed {
        line: usize,
        field: &'static str,
        detail: String,
    },
    #[error("line {line}: unknown action unit `{code}`")]
    UnknownAu { line: usize, code: String },
    #[error("line {line}: {au} weight {value} outside [0, 1]")]
    WeightOutOfRange { line: usize, au: AuCode, value: String },
    #[error("line {line}: {kind} timestamp {t_ms} precedes previous {kind} timestamp {prev_ms}")]
    NonMonotonic {
        line: usize,
        kind: RecordKind,
        t_ms: u64,
        prev_ms: u64,
    },
    #[error("line {line}: unknown level `{value}` (expected 1-4)")]
    UnknownLevel { line: usize, value: String },
    #[error("line {line}: use_end on `{object}` without a matching use_start")]
    UnmatchedUseEnd { line: usize, object: String },
}

impl ParseError {
    /// 1-based line number of the offending record, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Encoding(_) => None,
            ParseError::MissingHeader => Some(1),
            ParseError::Malformed { line, .. }
            | ParseError::UnknownAu { line, .. }
            | ParseError::WeightOutOfRange { line, .. }
            | ParseError::NonMonotonic { line, .. }
            | ParseError::UnknownLevel { line, .. }
            | ParseError::UnmatchedUseEnd { line, .. } => Some(*line),
        }
    }
}

/// An invariant violated by an in-memory log. Indices are positions in
/// `samples` or `events`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("tester id `{0}` is not a valid identifier")]
    TesterId(String),
    #[error("{kind} {index}: timestamp goes backwards")]
    NonMonotonic { kind: RecordKind, index: usize },
    #[error("{kind} {index}: object id `{object}` is not a valid identifier")]
    ObjectId {
        kind: RecordKind,
        index: usize,
        object: String,
    },
    #[error("event {index}: use_end on `{object}` without a matching use_start")]
    UnmatchedUseEnd { index: usize, object: String },
    #[error("profile probabilities must lie in [0, 1]")]
    Profile,
}

impl SessionLog {
    pub fn empty(tester_id: impl Into<String>, level: Level) -> SessionLog {
        SessionLog {
            tester_id: tester_id.into(),
            level,
            profile: None,
            samples: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Checks every type invariant. Weight bounds hold by construction of [`Weight`].
    pub fn validate(&self) -> Result<(), InvariantError> {
        if !is_valid_identifier(&self.tester_id) {
            return Err(InvariantError::TesterId(self.tester_id.clone()));
        }
        if let Some(p) = &self.profile {
            if !p.is_valid() {
                return Err(InvariantError::Profile);
            }
        }
        for (index, pair) in self.samples.windows(2).enumerate() {
            if pair[1].t_ms < pair[0].t_ms {
                return Err(InvariantError::NonMonotonic {
                    kind: RecordKind::Sample,
                    index: index + 1,
                });
            }
        }
        for (index, s) in self.samples.iter().enumerate() {
            if let Some(target) = &s.gaze_target {
                if !is_valid_identifier(target) {
                    return Err(InvariantError::ObjectId {
                        kind: RecordKind::Sample,
                        index,
                        object: target.clone(),
                    });
                }
            }
        }
        for (index, pair) in self.events.windows(2).enumerate() {
            if pair[1].t_ms < pair[0].t_ms {
                return Err(InvariantError::NonMonotonic {
                    kind: RecordKind::Event,
                    index: index + 1,
                });
            }
        }
        let mut in_use = BTreeSet::new();
        for (index, e) in self.events.iter().enumerate() {
            if !is_valid_identifier(&e.object) {
                return Err(InvariantError::ObjectId {
                    kind: RecordKind::Event,
                    index,
                    object: e.object.clone(),
                });
            }
            match e.action {
                Action::UseStart => {
                    in_use.insert(e.object.as_str());
                }
                Action::UseEnd if !in_use.remove(e.object.as_str()) => {
                    return Err(InvariantError::UnmatchedUseEnd {
                        index,
                        object: e.object.clone(),
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Parses a `.drl` byte stream. Record order is preserved; nothing is resampled.
pub fn parse_session(input: &[u8]) -> Result<SessionLog, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| ParseError::Encoding(e.valid_up_to()))?;
    parse_session_str(text)
}

pub fn parse_session_str(text: &str) -> Result<SessionLog, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(ParseError::MissingHeader)?;
    let mut log = parse_header(header)?;

    let mut in_use: BTreeSet<String> = BTreeSet::new();
    for (line, raw) in lines {
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.split_ascii_whitespace();
        match fields.next() {
            Some("S") => {
                let sample = parse_sample(line, fields)?;
                if let Some(prev) = log.samples.last() {
                    if sample.t_ms < prev.t_ms {
                        return Err(ParseError::NonMonotonic {
                            line,
                            kind: RecordKind::Sample,
                            t_ms: sample.t_ms,
                            prev_ms: prev.t_ms,
                        });
                    }
                }
                log.samples.push(sample);
            }
            Some("E") => {
                let event = parse_event(line, fields)?;
                if let Some(prev) = log.events.last() {
                    if event.t_ms < prev.t_ms {
                        return Err(ParseError::NonMonotonic {
                            line,
                            kind: RecordKind::Event,
                            t_ms: event.t_ms,
                            prev_ms: prev.t_ms,
                        });
                    }
                }
                match event.action {
                    Action::UseStart => {
                        in_use.insert(event.object.clone());
                    }
                    Action::UseEnd if !in_use.remove(&event.object) => {
                        return Err(ParseError::UnmatchedUseEnd {
                            line,
                            object: event.object,
                        });
                    }
                    _ => {}
                }
                log.events.push(event);
            }
            Some(other) => {
                return Err(ParseError::Malformed {
                    line,
                    field: "record type",
                    detail: format!("expected `S` or `E`, found `{other}`"),
                })
            }
            None => unreachable!("blank lines are skipped"),
        }
    }
    Ok(log)
}

fn parse_header(header: &str) -> Result<SessionLog, ParseError> {
    const LINE: usize = 1;
    let malformed = |field: &'static str, detail: String| ParseError::Malformed {
        line: LINE,
        field,
        detail,
    };
    let mut fields = header.split_ascii_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(ParseError::MissingHeader);
    }
    match fields.next() {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(malformed("schema version", format!("unsupported `{v}`"))),
        None => return Err(malformed("schema version", "missing".into())),
    }

    let mut pairs = BTreeMap::new();
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| malformed("header field", format!("expected key=value, found `{field}`")))?;
        if pairs.insert(key, value).is_some() {
            return Err(malformed("header field", format!("duplicate key `{key}`")));
        }
    }

    let tester_id = pairs
        .remove("tester")
        .ok_or_else(|| malformed("tester", "missing".into()))?;
    if !is_valid_identifier(tester_id) {
        return Err(malformed("tester", format!("invalid id `{tester_id}`")));
    }
    let level_text = pairs
        .remove("level")
        .ok_or_else(|| malformed("level", "missing".into()))?;
    let level = level_text
        .parse::<u8>()
        .ok()
        .and_then(Level::new)
        .ok_or_else(|| ParseError::UnknownLevel {
            line: LINE,
            value: level_text.to_string(),
        })?;

    const PROFILE_KEYS: [&str; 5] = ["drill", "vr", "gaming", "deviation_rate", "emotionality"];
    let present = PROFILE_KEYS.iter().filter(|k| pairs.contains_key(*k)).count();
    let profile = match present {
        0 => None,
        5 => {
            let exp = |key: &'static str, pairs: &BTreeMap<&str, &str>| {
                pairs[key]
                    .parse::<Experience>()
                    .map_err(|_| malformed(key, format!("expected low|medium|high, found `{}`", pairs[key])))
            };
            let prob = |key: &'static str, pairs: &BTreeMap<&str, &str>| {
                pairs[key]
                    .parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| malformed(key, format!("expected probability in [0, 1], found `{}`", pairs[key])))
            };
            let profile = AgentProfile {
                drill_exp: exp("drill", &pairs)?,
                vr_exp: exp("vr", &pairs)?,
                gaming_exp: exp("gaming", &pairs)?,
                deviation_rate: prob("deviation_rate", &pairs)?,
                emotionality: prob("emotionality", &pairs)?,
            };
            for k in PROFILE_KEYS {
                pairs.remove(k);
            }
            Some(profile)
        }
        _ => {
            return Err(malformed(
                "profile",
                "drill, vr, gaming, deviation_rate and emotionality must appear together".into(),
            ))
        }
    };
    if let Some(key) = pairs.keys().next() {
        return Err(malformed("header field", format!("unknown key `{key}`")));
    }

    Ok(SessionLog {
        tester_id: tester_id.to_string(),
        level,
        profile,
        samples: Vec::new(),
        events: Vec::new(),
    })
}

fn parse_time(line: usize, field: Option<&str>) -> Result<u64, ParseError> {
    let text = field.ok_or(ParseError::Malformed {
        line,
        field: "t_ms",
        detail: "missing".into(),
    })?;
    text.parse::<u64>().map_err(|_| ParseError::Malformed {
        line,
        field: "t_ms",
        detail: format!("expected non-negative integer milliseconds, found `{text}`"),
    })
}

fn parse_object(line: usize, field: &'static str, text: &str) -> Result<String, ParseError> {
    if is_valid_identifier(text) {
        Ok(text.to_string())
    } else {
        Err(ParseError::Malformed {
            line,
            field,
            detail: format!("invalid object id `{text}`"),
        })
    }
}

fn parse_sample<'a>(line: usize, mut fields: impl Iterator<Item = &'a str>) -> Result<SampleRecord, ParseError> {
    let t_ms = parse_time(line, fields.next())?;
    let gaze_target = match fields.next() {
        None => {
            return Err(ParseError::Malformed {
                line,
                field: "gaze_target",
                detail: "missing".into(),
            })
        }
        Some("-") => None,
        Some(text) => Some(parse_object(line, "gaze_target", text)?),
    };
    let mut aus = BTreeMap::new();
    for field in fields {
        let (code, value) = field.split_once('=').ok_or_else(|| ParseError::Malformed {
            line,
            field: "action unit",
            detail: format!("expected AU=weight, found `{field}`"),
        })?;
        let au = code.parse::<AuCode>().map_err(|_| ParseError::UnknownAu {
            line,
            code: code.to_string(),
        })?;
        let number = value.parse::<f64>().map_err(|_| ParseError::Malformed {
            line,
            field: "action unit weight",
            detail: format!("{au} has non-numeric weight `{value}`"),
        })?;
        let weight = Weight::new(number).ok_or_else(|| ParseError::WeightOutOfRange {
            line,
            au,
            value: value.to_string(),
        })?;
        if aus.insert(au, weight).is_some() {
            return Err(ParseError::Malformed {
                line,
                field: "action unit",
                detail: format!("{au} given twice"),
            });
        }
    }
    Ok(SampleRecord { t_ms, gaze_target, aus })
}

fn parse_event<'a>(line: usize, mut fields: impl Iterator<Item = &'a str>) -> Result<InteractionEvent, ParseError> {
    let t_ms = parse_time(line, fields.next())?;
    let action_text = fields.next().ok_or(ParseError::Malformed {
        line,
        field: "action",
        detail: "missing".into(),
    })?;
    let action = action_text.parse::<Action>().map_err(|_| ParseError::Malformed {
        line,
        field: "action",
        detail: format!("unknown action `{action_text}`"),
    })?;
    let object_text = fields.next().ok_or(ParseError::Malformed {
        line,
        field: "object",
        detail: "missing".into(),
    })?;
    let object = parse_object(line, "object", object_text)?;
    if let Some(extra) = fields.next() {
        return Err(ParseError::Malformed {
            line,
            field: "event",
            detail: format!("unexpected trailing field `{extra}`"),
        });
    }
    Ok(InteractionEvent { t_ms, action, object })
}

/// Renders a log in canonical form.
///
/// Samples and events are merged by timestamp, samples first on ties.
/// Action units appear in canonical code order with four-decimal weights.
/// An absent gaze target is written as `-`.
pub fn serialize_session(log: &SessionLog) -> String {
    let mut out = String::with_capacity(64 + 48 * (log.samples.len() + log.events.len()));
    write!(
        out,
        "{MAGIC} {SCHEMA_VERSION} tester={} level={}",
        log.tester_id, log.level
    )
    .unwrap();
    if let Some(p) = &log.profile {
        write!(
            out,
            " drill={} vr={} gaming={} deviation_rate={} emotionality={}",
            p.drill_exp, p.vr_exp, p.gaming_exp, p.deviation_rate, p.emotionality
        )
        .unwrap();
    }
    out.push('\n');

    let mut samples = log.samples.iter().peekable();
    let mut events = log.events.iter().peekable();
    loop {
        let take_sample = match (samples.peek(), events.peek()) {
            (None, None) => break,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(s), Some(e)) => s.t_ms <= e.t_ms,
        };
        if take_sample {
            let s = samples.next().unwrap();
            write!(out, "S {} {}", s.t_ms, s.gaze_target.as_deref().unwrap_or("-")).unwrap();
            for (au, w) in &s.aus {
                write!(out, " {au}={w}").unwrap();
            }
        } else {
            let e = events.next().unwrap();
            write!(out, "E {} {} {}", e.t_ms, e.action, e.object).unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

pub fn read_session(path: &Path) -> Result<SessionLog, ReadError> {
    let bytes = std::fs::read(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_session(&bytes).map_err(|source| ReadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Canonical file name for a log: `tester<id>_level<n>.drl`.
pub fn session_file_name(log: &SessionLog) -> String {
    format!("tester{}_level{}.drl", log.tester_id, log.level)
}
