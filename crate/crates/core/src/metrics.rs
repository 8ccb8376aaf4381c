//! Completion-time statistics, improvement percentages, emotion accuracy and
//! valence breakdowns.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::config::{arrow_entries, ConfigError};
use crate::facs::{classify_frame, AuFrame, Emotion, RuleTable, Valence, ValenceMap};
use crate::telemetry::{Level, SessionLog};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no values to aggregate")]
    Empty,
    #[error("baseline mean must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("level sets differ: before {before:?}, after {after:?}")]
    LevelMismatch { before: Vec<u8>, after: Vec<u8> },
}

/// Which standard deviation to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDev {
    /// `n - 1` denominator; zero for a single value.
    #[default]
    Sample,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    pub level: Level,
    pub mean_s: f64,
    pub std_s: f64,
    pub n: usize,
}

pub fn level_stats(times_s: &[f64], level: Level) -> Result<LevelStats, MetricsError> {
    level_stats_with(times_s, level, StdDev::Sample)
}

pub fn level_stats_with(times_s: &[f64], level: Level, kind: StdDev) -> Result<LevelStats, MetricsError> {
    if times_s.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = times_s.len();
    let mean = times_s.iter().sum::<f64>() / n as f64;
    let ss: f64 = times_s.iter().map(|t| (t - mean) * (t - mean)).sum();
    let denom = match kind {
        StdDev::Sample => n.saturating_sub(1),
        StdDev::Population => n,
    };
    let std = if denom == 0 { 0.0 } else { (ss / denom as f64).sqrt() };
    Ok(LevelStats {
        level,
        mean_s: mean,
        std_s: std,
        n,
    })
}

/// Five-number summary for box plots: min, Q1, median, Q3, max.
/// Quartiles interpolate linearly between order statistics.
pub fn quartiles(values: &[f64]) -> Result<[f64; 5], MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    Ok([sorted[0], at(0.25), at(0.5), at(0.75), sorted[sorted.len() - 1]])
}

/// `100 * (old - new) / old`.
pub fn improvement_pct(old_mean: f64, new_mean: f64) -> Result<f64, MetricsError> {
    if old_mean.is_nan() || old_mean <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline(old_mean));
    }
    Ok(100.0 * (old_mean - new_mean) / old_mean)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub level: Level,
    pub old_mean_s: f64,
    pub old_std_s: f64,
    pub new_mean_s: f64,
    pub new_std_s: f64,
    pub improvement_pct: f64,
}

/// Per-level before/after comparison. Both sides must cover the same levels.
pub fn cohort_compare(before: &[LevelStats], after: &[LevelStats]) -> Result<Vec<ComparisonRow>, MetricsError> {
    let before_map: BTreeMap<Level, &LevelStats> = before.iter().map(|s| (s.level, s)).collect();
    let after_map: BTreeMap<Level, &LevelStats> = after.iter().map(|s| (s.level, s)).collect();
    let ids = |m: &BTreeMap<Level, &LevelStats>| m.keys().map(|l| l.id()).collect::<Vec<_>>();
    if before_map.len() != before.len() || after_map.len() != after.len() || !before_map.keys().eq(after_map.keys()) {
        return Err(MetricsError::LevelMismatch {
            before: ids(&before_map),
            after: ids(&after_map),
        });
    }
    before_map
        .values()
        .zip(after_map.values())
        .map(|(b, a)| {
            Ok(ComparisonRow {
                level: b.level,
                old_mean_s: b.mean_s,
                old_std_s: b.std_s,
                new_mean_s: a.mean_s,
                new_std_s: a.std_s,
                improvement_pct: improvement_pct(b.mean_s, a.mean_s)?,
            })
        })
        .collect()
}

/// A classified frame together with the object gazed at that instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedFrame {
    pub t_ms: u64,
    pub object: Option<String>,
    pub label: Emotion,
}

pub fn classify_session(log: &SessionLog, rules: &RuleTable) -> Vec<ClassifiedFrame> {
    log.samples
        .iter()
        .map(|s| ClassifiedFrame {
            t_ms: s.t_ms,
            object: s.gaze_target.clone(),
            label: classify_frame(&AuFrame::from(s), rules),
        })
        .collect()
}

/// Emotions expected while looking at each object. Objects absent from the
/// map are not scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedEmotionMap {
    map: BTreeMap<String, BTreeSet<Emotion>>,
}

impl Default for ExpectedEmotionMap {
    fn default() -> Self {
        let fear_or_surprise = BTreeSet::from([Emotion::Fear, Emotion::Surprise]);
        let surprise = BTreeSet::from([Emotion::Surprise]);
        let map = [
            ("fire", fear_or_surprise.clone()),
            ("extinguisher", fear_or_surprise),
            ("fire_alarm", surprise.clone()),
            ("emergency_phone", surprise),
        ]
        .into_iter()
        .map(|(o, s)| (o.to_string(), s))
        .collect();
        ExpectedEmotionMap { map }
    }
}

impl ExpectedEmotionMap {
    pub fn new(map: BTreeMap<String, BTreeSet<Emotion>>) -> Result<ExpectedEmotionMap, String> {
        for (object, set) in &map {
            if set.is_empty() {
                return Err(format!("`{object}` has no expected emotions"));
            }
            if set.contains(&Emotion::NoEmotion) {
                return Err(format!("`{object}` lists no_emotion as expected"));
            }
        }
        Ok(ExpectedEmotionMap { map })
    }

    /// `object -> emotion,emotion` lines.
    pub fn parse(text: &str) -> Result<ExpectedEmotionMap, ConfigError> {
        let mut map: BTreeMap<String, BTreeSet<Emotion>> = BTreeMap::new();
        let mut last_line = 0;
        for (line, object, list) in arrow_entries(text)? {
            last_line = line;
            let mut set = BTreeSet::new();
            for name in list.split(',').map(str::trim) {
                let e: Emotion = name.parse().map_err(|e: String| ConfigError::new(line, e))?;
                set.insert(e);
            }
            if map.insert(object.to_string(), set).is_some() {
                return Err(ConfigError::new(line, format!("`{object}` listed twice")));
            }
        }
        ExpectedEmotionMap::new(map).map_err(|e| ConfigError::new(last_line, e))
    }

    pub fn expected(&self, object: &str) -> Option<&BTreeSet<Emotion>> {
        self.map.get(object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyMode {
    IncludeNone,
    ExcludeNone,
}

/// Share of scored frames whose label is among the emotions expected for the
/// gazed object. Frames without a gaze target, or on unscored objects, are
/// skipped; [`AccuracyMode::ExcludeNone`] also drops `no_emotion` frames.
/// `None` when nothing is left to score.
pub fn emotion_accuracy(frames: &[ClassifiedFrame], expected: &ExpectedEmotionMap, mode: AccuracyMode) -> Option<f64> {
    let mut considered = 0usize;
    let mut correct = 0usize;
    for frame in frames {
        let Some(set) = frame.object.as_deref().and_then(|o| expected.expected(o)) else {
            continue;
        };
        if mode == AccuracyMode::ExcludeNone && frame.label == Emotion::NoEmotion {
            continue;
        }
        considered += 1;
        if set.contains(&frame.label) {
            correct += 1;
        }
    }
    (considered > 0).then(|| correct as f64 / considered as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionBreakdown {
    pub good_pct: f64,
    pub bad_pct: f64,
    pub none_pct: f64,
}

pub fn emotion_breakdown<I>(labels: I, valence: &ValenceMap) -> Result<EmotionBreakdown, MetricsError>
where
    I: IntoIterator<Item = Emotion>,
{
    let (mut good, mut bad, mut none) = (0usize, 0usize, 0usize);
    for label in labels {
        match valence.get(label) {
            Valence::Good => good += 1,
            Valence::Bad => bad += 1,
            Valence::None => none += 1,
        }
    }
    let total = good + bad + none;
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let pct = |n: usize| 100.0 * n as f64 / total as f64;
    Ok(EmotionBreakdown {
        good_pct: pct(good),
        bad_pct: pct(bad),
        none_pct: pct(none),
    })
}
