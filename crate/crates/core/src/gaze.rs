//! Gaze events, scanpath sequences and their similarity scores.

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use thiserror::Error;

use crate::telemetry::SampleRecord;

/// Default blink-merge gap in milliseconds.
pub const DEFAULT_BLINK_GAP_MS: u64 = 150;
/// Window size used for sliding-window scoring unless configured otherwise.
pub const DEFAULT_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GazeError {
    #[error("similarity is undefined for an empty sequence")]
    EmptySequence,
    #[error("window {window} invalid for an ideal sequence of length {ideal_len}")]
    InvalidWindow { window: usize, ideal_len: usize },
    #[error("gaze distribution is undefined: no gaze events")]
    EmptyDistribution,
}

/// A dwell on one object, from its first to its last sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazeEvent {
    pub object: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Collapses samples into gaze events.
///
/// A run of consecutive samples on the same target is one event. Samples
/// with no target produce nothing. When only target-less samples separate
/// two runs on the same object, the blink lasts from the first target-less
/// sample to the first sample of the resumed run; if that is shorter than
/// `gap_ms` the runs are one event. `gap_ms = 0` disables merging.
pub fn filter_blinks(samples: &[SampleRecord], gap_ms: u64) -> Vec<GazeEvent> {
    let mut events: Vec<GazeEvent> = Vec::new();
    // time of the first target-less sample since the last on-target one
    let mut absent_since: Option<u64> = None;
    for sample in samples {
        let Some(target) = &sample.gaze_target else {
            absent_since.get_or_insert(sample.t_ms);
            continue;
        };
        let continues = match (events.last(), absent_since) {
            (Some(last), None) => last.object == *target,
            (Some(last), Some(since)) => last.object == *target && sample.t_ms - since < gap_ms,
            (None, _) => false,
        };
        if continues {
            events.last_mut().unwrap().end_ms = sample.t_ms;
        } else {
            events.push(GazeEvent {
                object: target.clone(),
                start_ms: sample.t_ms,
                end_ms: sample.t_ms,
            });
        }
        absent_since = None;
    }
    events
}

/// Ordered object identifiers with no two equal neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GazeSequence {
    items: Vec<String>,
}

impl GazeSequence {
    /// Builds a sequence, collapsing consecutive duplicates.
    pub fn new<I, S>(items: I) -> GazeSequence
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for item in items {
            let item = item.into();
            if out.last() != Some(&item) {
                out.push(item);
            }
        }
        GazeSequence { items: out }
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub fn extract_sequence(events: &[GazeEvent]) -> GazeSequence {
    GazeSequence::new(events.iter().map(|e| e.object.as_str()))
}

pub fn gaze_counts(events: &[GazeEvent]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for e in events {
        *counts.entry(e.object.clone()).or_insert(0) += 1;
    }
    counts
}

/// Normalizes summed per-object counts into fractions.
pub fn gaze_distribution<'a, I>(counts: I) -> Result<BTreeMap<String, f64>, GazeError>
where
    I: IntoIterator<Item = &'a BTreeMap<String, usize>>,
{
    let mut total_by_object: BTreeMap<String, usize> = BTreeMap::new();
    for map in counts {
        for (object, &n) in map {
            *total_by_object.entry(object.clone()).or_insert(0) += n;
        }
    }
    let total: usize = total_by_object.values().sum();
    if total == 0 {
        return Err(GazeError::EmptyDistribution);
    }
    Ok(total_by_object
        .into_iter()
        .filter(|&(_, n)| n > 0)
        .map(|(object, n)| (object, n as f64 / total as f64))
        .collect())
}

/// Length of the longest common subsequence, by the row-rolling DP table.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; inner.len() + 1];
    let mut curr = vec![0usize; inner.len() + 1];
    for x in outer {
        for (j, y) in inner.iter().enumerate() {
            curr[j + 1] = if x == y { prev[j] + 1 } else { curr[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[inner.len()]
}

/// Number of size-`window` windows of `ideal` (counted by position) that
/// occur as a contiguous run somewhere in `compared`.
pub fn sw_match_count<T: Eq + Hash>(ideal: &[T], compared: &[T], window: usize) -> Result<usize, GazeError> {
    if window == 0 || window > ideal.len() {
        return Err(GazeError::InvalidWindow {
            window,
            ideal_len: ideal.len(),
        });
    }
    let present: HashSet<&[T]> = compared.windows(window).collect();
    Ok(ideal.windows(window).filter(|w| present.contains(w)).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMethod {
    Lcs,
    SlidingWindow { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub value: f64,
    pub method: SimilarityMethod,
}

fn normalize(count: usize, ideal_len: usize, compared_len: usize) -> f64 {
    let value = count as f64 / ((ideal_len as f64) * (compared_len as f64)).sqrt();
    value.clamp(0.0, 1.0)
}

/// `lcs / sqrt(|ideal| * |compared|)`.
pub fn similarity_lcs(ideal: &GazeSequence, compared: &GazeSequence) -> Result<SimilarityScore, GazeError> {
    if ideal.is_empty() || compared.is_empty() {
        return Err(GazeError::EmptySequence);
    }
    let lcs = lcs_length(ideal.items(), compared.items());
    Ok(SimilarityScore {
        value: normalize(lcs, ideal.len(), compared.len()),
        method: SimilarityMethod::Lcs,
    })
}

/// `matches / sqrt(|ideal| * |compared|)`, clamped to `[0, 1]`.
pub fn similarity_sw(
    ideal: &GazeSequence,
    compared: &GazeSequence,
    window: usize,
) -> Result<SimilarityScore, GazeError> {
    let matches = sw_match_count(ideal.items(), compared.items(), window)?;
    if compared.is_empty() {
        return Err(GazeError::EmptySequence);
    }
    Ok(SimilarityScore {
        value: normalize(matches, ideal.len(), compared.len()),
        method: SimilarityMethod::SlidingWindow { window },
    })
}
