//! Per-session and cohort analysis, and the report formats.
//!
//! Reports are TOML documents written by hand so number formatting is fixed:
//! percentages carry 2 decimals, fractions 4, seconds 3. Values that cannot
//! be computed are written as strings (`"undefined"` for an accuracy with an
//! empty denominator, `"n/a"` when the input needed is missing) so a reader
//! never mistakes them for zero.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::facs::{RuleTable, ValenceMap};
use crate::gaze::{
    extract_sequence, filter_blinks, gaze_counts, gaze_distribution, similarity_lcs, similarity_sw, GazeError,
    GazeSequence, DEFAULT_BLINK_GAP_MS, DEFAULT_WINDOW,
};
use crate::metrics::{
    classify_session, cohort_compare, emotion_accuracy, emotion_breakdown, level_stats_with, quartiles, AccuracyMode,
    ComparisonRow, EmotionBreakdown, ExpectedEmotionMap, LevelStats, MetricsError, StdDev,
};
use crate::protocol::{completion_time, validate_sequence, Deviation, LevelSpec, ObjectMap, ProtocolSpec};
use crate::telemetry::{Level, SessionLog};

pub const REPORT_SCHEMA: &str = "drill-report/1";
pub const COMPARE_SCHEMA: &str = "drill-compare/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no sessions to analyze")]
    NoSessions,
    #[error("tester {tester} has two logs for level {level}")]
    DuplicateSession { tester: String, level: Level },
    #[error("no reference scanpath for level {0}")]
    MissingReference(Level),
    #[error("reference for level {0} has no gaze events")]
    EmptyReference(Level),
    #[error("tester {tester} level {level}: {source}")]
    Gaze {
        tester: String,
        level: Level,
        #[source]
        source: GazeError,
    },
    #[error("tester {tester} never evacuates on level {level}")]
    Incomplete { tester: String, level: Level },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Everything the analysis needs besides the logs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub rules: RuleTable,
    pub valence: ValenceMap,
    pub objects: ObjectMap,
    pub expected: ExpectedEmotionMap,
    /// Reference scanpath per level. When empty, similarity is not computed.
    pub references: BTreeMap<Level, GazeSequence>,
    pub window: usize,
    pub blink_gap_ms: u64,
    pub std_dev: StdDev,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            rules: RuleTable::default(),
            valence: ValenceMap::default(),
            objects: ObjectMap::default(),
            expected: ExpectedEmotionMap::default(),
            references: BTreeMap::new(),
            window: DEFAULT_WINDOW,
            blink_gap_ms: DEFAULT_BLINK_GAP_MS,
            std_dev: StdDev::Sample,
        }
    }
}

impl AnalysisConfig {
    /// Scanpath of a log under this configuration's blink gap.
    pub fn scanpath(&self, log: &SessionLog) -> GazeSequence {
        extract_sequence(&filter_blinks(&log.samples, self.blink_gap_ms))
    }

    /// Registers `log`'s scanpath as the reference for its level.
    pub fn add_reference(&mut self, log: &SessionLog) -> Result<(), AnalysisError> {
        let path = self.scanpath(log);
        if path.is_empty() {
            return Err(AnalysisError::EmptyReference(log.level));
        }
        self.references.insert(log.level, path);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub tester_id: String,
    pub level: Level,
    /// `None` when the trainee never reaches the muster area.
    pub completion_ms: Option<u64>,
    pub deviations: Vec<Deviation>,
    pub similarity_lcs: Option<f64>,
    pub similarity_sw: Option<f64>,
    pub accuracy_include_none: Option<f64>,
    pub accuracy_exclude_none: Option<f64>,
    /// Over frames with a gaze target; `None` when there are none.
    pub breakdown: Option<EmotionBreakdown>,
    pub gaze_counts: BTreeMap<String, usize>,
}

pub fn analyze_session(log: &SessionLog, config: &AnalysisConfig) -> Result<SessionReport, AnalysisError> {
    let gaze_err = |source| AnalysisError::Gaze {
        tester: log.tester_id.clone(),
        level: log.level,
        source,
    };
    let spec = ProtocolSpec::for_level(LevelSpec::canonical(log.level));
    let deviations = validate_sequence(log, &spec, &config.objects).expect("spec built from the log's level");
    let completion_ms = completion_time(log, &config.objects).ok();

    let events = filter_blinks(&log.samples, config.blink_gap_ms);
    let path = extract_sequence(&events);
    let (similarity_lcs, similarity_sw) = if config.references.is_empty() {
        (None, None)
    } else {
        let ideal = config
            .references
            .get(&log.level)
            .ok_or(AnalysisError::MissingReference(log.level))?;
        if path.is_empty() {
            (None, None)
        } else {
            let lcs = similarity_lcs(ideal, &path).map_err(gaze_err)?;
            let sw = similarity_sw(ideal, &path, config.window).map_err(gaze_err)?;
            (Some(lcs.value), Some(sw.value))
        }
    };

    let frames = classify_session(log, &config.rules);
    let targeted = frames.iter().filter(|f| f.object.is_some()).map(|f| f.label);
    Ok(SessionReport {
        tester_id: log.tester_id.clone(),
        level: log.level,
        completion_ms,
        deviations,
        similarity_lcs,
        similarity_sw,
        accuracy_include_none: emotion_accuracy(&frames, &config.expected, AccuracyMode::IncludeNone),
        accuracy_exclude_none: emotion_accuracy(&frames, &config.expected, AccuracyMode::ExcludeNone),
        breakdown: emotion_breakdown(targeted, &config.valence).ok(),
        gaze_counts: gaze_counts(&events),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortReport {
    /// Levels with at least one completed session, ascending.
    pub levels: Vec<LevelStats>,
    /// Against a baseline cohort, when one was given.
    pub comparison: Vec<ComparisonRow>,
    pub gaze_distribution: BTreeMap<String, f64>,
    /// Ordered by tester id (numeric-aware) then level.
    pub sessions: Vec<SessionReport>,
}

/// Orders tester ids so that `2` sorts before `10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, dx), (true, dy)) => {
                let (tx, ty) = (dx.trim_start_matches('0'), dy.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
            }
            ((_, sx), (_, sy)) => sx.cmp(sy),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

fn sorted_logs(logs: &[SessionLog]) -> Result<Vec<&SessionLog>, AnalysisError> {
    let mut sorted: Vec<&SessionLog> = logs.iter().collect();
    sorted.sort_by(|a, b| natural_cmp(&a.tester_id, &b.tester_id).then(a.level.cmp(&b.level)));
    for pair in sorted.windows(2) {
        if pair[0].tester_id == pair[1].tester_id && pair[0].level == pair[1].level {
            return Err(AnalysisError::DuplicateSession {
                tester: pair[0].tester_id.clone(),
                level: pair[0].level,
            });
        }
    }
    Ok(sorted)
}

fn stats_by_level<I>(times: I, kind: StdDev) -> Result<Vec<LevelStats>, AnalysisError>
where
    I: IntoIterator<Item = (Level, u64)>,
{
    let mut by_level: BTreeMap<Level, Vec<f64>> = BTreeMap::new();
    for (level, ms) in times {
        by_level.entry(level).or_default().push(ms as f64 / 1000.0);
    }
    by_level
        .iter()
        .map(|(&level, t)| level_stats_with(t, level, kind).map_err(AnalysisError::from))
        .collect()
}

pub fn analyze(logs: &[SessionLog], config: &AnalysisConfig) -> Result<CohortReport, AnalysisError> {
    if logs.is_empty() {
        return Err(AnalysisError::NoSessions);
    }
    let sorted = sorted_logs(logs)?;
    let sessions: Vec<SessionReport> = sorted
        .par_iter()
        .map(|log| analyze_session(log, config))
        .collect::<Result<_, _>>()?;
    let levels = stats_by_level(
        sessions.iter().filter_map(|s| s.completion_ms.map(|ms| (s.level, ms))),
        config.std_dev,
    )?;
    let gaze_distribution = gaze_distribution(sessions.iter().map(|s| &s.gaze_counts)).unwrap_or_default();
    Ok(CohortReport {
        levels,
        comparison: Vec::new(),
        gaze_distribution,
        sessions,
    })
}

/// Per-level completion times in seconds; every session must complete.
pub fn completion_times(logs: &[SessionLog], objects: &ObjectMap) -> Result<BTreeMap<Level, Vec<f64>>, AnalysisError> {
    let sorted = sorted_logs(logs)?;
    let mut out: BTreeMap<Level, Vec<f64>> = BTreeMap::new();
    for log in sorted {
        let ms = completion_time(log, objects).map_err(|_| AnalysisError::Incomplete {
            tester: log.tester_id.clone(),
            level: log.level,
        })?;
        out.entry(log.level).or_default().push(ms as f64 / 1000.0);
    }
    Ok(out)
}

/// Old-versus-new completion statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<ComparisonRow>,
    /// Per level: min, lower quartile, median, upper quartile, max, before and after.
    pub quartiles: Vec<(Level, [f64; 5], [f64; 5])>,
}

pub fn compare_cohorts(
    before: &[SessionLog],
    after: &[SessionLog],
    objects: &ObjectMap,
    kind: StdDev,
) -> Result<CompareReport, AnalysisError> {
    if before.is_empty() || after.is_empty() {
        return Err(AnalysisError::NoSessions);
    }
    let (old, new) = (completion_times(before, objects)?, completion_times(after, objects)?);
    let stats = |m: &BTreeMap<Level, Vec<f64>>| -> Result<Vec<LevelStats>, MetricsError> {
        m.iter().map(|(&l, t)| level_stats_with(t, l, kind)).collect()
    };
    let rows = cohort_compare(&stats(&old)?, &stats(&new)?)?;
    let quartiles = old
        .iter()
        .map(|(level, t)| Ok((*level, quartiles(t)?, quartiles(&new[level])?)))
        .collect::<Result<_, MetricsError>>()?;
    Ok(CompareReport { rows, quartiles })
}

/// Adds a comparison against `baseline` to a finished report.
pub fn attach_baseline(
    report: &mut CohortReport,
    baseline: &[SessionLog],
    config: &AnalysisConfig,
) -> Result<(), AnalysisError> {
    let times = completion_times(baseline, &config.objects)?;
    let before = times
        .iter()
        .map(|(&l, t)| level_stats_with(t, l, config.std_dev))
        .collect::<Result<Vec<_>, _>>()?;
    report.comparison = cohort_compare(&before, &report.levels)?;
    Ok(())
}

fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    // "-0.00" reads as a sign error
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn or_marker(value: Option<f64>, decimals: usize, marker: &str) -> String {
    value.map_or_else(|| format!("\"{marker}\""), |v| fixed(v, decimals))
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => write!(out, "\\u{:04X}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn render_row(out: &mut String, row: &ComparisonRow) {
    writeln!(out, "\n[[comparison]]").unwrap();
    writeln!(out, "level = {}", row.level).unwrap();
    writeln!(out, "old_mean_s = {}", fixed(row.old_mean_s, 3)).unwrap();
    writeln!(out, "old_std_s = {}", fixed(row.old_std_s, 3)).unwrap();
    writeln!(out, "new_mean_s = {}", fixed(row.new_mean_s, 3)).unwrap();
    writeln!(out, "new_std_s = {}", fixed(row.new_std_s, 3)).unwrap();
    writeln!(out, "improvement_pct = {}", fixed(row.improvement_pct, 2)).unwrap();
}

pub fn render_report(report: &CohortReport) -> String {
    let mut out = String::new();
    writeln!(out, "schema = {}", quoted(REPORT_SCHEMA)).unwrap();
    for s in &report.levels {
        writeln!(out, "\n[[level]]").unwrap();
        writeln!(out, "level = {}", s.level).unwrap();
        writeln!(out, "n = {}", s.n).unwrap();
        writeln!(out, "mean_s = {}", fixed(s.mean_s, 3)).unwrap();
        writeln!(out, "std_s = {}", fixed(s.std_s, 3)).unwrap();
    }
    for row in &report.comparison {
        render_row(&mut out, row);
    }
    writeln!(out, "\n[gaze_distribution]").unwrap();
    for (object, frac) in &report.gaze_distribution {
        writeln!(out, "{} = {}", quoted(object), fixed(*frac, 4)).unwrap();
    }
    for s in &report.sessions {
        writeln!(out, "\n[[session]]").unwrap();
        writeln!(out, "tester = {}", quoted(&s.tester_id)).unwrap();
        writeln!(out, "level = {}", s.level).unwrap();
        match s.completion_ms {
            Some(ms) => writeln!(out, "completion_ms = {ms}").unwrap(),
            None => writeln!(out, "completion_ms = \"incomplete\"").unwrap(),
        }
        writeln!(out, "similarity_lcs = {}", or_marker(s.similarity_lcs, 4, "n/a")).unwrap();
        writeln!(out, "similarity_sw = {}", or_marker(s.similarity_sw, 4, "n/a")).unwrap();
        writeln!(
            out,
            "accuracy_include_none = {}",
            or_marker(s.accuracy_include_none, 4, "undefined")
        )
        .unwrap();
        writeln!(
            out,
            "accuracy_exclude_none = {}",
            or_marker(s.accuracy_exclude_none, 4, "undefined")
        )
        .unwrap();
        let b = s.breakdown;
        writeln!(out, "good_pct = {}", or_marker(b.map(|b| b.good_pct), 2, "n/a")).unwrap();
        writeln!(out, "bad_pct = {}", or_marker(b.map(|b| b.bad_pct), 2, "n/a")).unwrap();
        writeln!(out, "none_pct = {}", or_marker(b.map(|b| b.none_pct), 2, "n/a")).unwrap();
        let devs: Vec<String> = s
            .deviations
            .iter()
            .map(|d| match d.t_ms() {
                Some(t) => format!(
                    "{{ kind = {}, task = {}, t_ms = {t} }}",
                    quoted(d.kind().as_str()),
                    quoted(d.task().as_str())
                ),
                None => format!(
                    "{{ kind = {}, task = {} }}",
                    quoted(d.kind().as_str()),
                    quoted(d.task().as_str())
                ),
            })
            .collect();
        writeln!(out, "deviations = [{}]", devs.join(", ")).unwrap();
        writeln!(out, "\n[session.gaze_counts]").unwrap();
        for (object, n) in &s.gaze_counts {
            writeln!(out, "{} = {n}", quoted(object)).unwrap();
        }
    }
    out
}

pub fn render_compare(report: &CompareReport) -> String {
    let mut out = String::new();
    writeln!(out, "schema = {}", quoted(COMPARE_SCHEMA)).unwrap();
    for row in &report.rows {
        render_row(&mut out, row);
    }
    let five = |q: &[f64; 5]| q.iter().map(|v| fixed(*v, 3)).collect::<Vec<_>>().join(", ");
    for (level, before, after) in &report.quartiles {
        writeln!(out, "\n[[quartiles]]").unwrap();
        writeln!(out, "level = {level}").unwrap();
        writeln!(out, "before_s = [{}]", five(before)).unwrap();
        writeln!(out, "after_s = [{}]", five(after)).unwrap();
    }
    out
}

fn cell(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(String::new, |v| fixed(v, decimals))
}

/// One row per session, for spreadsheets. Missing values are empty cells.
pub fn write_sessions_csv<W: std::io::Write>(report: &CohortReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tester",
        "level",
        "completion_s",
        "deviations",
        "similarity_lcs",
        "similarity_sw",
        "accuracy_include_none",
        "accuracy_exclude_none",
        "good_pct",
        "bad_pct",
        "none_pct",
    ])?;
    for s in &report.sessions {
        let b = s.breakdown;
        w.write_record([
            s.tester_id.clone(),
            s.level.to_string(),
            cell(s.completion_ms.map(|ms| ms as f64 / 1000.0), 3),
            s.deviations
                .iter()
                .map(|d| d.kind().as_str())
                .collect::<Vec<_>>()
                .join(";"),
            cell(s.similarity_lcs, 4),
            cell(s.similarity_sw, 4),
            cell(s.accuracy_include_none, 4),
            cell(s.accuracy_exclude_none, 4),
            cell(b.map(|b| b.good_pct), 2),
            cell(b.map(|b| b.bad_pct), 2),
            cell(b.map(|b| b.none_pct), 2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Data series for external plotting, one CSV per chart. Returns the file names written.
pub fn write_plot_data(report: &CohortReport, dir: &Path) -> csv::Result<Vec<&'static str>> {
    std::fs::create_dir_all(dir)?;
    let id = |s: &SessionReport| vec![s.tester_id.clone(), s.level.to_string()];
    let per_session = |f: &dyn Fn(&SessionReport) -> Vec<String>| -> Vec<Vec<String>> {
        report
            .sessions
            .iter()
            .map(|s| {
                let mut row = id(s);
                row.extend(f(s));
                row
            })
            .collect()
    };

    write_table(
        &dir.join("completion_times.csv"),
        &["tester", "level", "seconds"],
        report
            .sessions
            .iter()
            .filter_map(|s| {
                s.completion_ms
                    .map(|ms| vec![s.tester_id.clone(), s.level.to_string(), fixed(ms as f64 / 1000.0, 3)])
            })
            .collect(),
    )?;
    write_table(
        &dir.join("gaze_counts.csv"),
        &["tester", "level", "object", "count"],
        report
            .sessions
            .iter()
            .flat_map(|s| {
                s.gaze_counts
                    .iter()
                    .map(move |(o, n)| vec![s.tester_id.clone(), s.level.to_string(), o.clone(), n.to_string()])
            })
            .collect(),
    )?;
    write_table(
        &dir.join("gaze_distribution.csv"),
        &["object", "fraction"],
        report
            .gaze_distribution
            .iter()
            .map(|(o, f)| vec![o.clone(), fixed(*f, 4)])
            .collect(),
    )?;
    write_table(
        &dir.join("similarity_lcs.csv"),
        &["tester", "level", "score"],
        per_session(&|s| vec![cell(s.similarity_lcs, 4)]),
    )?;
    write_table(
        &dir.join("similarity_sw.csv"),
        &["tester", "level", "score"],
        per_session(&|s| vec![cell(s.similarity_sw, 4)]),
    )?;
    write_table(
        &dir.join("emotion_accuracy.csv"),
        &["tester", "level", "include_none", "exclude_none"],
        per_session(&|s| vec![cell(s.accuracy_include_none, 4), cell(s.accuracy_exclude_none, 4)]),
    )?;
    write_table(
        &dir.join("emotion_breakdown.csv"),
        &["tester", "level", "good_pct", "bad_pct", "none_pct"],
        per_session(&|s| {
            let b = s.breakdown;
            vec![
                cell(b.map(|b| b.good_pct), 2),
                cell(b.map(|b| b.bad_pct), 2),
                cell(b.map(|b| b.none_pct), 2),
            ]
        }),
    )?;
    Ok(vec![
        "completion_times.csv",
        "gaze_counts.csv",
        "gaze_distribution.csv",
        "similarity_lcs.csv",
        "similarity_sw.csv",
        "emotion_accuracy.csv",
        "emotion_breakdown.csv",
    ])
}
