//! The four drill levels, the canonical task order and the conformance check.
//!
//! Every level runs `locate_fire`, then `report_fire` and `activate_alarm`
//! in either order, then `assess_severity`, then `extinguish_fire` (only where
//! the fire can be put out) and finally `evacuate`.
//!
//! Interactions map to tasks through an [`ObjectMap`]. Grabbing an object
//! prepares a task but never completes it; `use_end` only matters for the
//! extinguisher, where it marks the fire as out. Severity assessment has no
//! object of its own and is taken as done the moment the trainee commits to
//! a course of action: the first extinguisher `use_start` or the first
//! evacuation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{arrow_entries, ConfigError};
use crate::telemetry::{Action, InteractionEvent, Level, SessionLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DrillTask {
    LocateFire,
    ReportFire,
    ActivateAlarm,
    AssessSeverity,
    ExtinguishFire,
    Evacuate,
}

impl DrillTask {
    pub const ALL: [DrillTask; 6] = [
        DrillTask::LocateFire,
        DrillTask::ReportFire,
        DrillTask::ActivateAlarm,
        DrillTask::AssessSeverity,
        DrillTask::ExtinguishFire,
        DrillTask::Evacuate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DrillTask::LocateFire => "locate_fire",
            DrillTask::ReportFire => "report_fire",
            DrillTask::ActivateAlarm => "activate_alarm",
            DrillTask::AssessSeverity => "assess_severity",
            DrillTask::ExtinguishFire => "extinguish_fire",
            DrillTask::Evacuate => "evacuate",
        }
    }
}

impl fmt::Display for DrillTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DrillTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DrillTask::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown drill task `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Area {
    Galley,
    EngineRoom,
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Area::Galley => "galley",
            Area::EngineRoom => "engine_room",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guidance {
    FullText,
    MenuOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSpec {
    pub level: Level,
    pub area: Area,
    pub extinguishable: bool,
    pub guidance: Guidance,
}

impl LevelSpec {
    /// Level 1: small galley fire. Level 2: galley blaze that cannot be put
    /// out. Level 3: engine-room fire, menu guidance only. Level 4: engine-room
    /// inferno that cannot be put out.
    pub fn canonical(level: Level) -> LevelSpec {
        let (area, extinguishable, guidance) = match level.id() {
            1 => (Area::Galley, true, Guidance::FullText),
            2 => (Area::Galley, false, Guidance::FullText),
            3 => (Area::EngineRoom, true, Guidance::MenuOnly),
            _ => (Area::EngineRoom, false, Guidance::MenuOnly),
        };
        LevelSpec {
            level,
            area,
            extinguishable,
            guidance,
        }
    }

    pub fn all() -> [LevelSpec; 4] {
        Level::ALL.map(LevelSpec::canonical)
    }
}

/// Ordered stages of a level's drill. Tasks inside one stage may complete in any order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub level: LevelSpec,
    stages: Vec<Vec<DrillTask>>,
}

impl ProtocolSpec {
    pub fn for_level(level: LevelSpec) -> ProtocolSpec {
        let mut stages = vec![
            vec![DrillTask::LocateFire],
            vec![DrillTask::ReportFire, DrillTask::ActivateAlarm],
            vec![DrillTask::AssessSeverity],
        ];
        if level.extinguishable {
            stages.push(vec![DrillTask::ExtinguishFire]);
        }
        stages.push(vec![DrillTask::Evacuate]);
        ProtocolSpec { level, stages }
    }

    pub fn stages(&self) -> &[Vec<DrillTask>] {
        &self.stages
    }

    pub fn stage_of(&self, task: DrillTask) -> Option<usize> {
        self.stages.iter().position(|s| s.contains(&task))
    }

    pub fn tasks(&self) -> impl Iterator<Item = DrillTask> + '_ {
        self.stages.iter().flatten().copied()
    }

    /// True if `order` is a legal linearization of the stages.
    pub fn accepts(&self, order: &[DrillTask]) -> bool {
        let mut i = 0;
        for stage in &self.stages {
            let Some(chunk) = order.get(i..i + stage.len()) else {
                return false;
            };
            let got: BTreeSet<_> = chunk.iter().collect();
            let want: BTreeSet<_> = stage.iter().collect();
            if got != want || got.len() != chunk.len() {
                return false;
            }
            i += stage.len();
        }
        i == order.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMap {
    map: BTreeMap<String, DrillTask>,
}

impl Default for ObjectMap {
    fn default() -> Self {
        let map = [
            ("fire", DrillTask::LocateFire),
            ("emergency_phone", DrillTask::ReportFire),
            ("fire_alarm", DrillTask::ActivateAlarm),
            ("extinguisher", DrillTask::ExtinguishFire),
            ("muster_area", DrillTask::Evacuate),
        ]
        .into_iter()
        .map(|(o, t)| (o.to_string(), t))
        .collect();
        ObjectMap { map }
    }
}

impl ObjectMap {
    pub fn parse(text: &str) -> Result<ObjectMap, ConfigError> {
        let mut map = BTreeMap::new();
        for (line, object, task) in arrow_entries(text)? {
            let task: DrillTask = task.parse().map_err(|e: String| ConfigError::new(line, e))?;
            if task == DrillTask::AssessSeverity {
                return Err(ConfigError::new(
                    line,
                    "assess_severity is inferred, not tied to an object",
                ));
            }
            if map.insert(object.to_string(), task).is_some() {
                return Err(ConfigError::new(line, format!("`{object}` mapped twice")));
            }
        }
        Ok(ObjectMap { map })
    }

    pub fn task(&self, object: &str) -> Option<DrillTask> {
        self.map.get(object).copied()
    }

    pub fn objects_for(&self, task: DrillTask) -> impl Iterator<Item = &str> {
        self.map
            .iter()
            .filter(move |(_, t)| **t == task)
            .map(|(o, _)| o.as_str())
    }
}

/// The task an interaction performs, if any.
pub fn task_of_event(event: &InteractionEvent, objects: &ObjectMap) -> Option<DrillTask> {
    let task = objects.task(&event.object)?;
    match (task, event.action) {
        (DrillTask::LocateFire, _) => Some(task),
        (_, Action::Grab | Action::UseEnd) => None,
        _ => Some(task),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeviationKind {
    OutOfOrder,
    ForbiddenExtinguish,
    PrematureEvacuation,
    MissingTask,
}

impl DeviationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviationKind::OutOfOrder => "out_of_order",
            DeviationKind::ForbiddenExtinguish => "forbidden_extinguish",
            DeviationKind::PrematureEvacuation => "premature_evacuation",
            DeviationKind::MissingTask => "missing_task",
        }
    }
}

impl fmt::Display for DeviationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A protocol violation. Constructors keep `kind`, `task` and `t_ms` consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    kind: DeviationKind,
    task: DrillTask,
    t_ms: Option<u64>,
}

impl Deviation {
    pub fn out_of_order(task: DrillTask, t_ms: u64) -> Deviation {
        Deviation {
            kind: DeviationKind::OutOfOrder,
            task,
            t_ms: Some(t_ms),
        }
    }

    pub fn forbidden_extinguish(t_ms: u64) -> Deviation {
        Deviation {
            kind: DeviationKind::ForbiddenExtinguish,
            task: DrillTask::ExtinguishFire,
            t_ms: Some(t_ms),
        }
    }

    pub fn premature_evacuation(t_ms: u64) -> Deviation {
        Deviation {
            kind: DeviationKind::PrematureEvacuation,
            task: DrillTask::Evacuate,
            t_ms: Some(t_ms),
        }
    }

    pub fn missing(task: DrillTask) -> Deviation {
        Deviation {
            kind: DeviationKind::MissingTask,
            task,
            t_ms: None,
        }
    }

    pub fn kind(&self) -> DeviationKind {
        self.kind
    }

    pub fn task(&self) -> DrillTask {
        self.task
    }

    pub fn t_ms(&self) -> Option<u64> {
        self.t_ms
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t_ms {
            Some(t) => write!(f, "{} {} @{}ms", self.kind, self.task, t),
            None => write!(f, "{} {}", self.kind, self.task),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("log is for level {log} but the protocol is for level {protocol}")]
    LevelMismatch { log: Level, protocol: Level },
    #[error("session never reaches evacuation")]
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Milestone {
    Complete(DrillTask),
    ExtinguishStart,
    ExtinguishEnd,
}

fn milestones(log: &SessionLog, objects: &ObjectMap) -> Vec<(u64, Milestone)> {
    let mut out = Vec::new();
    if let Some(first_gaze) = log
        .samples
        .iter()
        .find(|s| s.gaze_target.as_deref().and_then(|o| objects.task(o)) == Some(DrillTask::LocateFire))
    {
        out.push((first_gaze.t_ms, Milestone::Complete(DrillTask::LocateFire)));
    }
    for event in &log.events {
        let mapped = objects.task(&event.object);
        let milestone = if mapped == Some(DrillTask::ExtinguishFire) {
            match event.action {
                Action::UseStart => Some(Milestone::ExtinguishStart),
                Action::UseEnd => Some(Milestone::ExtinguishEnd),
                _ => None,
            }
        } else {
            task_of_event(event, objects).map(Milestone::Complete)
        };
        if let Some(m) = milestone {
            out.push((event.t_ms, m));
        }
    }
    // stable: a gaze-located fire precedes events at the same instant
    out.sort_by_key(|&(t, _)| t);
    out
}

struct Replay {
    completions: Vec<(DrillTask, u64)>,
    deviations: Vec<Deviation>,
}

fn replay(log: &SessionLog, spec: &ProtocolSpec, objects: &ObjectMap) -> Replay {
    let extinguishable = spec.level.extinguishable;
    let mut completions: Vec<(DrillTask, u64)> = Vec::new();
    let mut deviations = Vec::new();
    let mut excused: BTreeSet<DrillTask> = BTreeSet::new();
    let mut forbidden_reported = false;

    let complete = |task: DrillTask,
                    t: u64,
                    completions: &mut Vec<(DrillTask, u64)>,
                    deviations: &mut Vec<Deviation>,
                    excused: &BTreeSet<DrillTask>| {
        let Some(stage) = spec.stage_of(task) else {
            return;
        };
        if completions.iter().any(|&(done, _)| done == task) {
            return;
        }
        let overtaken = completions
            .iter()
            .any(|&(done, _)| spec.stage_of(done).is_some_and(|s| s > stage));
        if overtaken && !excused.contains(&task) {
            deviations.push(Deviation::out_of_order(task, t));
        }
        completions.push((task, t));
    };

    for (t, milestone) in milestones(log, objects) {
        match milestone {
            Milestone::Complete(DrillTask::Evacuate) => {
                complete(
                    DrillTask::AssessSeverity,
                    t,
                    &mut completions,
                    &mut deviations,
                    &excused,
                );
                let extinguished = completions.iter().any(|&(d, _)| d == DrillTask::ExtinguishFire);
                let evacuated = completions.iter().any(|&(d, _)| d == DrillTask::Evacuate);
                if extinguishable && !extinguished && !evacuated {
                    deviations.push(Deviation::premature_evacuation(t));
                    excused.insert(DrillTask::ExtinguishFire);
                }
                complete(DrillTask::Evacuate, t, &mut completions, &mut deviations, &excused);
            }
            Milestone::Complete(task) => complete(task, t, &mut completions, &mut deviations, &excused),
            Milestone::ExtinguishStart => {
                complete(
                    DrillTask::AssessSeverity,
                    t,
                    &mut completions,
                    &mut deviations,
                    &excused,
                );
                if !extinguishable && !forbidden_reported {
                    deviations.push(Deviation::forbidden_extinguish(t));
                    forbidden_reported = true;
                }
            }
            Milestone::ExtinguishEnd => {
                if extinguishable {
                    complete(
                        DrillTask::ExtinguishFire,
                        t,
                        &mut completions,
                        &mut deviations,
                        &excused,
                    );
                }
            }
        }
    }

    for task in spec.tasks() {
        if !excused.contains(&task) && !completions.iter().any(|&(d, _)| d == task) {
            deviations.push(Deviation::missing(task));
        }
    }
    Replay {
        completions,
        deviations,
    }
}

fn check_level(log: &SessionLog, spec: &ProtocolSpec) -> Result<(), ProtocolError> {
    if log.level != spec.level.level {
        return Err(ProtocolError::LevelMismatch {
            log: log.level,
            protocol: spec.level.level,
        });
    }
    Ok(())
}

/// Deviations of a session from its level's drill, in detection order.
/// An empty list means the interaction stream is a legal run of the drill.
pub fn validate_sequence(
    log: &SessionLog,
    spec: &ProtocolSpec,
    objects: &ObjectMap,
) -> Result<Vec<Deviation>, ProtocolError> {
    check_level(log, spec)?;
    Ok(replay(log, spec, objects).deviations)
}

/// Task-tracker replay: each protocol task once, at its first completion,
/// in the order the trainee actually completed them.
pub fn track_progress(
    log: &SessionLog,
    spec: &ProtocolSpec,
    objects: &ObjectMap,
) -> Result<Vec<(DrillTask, u64)>, ProtocolError> {
    check_level(log, spec)?;
    Ok(replay(log, spec, objects).completions)
}

/// Milliseconds from the first sample (or level start, without samples) to
/// the first evacuation.
pub fn completion_time(log: &SessionLog, objects: &ObjectMap) -> Result<u64, ProtocolError> {
    let evacuated = log
        .events
        .iter()
        .find(|e| task_of_event(e, objects) == Some(DrillTask::Evacuate))
        .ok_or(ProtocolError::Incomplete)?;
    let start = log.samples.first().map_or(0, |s| s.t_ms);
    Ok(evacuated.t_ms.saturating_sub(start))
}
