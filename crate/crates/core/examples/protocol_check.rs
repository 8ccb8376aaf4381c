//! Checks interaction streams against the drill protocol, including the
//! typical mistakes: fighting a fire that should be left alone, and leaving
//! before a fire that could be put out is out.
//!
//!     cargo run --example protocol_check

use drillscope::protocol::{track_progress, validate_sequence, LevelSpec, ObjectMap, ProtocolSpec};
use drillscope::telemetry::parse_session_str;

fn check(title: &str, text: &str) {
    let log = parse_session_str(text).unwrap();
    let spec = ProtocolSpec::for_level(LevelSpec::canonical(log.level));
    let objects = ObjectMap::default();
    let progress = track_progress(&log, &spec, &objects).unwrap();
    let deviations = validate_sequence(&log, &spec, &objects).unwrap();
    println!("{title}");
    for (task, t) in progress {
        println!("  {t:>6} ms  {task}");
    }
    if deviations.is_empty() {
        println!("  no deviations");
    }
    for d in deviations {
        println!("  deviation: {d}");
    }
}

fn main() {
    for spec in LevelSpec::all() {
        let tasks: Vec<String> = ProtocolSpec::for_level(spec)
            .stages()
            .iter()
            .map(|stage| stage.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" | "))
            .collect();
        println!(
            "level {} ({}, extinguishable: {}): {}",
            spec.level,
            spec.area,
            spec.extinguishable,
            tasks.join(" -> ")
        );
    }
    println!();

    check(
        "level 1, by the book:",
        "#drl v1 tester=1 level=1\nS 0 fire\nE 1000 activate fire_alarm\nE 2000 activate emergency_phone\n\
         E 3000 grab extinguisher\nE 3500 use_start extinguisher\nE 10500 use_end extinguisher\nE 20000 enter_zone muster_area\n",
    );
    check(
        "level 2, extinguisher used on an inextinguishable fire:",
        "#drl v1 tester=4 level=2\nS 0 fire\nE 1000 activate emergency_phone\nE 2000 activate fire_alarm\n\
         E 3000 use_start extinguisher\nE 6000 use_end extinguisher\nE 9000 enter_zone muster_area\n",
    );
    check(
        "level 3, evacuated before extinguishing:",
        "#drl v1 tester=8 level=3\nS 0 fire\nE 1000 activate emergency_phone\nE 2000 activate fire_alarm\n\
         E 9000 enter_zone muster_area\n",
    );
}
