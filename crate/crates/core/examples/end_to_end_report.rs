//! Simulate, write to disk, read back, analyze, and print the report.
//!
//!     cargo run --example end_to_end_report [output-dir]

use std::path::PathBuf;

use drillscope::report::{analyze, render_report, write_plot_data, AnalysisConfig};
use drillscope::sim::{parse_cohort, simulate_cohort, SimConfig};
use drillscope::telemetry::{read_session, serialize_session, session_file_name, Level};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("drillscope-demo"), PathBuf::from);
    std::fs::create_dir_all(&dir).unwrap();

    let testers = parse_cohort(include_str!("../configs/cohort_second.txt")).unwrap();
    let logs = simulate_cohort(&testers, &SimConfig::new(0, Level::new(1).unwrap()), 42).unwrap();
    let mut paths = Vec::new();
    for log in &logs {
        let path = dir.join(session_file_name(log));
        std::fs::write(&path, serialize_session(log)).unwrap();
        paths.push(path);
    }

    let loaded: Vec<_> = paths.iter().map(|p| read_session(p).unwrap()).collect();
    let mut config = AnalysisConfig::default();
    // the most experienced trainee's scanpaths are the reference
    for log in loaded.iter().filter(|l| l.tester_id == "1") {
        config.add_reference(log).unwrap();
    }
    let report = analyze(&loaded, &config).unwrap();
    let files = write_plot_data(&report, &dir.join("plots")).unwrap();

    let text = render_report(&report);
    let head: Vec<&str> = text.lines().take(60).collect();
    println!("{}", head.join("\n"));
    println!("... ({} lines)\n", text.lines().count());
    for s in &report.sessions {
        println!(
            "tester {:>2} level {}  lcs {}  sw {}  deviations {}",
            s.tester_id,
            s.level,
            s.similarity_lcs.map_or("n/a".into(), |v| format!("{v:.3}")),
            s.similarity_sw.map_or("n/a".into(), |v| format!("{v:.3}")),
            s.deviations.len()
        );
    }
    println!("\nlogs and {} plot tables written under {}", files.len(), dir.display());
}
