//! Simulates a cohort and shows how experience shapes completion time.
//!
//!     cargo run --example simulate_cohort [seed]

use drillscope::protocol::{completion_time, ObjectMap};
use drillscope::sim::{parse_cohort, simulate_cohort, AgentProfile, Experience, SimConfig, TesterProfile};
use drillscope::telemetry::{session_file_name, Level};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(7, |s| s.parse().expect("seed must be an integer"));
    let testers = parse_cohort(include_str!("../configs/cohort_second.txt")).unwrap();
    let template = SimConfig::new(0, Level::new(1).unwrap());
    let logs = simulate_cohort(&testers, &template, seed).unwrap();
    let objects = ObjectMap::default();
    for log in &logs {
        let t = completion_time(log, &objects).unwrap();
        println!(
            "{:<22} {:>7.1} s  {:>5} samples",
            session_file_name(log),
            t as f64 / 1000.0,
            log.samples.len()
        );
    }

    // same trainee, only gaming experience differs
    let mean = |gaming: Experience| {
        let tester = TesterProfile {
            tester_id: format!("{gaming}"),
            profile: AgentProfile::new(Experience::High, Experience::High, gaming),
        };
        let runs: Vec<f64> = (0..25)
            .flat_map(|s| simulate_cohort(std::slice::from_ref(&tester), &template, seed + s).unwrap())
            .map(|log| completion_time(&log, &objects).unwrap() as f64 / 1000.0)
            .collect();
        runs.iter().sum::<f64>() / runs.len() as f64
    };
    let (low, high) = (mean(Experience::Low), mean(Experience::High));
    println!(
        "\nmean completion: low gaming {low:.1} s, high gaming {high:.1} s, ratio {:.2}",
        low / high
    );
}
