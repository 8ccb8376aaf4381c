//! Turns raw gaze samples into a scanpath and scores it against a reference.
//!
//!     cargo run --example gaze_similarity

use drillscope::gaze::{extract_sequence, filter_blinks, lcs_length, similarity_lcs, similarity_sw, GazeSequence};
use drillscope::telemetry::SampleRecord;

fn sample(t_ms: u64, target: Option<&str>) -> SampleRecord {
    SampleRecord {
        t_ms,
        gaze_target: target.map(String::from),
        aus: Default::default(),
    }
}

fn main() {
    // a 100 ms blink while looking at the fire, then a long look away
    let samples = [
        sample(0, Some("fire")),
        sample(100, Some("fire")),
        sample(200, None),
        sample(300, Some("fire")),
        sample(400, Some("fire_alarm")),
        sample(500, None),
        sample(600, None),
        sample(700, None),
        sample(800, None),
        sample(900, Some("fire_alarm")),
        sample(1000, Some("emergency_phone")),
        sample(1100, Some("extinguisher")),
    ];
    for gap in [0, 150, 1000] {
        let events = filter_blinks(&samples, gap);
        let path = extract_sequence(&events);
        println!(
            "blink gap {gap:>4} ms: {} events, scanpath {:?}",
            events.len(),
            path.items()
        );
    }

    let ideal = GazeSequence::new(["fire", "emergency_phone", "fire_alarm", "extinguisher"]);
    let compared = extract_sequence(&filter_blinks(&samples, 150));
    println!("lcs length {}", lcs_length(ideal.items(), compared.items()));
    println!(
        "similarity (LCS) {:.4}",
        similarity_lcs(&ideal, &compared).unwrap().value
    );
    for window in 1..=3 {
        println!(
            "similarity (SW, window {window}) {:.4}",
            similarity_sw(&ideal, &compared, window).unwrap().value
        );
    }
}
