//! Labels facial action-unit frames with emotions and groups them by valence.
//!
//!     cargo run --example classify_emotions

use drillscope::au::AuCode::*;
use drillscope::facs::{active_aus, classify_frame, valence_of, AuFrame, RuleTable};
use drillscope::metrics::emotion_breakdown;

fn main() {
    let rules = RuleTable::default();
    let frames = [
        (
            "cheeks raised, lip corners pulled",
            AuFrame::from_pairs(&[(Au6, 0.8), (Au12, 0.9), (Au4, 0.2)]),
        ),
        (
            "nose wrinkled, upper lip raised",
            AuFrame::from_pairs(&[(Au9, 0.7), (Au10, 0.6)]),
        ),
        (
            "brows up, eyes wide, jaw drop",
            AuFrame::from_pairs(&[(Au1, 0.9), (Au2, 0.8), (Au5, 0.7), (Au26, 0.6)]),
        ),
        ("one-sided dimple", AuFrame::from_pairs(&[(Au14L, 0.7)])),
        ("relaxed", AuFrame::default()),
    ];
    let mut labels = Vec::new();
    for (what, frame) in &frames {
        let label = classify_frame(frame, &rules);
        let active: Vec<String> = active_aus(frame, rules.threshold())
            .iter()
            .map(|a| a.to_string())
            .collect();
        println!(
            "{what:<36} active [{}] -> {label} ({})",
            active.join(" "),
            valence_of(label)
        );
        labels.push(label);
    }
    let b = emotion_breakdown(labels, &Default::default()).unwrap();
    println!(
        "good {:.2}%  bad {:.2}%  none {:.2}%",
        b.good_pct, b.bad_pct, b.none_pct
    );

    // a stricter threshold from a config file
    let strict = include_str!("../configs/rules.txt").replace("threshold=0.5", "threshold=0.85");
    let (table, _) = RuleTable::parse_config(&strict).unwrap();
    println!(
        "at threshold 0.85 the first frame is {}",
        classify_frame(&frames[0].1, &table)
    );
}
