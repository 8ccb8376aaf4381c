//! Completion-time statistics and old-versus-new comparison.
//!
//!     cargo run --example cohort_metrics

use drillscope::metrics::{
    cohort_compare, improvement_pct, level_stats, level_stats_with, quartiles, LevelStats, StdDev,
};
use drillscope::telemetry::Level;

fn main() {
    let l1 = Level::new(1).unwrap();
    let times = [95.2, 130.4, 160.0, 171.9, 240.3, 182.5];
    let sample = level_stats(&times, l1).unwrap();
    let population = level_stats_with(&times, l1, StdDev::Population).unwrap();
    println!(
        "mean {:.2} s, sample std {:.2} s, population std {:.2} s",
        sample.mean_s, sample.std_s, population.std_s
    );
    let q = quartiles(&times).unwrap();
    println!(
        "min {:.1}  q1 {:.1}  median {:.1}  q3 {:.1}  max {:.1}",
        q[0], q[1], q[2], q[3], q[4]
    );

    // measured means and spreads of an earlier and a later build
    let row = |id: u8, mean_s: f64, std_s: f64| LevelStats {
        level: Level::new(id).unwrap(),
        mean_s,
        std_s,
        n: 7,
    };
    let old = [
        row(1, 166.88, 73.84),
        row(2, 83.88, 46.27),
        row(3, 144.65, 41.13),
        row(4, 73.58, 24.24),
    ];
    let new = [
        row(1, 142.14, 74.84),
        row(2, 56.43, 26.18),
        row(3, 124.00, 48.12),
        row(4, 63.14, 18.49),
    ];
    println!("\nlevel  old mean  new mean  improvement");
    for r in cohort_compare(&old, &new).unwrap() {
        println!(
            "{:>5}  {:>8.2}  {:>8.2}  {:>10.2}%",
            r.level, r.old_mean_s, r.new_mean_s, r.improvement_pct
        );
    }
    println!(
        "\nhalving a time is a {:.0}% improvement",
        improvement_pct(80.0, 40.0).unwrap()
    );
}
