//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drillscope::au::{AuCode, Weight};
use drillscope::cli;
use drillscope::facs::{classify_frame, AuFrame, Emotion, Rule, RuleTable, ValenceMap};
use drillscope::gaze::{lcs_length, similarity_lcs, similarity_sw, sw_match_count, GazeError, GazeSequence};
use drillscope::metrics::{
    cohort_compare, emotion_accuracy, emotion_breakdown, AccuracyMode, ClassifiedFrame, ExpectedEmotionMap, LevelStats,
};
use drillscope::protocol::{validate_sequence, DeviationKind, LevelSpec, ObjectMap, ProtocolSpec};
use drillscope::report::{analyze, render_report, AnalysisConfig};
use drillscope::sim::{simulate_detailed, AgentProfile, Experience, SimConfig};
use drillscope::telemetry::{serialize_session, Action, InteractionEvent, Level, SampleRecord, SessionLog};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn level(id: u8) -> Level {
    Level::new(id).unwrap()
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, alphabet: u8) -> Vec<u8> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

fn is_subsequence(needle: &[u8], hay: &[u8]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|c| it.any(|h| h == c))
}

/// Longest common subsequence by trying every subsequence of the shorter input.
fn lcs_exhaustive(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<u8> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| short[i])
            .collect();
        if is_subsequence(&sub, long) {
            best = size;
        }
    }
    best
}

/// Ideal windows (by position) that appear somewhere in `compared`.
fn sw_brute(ideal: &[u8], compared: &[u8], w: usize) -> usize {
    let grams: Vec<&[u8]> = (0..=compared.len().saturating_sub(w))
        .filter(|&j| j + w <= compared.len())
        .map(|j| &compared[j..j + w])
        .collect();
    (0..=ideal.len() - w)
        .filter(|&i| grams.iter().any(|g| *g == &ideal[i..i + w]))
        .count()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for i in 0..10_000 {
        let alphabet = rng.random_range(1..=6);
        let a = random_seq(&mut rng, 12, alphabet);
        let b = random_seq(&mut rng, 12, alphabet);
        let (got, want) = (lcs_length(&a, &b), lcs_exhaustive(&a, &b));
        ensure!(got == want, "pair {i}: {a:?} vs {b:?}: dp {got}, oracle {want}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("10000 pairs agree, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared_counts = 0;
    for i in 0..10_000 {
        let alphabet = rng.random_range(1..=6);
        let a = random_seq(&mut rng, 12, alphabet);
        let b = random_seq(&mut rng, 12, alphabet);
        for w in 1..=3 {
            let got = sw_match_count(&a, &b, w);
            if w > a.len() {
                ensure!(
                    matches!(got, Err(GazeError::InvalidWindow { .. })),
                    "pair {i} window {w}: expected invalid-window error, got {got:?}"
                );
                continue;
            }
            let want = sw_brute(&a, &b, w);
            ensure!(
                got == Ok(want),
                "pair {i} window {w}: {a:?} vs {b:?}: got {got:?}, oracle {want}"
            );
            compared_counts += 1;
        }
    }
    Ok(format!("{compared_counts} counts agree over windows 1-3"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..2_000 {
        let target = rng.random_range(1..=20);
        let mut items: Vec<String> = Vec::with_capacity(target);
        while items.len() < target {
            let next = format!("o{}", rng.random_range(0..8));
            if items.last() != Some(&next) {
                items.push(next);
            }
        }
        let a = GazeSequence::new(items);
        let n = a.len();
        let lcs = similarity_lcs(&a, &a).map_err(|e| e.to_string())?.value;
        ensure!(lcs == 1.0, "length {n}: similarity_lcs(a, a) = {lcs}");
        let sw = similarity_sw(&a, &a, 2);
        if n == 1 {
            // a window of 2 cannot slide over a single item
            ensure!(matches!(sw, Err(GazeError::InvalidWindow { .. })), "length 1: {sw:?}");
        } else {
            let value = sw.map_err(|e| e.to_string())?.value;
            let want = (n - 1) as f64 / n as f64;
            ensure!(
                value == want,
                "length {n}: similarity_sw(a, a, 2) = {value}, want {want}"
            );
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} sequences of length 1-20; length 1 with window 2 is an invalid-window error"
    ))
}

fn criterion_4() -> Outcome {
    let stats = |mean_s: f64, std_s: f64, id: u8| LevelStats {
        level: level(id),
        mean_s,
        std_s,
        n: 7,
    };
    let old = [
        stats(166.88, 73.84, 1),
        stats(83.88, 46.27, 2),
        stats(144.65, 41.13, 3),
        stats(73.58, 24.24, 4),
    ];
    let new = [
        stats(142.14, 74.84, 1),
        stats(56.43, 26.18, 2),
        stats(124.00, 48.12, 3),
        stats(63.14, 18.49, 4),
    ];
    let printed = [14.82, 32.72, 14.31, 14.18];
    let recomputed = [14.82, 32.72, 14.28, 14.19];
    let rows = cohort_compare(&old, &new).map_err(|e| e.to_string())?;
    let mut shown = Vec::new();
    for ((row, p), r) in rows.iter().zip(printed).zip(recomputed) {
        let v = row.improvement_pct;
        ensure!((v - p).abs() <= 0.15, "level {}: {v:.4} vs printed {p}", row.level);
        ensure!((v - r).abs() < 0.01, "level {}: {v:.4} vs recomputed {r}", row.level);
        shown.push(format!("{v:.2}"));
    }
    Ok(format!("improvements {}", shown.join("/")))
}

const LABELS: [Emotion; 8] = [
    Emotion::Happiness,
    Emotion::Sadness,
    Emotion::Surprise,
    Emotion::Fear,
    Emotion::Anger,
    Emotion::Disgust,
    Emotion::Contempt,
    Emotion::NoEmotion,
];

fn frame(object: Option<&str>, label: Emotion) -> ClassifiedFrame {
    ClassifiedFrame {
        t_ms: 0,
        object: object.map(String::from),
        label,
    }
}

fn criterion_5() -> Outcome {
    let expected = ExpectedEmotionMap::default();
    let objects = [
        Some("fire"),
        Some("extinguisher"),
        Some("fire_alarm"),
        Some("emergency_phone"),
        Some("stove"),
        None,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut both_defined = 0;
    for i in 0..1_000 {
        let len = rng.random_range(0..40);
        let frames: Vec<ClassifiedFrame> = (0..len)
            .map(|_| {
                let label = if rng.random_bool(0.4) {
                    Emotion::NoEmotion
                } else {
                    LABELS[rng.random_range(0..8)]
                };
                frame(objects[rng.random_range(0..objects.len())], label)
            })
            .collect();
        let incl = emotion_accuracy(&frames, &expected, AccuracyMode::IncludeNone);
        let excl = emotion_accuracy(&frames, &expected, AccuracyMode::ExcludeNone);
        if let (Some(i_), Some(e_)) = (incl, excl) {
            both_defined += 1;
            ensure!(e_ >= i_, "stream {i}: exclude {e_} < include {i_}");
        }
        for v in [incl, excl].into_iter().flatten() {
            ensure!((0.0..=1.0).contains(&v), "stream {i}: accuracy {v}");
        }
    }

    let fear_only = ExpectedEmotionMap::parse("fire -> fear\n").map_err(|e| e.to_string())?;
    let traced: Vec<ClassifiedFrame> = [Emotion::Fear, Emotion::NoEmotion, Emotion::NoEmotion, Emotion::Fear]
        .into_iter()
        .map(|l| frame(Some("fire"), l))
        .collect();
    let incl = emotion_accuracy(&traced, &fear_only, AccuracyMode::IncludeNone);
    let excl = emotion_accuracy(&traced, &fear_only, AccuracyMode::ExcludeNone);
    ensure!(
        incl == Some(0.5) && excl == Some(1.0),
        "hand trace gave {incl:?} / {excl:?}"
    );

    let silent: Vec<ClassifiedFrame> = (0..5).map(|_| frame(Some("fire"), Emotion::NoEmotion)).collect();
    let undefined = emotion_accuracy(&silent, &expected, AccuracyMode::ExcludeNone);
    ensure!(undefined.is_none(), "all-none stream gave {undefined:?}");

    // the marker survives into the written report
    let mut log = SessionLog::empty("1", level(1));
    log.samples = (0..5)
        .map(|i| SampleRecord {
            t_ms: i * 100,
            gaze_target: Some("fire".into()),
            aus: Default::default(),
        })
        .collect();
    let text = render_report(&analyze(&[log], &AnalysisConfig::default()).map_err(|e| e.to_string())?);
    ensure!(
        text.contains("accuracy_exclude_none = \"undefined\""),
        "report lacks the undefined marker"
    );
    ensure!(
        text.contains("accuracy_include_none = 0.0000"),
        "include-none accuracy should be a real 0 here"
    );
    Ok(format!(
        "{both_defined} streams with both modes defined; hand trace 0.5 / 1.0; empty denominator undefined"
    ))
}

fn criterion_6() -> Outcome {
    let valence = ValenceMap::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1_000 {
        let len = rng.random_range(1..60);
        let labels: Vec<Emotion> = (0..len).map(|_| LABELS[rng.random_range(0..8)]).collect();
        let b = emotion_breakdown(labels.iter().copied(), &valence).map_err(|e| e.to_string())?;
        let sum = b.good_pct + b.bad_pct + b.none_pct;
        ensure!((sum - 100.0).abs() <= 1e-6, "stream {i}: sum {sum}");
        for v in [b.good_pct, b.bad_pct, b.none_pct] {
            ensure!((0.0..=100.0).contains(&v), "stream {i}: {v}");
        }
    }
    let stream = |bad: usize, none: usize| {
        std::iter::repeat_n(Emotion::Fear, bad).chain(std::iter::repeat_n(Emotion::NoEmotion, none))
    };
    let first = emotion_breakdown(stream(8, 13), &valence).map_err(|e| e.to_string())?;
    let got = format!("{:.2}/{:.2}/{:.2}", first.good_pct, first.bad_pct, first.none_pct);
    ensure!(got == "0.00/38.10/61.90", "8 bad + 13 none gave {got}");
    let later = emotion_breakdown(stream(3, 13), &valence).map_err(|e| e.to_string())?;
    ensure!(
        format!("{:.2}", later.none_pct) == "81.25",
        "13 of 16 none gave {:.2}",
        later.none_pct
    );
    Ok(format!(
        "1000 streams sum to 100; anchored values {got} and {:.2}",
        later.none_pct
    ))
}

fn satisfied(rule: &Rule, frame: &AuFrame, threshold: f64) -> bool {
    rule.required.iter().all(|&au| frame.weight(au) >= threshold)
        && rule.absent.iter().all(|&au| frame.weight(au) < threshold)
}

fn criterion_7() -> Outcome {
    let rules = RuleTable::default();
    let happy = classify_frame(&AuFrame::from_pairs(&[(AuCode::Au6, 0.8), (AuCode::Au12, 0.9)]), &rules);
    ensure!(happy == Emotion::Happiness, "AU6+AU12 gave {happy}");
    let disgust = classify_frame(&AuFrame::from_pairs(&[(AuCode::Au9, 0.7), (AuCode::Au10, 0.6)]), &rules);
    ensure!(disgust == Emotion::Disgust, "AU9+AU10 gave {disgust}");
    let zeros: Vec<(AuCode, f64)> = AuCode::ALL.iter().map(|&au| (au, 0.0)).collect();
    let neutral = classify_frame(&AuFrame::from_pairs(&zeros), &rules);
    ensure!(neutral == Emotion::NoEmotion, "all-zero frame gave {neutral}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut raised = 0;
    for i in 0..10_000 {
        let mut frame = AuFrame::default();
        for au in AuCode::ALL {
            if rng.random_bool(0.5) {
                frame.weights.insert(au, Weight::new(rng.random::<f64>()).unwrap());
            }
        }
        let before = classify_frame(&frame, &rules);
        let candidates: Vec<&Rule> = rules
            .rules()
            .iter()
            .filter(|r| satisfied(r, &frame, rules.threshold()))
            .collect();
        if candidates.is_empty() {
            ensure!(
                before == Emotion::NoEmotion,
                "frame {i}: no rule holds but got {before}"
            );
            continue;
        }
        ensure!(
            before != Emotion::NoEmotion,
            "frame {i}: a rule holds but got no_emotion"
        );
        let rule = candidates[rng.random_range(0..candidates.len())];
        let units: Vec<AuCode> = rule.required.iter().copied().collect();
        let au = units[rng.random_range(0..units.len())];
        let current = frame.weight(au);
        let higher = rng.random_range(current..=1.0);
        frame.weights.insert(au, Weight::new(higher).unwrap());
        let after = classify_frame(&frame, &rules);
        ensure!(
            after != Emotion::NoEmotion,
            "frame {i}: raising {au} to {higher} flipped {before} to no_emotion"
        );
        raised += 1;
    }
    ensure!(raised >= 500, "only {raised} frames exercised a satisfied rule");
    Ok(format!(
        "reference cues classify; monotonicity over 10000 frames ({raised} with a satisfied rule)"
    ))
}

fn varied_profile(seed: u64) -> AgentProfile {
    let exp = [Experience::Low, Experience::Medium, Experience::High];
    AgentProfile {
        deviation_rate: 0.0,
        emotionality: 0.3,
        ..AgentProfile::new(
            exp[(seed % 3) as usize],
            exp[(seed / 3 % 3) as usize],
            exp[(seed / 9 % 3) as usize],
        )
    }
}

fn event(t_ms: u64, action: Action, object: &str) -> InteractionEvent {
    InteractionEvent {
        t_ms,
        action,
        object: object.to_string(),
    }
}

fn criterion_8() -> Outcome {
    let objects = ObjectMap::default();
    let mut injected = 0;
    for id in 1..=4 {
        let spec = ProtocolSpec::for_level(LevelSpec::canonical(level(id)));
        for seed in 0..100 {
            let session = simulate_detailed(&varied_profile(seed), &SimConfig::new(seed, level(id)))
                .map_err(|e| e.to_string())?;
            let log = session.log;
            let devs = validate_sequence(&log, &spec, &objects).map_err(|e| e.to_string())?;
            ensure!(
                devs.is_empty(),
                "level {id} seed {seed}: conforming agent flagged {devs:?}"
            );

            let evac = log
                .events
                .iter()
                .position(|e| e.object == "muster_area")
                .ok_or(format!("level {id} seed {seed}: no evacuation"))?;
            let evac_t = log.events[evac].t_ms;
            let mut mutated = log.clone();
            if spec.level.extinguishable {
                // leave for the muster area before the extinguisher is used
                let start = log
                    .events
                    .iter()
                    .position(|e| e.action == Action::UseStart && e.object == "extinguisher")
                    .ok_or(format!("level {id} seed {seed}: no extinguisher use"))?;
                let t = log.events[start].t_ms;
                let mut muster = mutated.events.remove(evac);
                muster.t_ms = t;
                mutated.events.insert(start, muster);
                for e in &mut mutated.events[start + 1..] {
                    e.t_ms = e.t_ms.max(t);
                }
                let devs = validate_sequence(&mutated, &spec, &objects).map_err(|e| e.to_string())?;
                ensure!(
                    devs.len() == 1 && devs[0].kind() == DeviationKind::PrematureEvacuation,
                    "level {id} seed {seed}: swapped stream gave {devs:?}"
                );
            } else {
                // try the extinguisher just before leaving
                let extra = [
                    event(evac_t.saturating_sub(2), Action::UseStart, "extinguisher"),
                    event(evac_t.saturating_sub(1), Action::UseEnd, "extinguisher"),
                ];
                mutated.events.splice(evac..evac, extra);
                let devs = validate_sequence(&mutated, &spec, &objects).map_err(|e| e.to_string())?;
                ensure!(
                    devs.len() == 1 && devs[0].kind() == DeviationKind::ForbiddenExtinguish,
                    "level {id} seed {seed}: injected stream gave {devs:?}"
                );
            }
            mutated
                .validate()
                .map_err(|e| format!("level {id} seed {seed}: mutated log invalid: {e}"))?;
            injected += 1;

            // the simulator's own mistake for this level
            let mut p = varied_profile(seed);
            p.deviation_rate = 1.0;
            let faulty = simulate_detailed(&p, &SimConfig::new(seed, level(id))).map_err(|e| e.to_string())?;
            let devs = validate_sequence(&faulty.log, &spec, &objects).map_err(|e| e.to_string())?;
            let want = if spec.level.extinguishable {
                DeviationKind::PrematureEvacuation
            } else {
                DeviationKind::ForbiddenExtinguish
            };
            ensure!(
                devs.len() == 1 && devs[0].kind() == want,
                "level {id} seed {seed}: simulated mistake gave {devs:?}"
            );
        }
    }
    Ok(format!(
        "400 conforming sessions clean; {injected} injected and 400 simulated mistakes each flagged once"
    ))
}

fn criterion_9() -> Outcome {
    let mut totals = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (g, gaming) in [Experience::Low, Experience::High].into_iter().enumerate() {
        let profile = AgentProfile {
            deviation_rate: 0.0,
            emotionality: 0.3,
            ..AgentProfile::new(Experience::High, Experience::High, gaming)
        };
        for id in 1..=4 {
            for seed in 0..60 {
                let s =
                    simulate_detailed(&profile, &SimConfig::new(1_000 + seed, level(id))).map_err(|e| e.to_string())?;
                totals[g] += s.evacuated_at_ms as f64;
                counts[g] += 1;
            }
        }
    }
    ensure!(counts.iter().all(|&n| n >= 200), "too few sessions: {counts:?}");
    let ratio = (totals[0] / counts[0] as f64) / (totals[1] / counts[1] as f64);
    ensure!((1.8..=2.2).contains(&ratio), "low/high gaming ratio {ratio:.3}");

    let profile = varied_profile(4);
    for seed in 0..20 {
        let config = SimConfig::new(seed, level(1 + (seed % 4) as u8));
        let a = serialize_session(&simulate_detailed(&profile, &config).map_err(|e| e.to_string())?.log);
        let b = serialize_session(&simulate_detailed(&profile, &config).map_err(|e| e.to_string())?.log);
        ensure!(a == b, "seed {seed}: logs differ");
    }
    Ok(format!(
        "ratio {ratio:.3} over {} + {} sessions; repeated seeds byte-identical",
        counts[0], counts[1]
    ))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        std::iter::once("drillscope").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    if code != 0 {
        return Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err)));
    }
    String::from_utf8(out).map_err(|e| e.to_string())
}

fn pipeline(root: &Path, cohort: &str) -> Result<(Vec<u8>, usize), String> {
    let cohort_file = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(cohort);
    let dir = root.join("logs");
    let manifest = run_cli(&[
        "simulate",
        "--cohort",
        cohort_file.to_str().unwrap(),
        "--seed",
        "2024",
        "--out",
        dir.to_str().unwrap(),
    ])?;
    let files = manifest.lines().count();
    let report = root.join("report.toml");
    let refs: Vec<String> = (1..=4)
        .map(|l| dir.join(format!("tester1_level{l}.drl")).display().to_string())
        .collect();
    let mut args = vec!["analyze", dir.to_str().unwrap(), "--output", report.to_str().unwrap()];
    for r in &refs {
        args.extend(["--reference", r.as_str()]);
    }
    run_cli(&args)?;
    let bytes = std::fs::read(&report).map_err(|e| e.to_string())?;
    Ok((bytes, files))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (cohort, expected) in [("cohort_first.txt", 40), ("cohort_second.txt", 28)] {
        let (a, b) = (
            tempfile::tempdir().map_err(|e| e.to_string())?,
            tempfile::tempdir().map_err(|e| e.to_string())?,
        );
        let (first, n1) = pipeline(a.path(), cohort)?;
        let (second, n2) = pipeline(b.path(), cohort)?;
        ensure!(
            n1 == expected && n2 == expected,
            "{cohort}: wrote {n1} and {n2} logs, want {expected}"
        );
        ensure!(first == second, "{cohort}: reports differ between runs");
        let text = String::from_utf8(first).map_err(|e| e.to_string())?;
        let sessions = text.matches("\n[[session]]\n").count();
        ensure!(sessions == expected, "{cohort}: report has {sessions} sessions");
        notes.push(format!("{expected} sessions"));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "pipeline took {elapsed:?}");
    Ok(format!(
        "{} byte-identical twice, {:.2}s",
        notes.join(" and "),
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let criteria: [Check; 10] = [
        ("LCS matches exhaustive oracle", criterion_1),
        ("SW matches n-gram oracle", criterion_2),
        ("similarity normalization", criterion_3),
        ("completion-time improvements", criterion_4),
        ("emotion accuracy modes", criterion_5),
        ("valence breakdown", criterion_6),
        ("FACS rules", criterion_7),
        ("protocol validator", criterion_8),
        ("simulator calibration", criterion_9),
        ("end-to-end determinism", criterion_10),
    ];
    // keep panics from interleaving with the result lines
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = HashSet::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2}: PASS  {name}: {detail}"),
            Err(detail) => {
                println!("criterion {n:>2}: FAIL  {name}: {detail}");
                failed.insert(n);
            }
        }
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
