use std::path::{Path, PathBuf};

use drillscope::cli::{run, EXIT_ANALYSIS, EXIT_INVALID, EXIT_OK, EXIT_USAGE};

struct Output {
    code: u8,
    stdout: String,
    stderr: String,
}

fn drillscope(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("drillscope").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(cohort: &str, seed: u64, out: &Path, extra: &[&str]) -> Output {
    let cohort = configs().join(cohort);
    let seed = seed.to_string();
    let mut args = vec!["simulate", "--cohort", s(&cohort), "--seed", &seed, "--out", s(out)];
    args.extend(extra);
    drillscope(&args)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_writes_one_file_per_tester_level() {
    let tmp = tempfile::tempdir().unwrap();
    let first = simulate("cohort_first.txt", 5, &tmp.path().join("a"), &["--extinguish-s", "52"]);
    assert_eq!(first.code, EXIT_OK, "{}", first.stderr);
    assert_eq!(first.stdout.lines().count(), 40);
    let second = simulate("cohort_second.txt", 5, &tmp.path().join("b"), &[]);
    assert_eq!(second.stdout.lines().count(), 28);
    assert!(tmp.path().join("b/tester7_level4.drl").is_file());
}

#[test]
fn simulate_is_seed_determined() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, seed) in [("a", 9), ("b", 9), ("c", 10)] {
        assert_eq!(
            simulate("cohort_second.txt", seed, &tmp.path().join(dir), &[]).code,
            EXIT_OK
        );
    }
    let (a, b, c) = (
        read_dir_sorted(&tmp.path().join("a")),
        read_dir_sorted(&tmp.path().join("b")),
        read_dir_sorted(&tmp.path().join("c")),
    );
    assert_eq!(a, b);
    assert_eq!(a.len(), c.len());
    assert!(a.iter().zip(&c).all(|(x, y)| x.0 == y.0 && x.1 != y.1));
}

#[test]
fn simulate_into_unwritable_location_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = simulate("cohort_second.txt", 1, &blocker.join("sub"), &[]);
    assert_eq!(out.code, EXIT_ANALYSIS);
    assert!(out.stderr.contains("error:"));
}

#[test]
fn validate_reports_every_bad_file_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("good.drl"), "#drl v1 tester=1 level=1\nS 0 fire AU6=0.8000\n").unwrap();
    std::fs::write(
        dir.join("bad1.drl"),
        "#drl v1 tester=1 level=2\nS 0 fire AU6=0.8\nS 100 fire AU12=1.5\n",
    )
    .unwrap();
    std::fs::write(dir.join("bad2.drl"), "#drl v1 tester=2 level=1\nS 50 fire\nS 10 fire\n").unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();

    let out = drillscope(&["validate", s(dir)]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("bad1.drl: line 3"), "{}", out.stderr);
    assert!(out.stderr.contains("bad2.drl: line 3"), "{}", out.stderr);
    assert!(out.stdout.contains("ok ") && out.stdout.contains("good.drl"));

    let ok = drillscope(&["validate", s(&dir.join("good.drl"))]);
    assert_eq!(ok.code, EXIT_OK);
}

#[test]
fn no_input_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = drillscope(&["validate", s(tmp.path())]);
    assert_eq!(empty.code, EXIT_USAGE);
    assert!(empty.stderr.contains("no input"));
    assert_eq!(
        drillscope(&["analyze", s(&tmp.path().join("missing"))]).code,
        EXIT_USAGE
    );
    assert_eq!(drillscope(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(drillscope(&["validate"]).code, EXIT_USAGE);
    let help = drillscope(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    for cmd in ["validate", "analyze", "simulate", "compare", "similarity"] {
        assert!(help.stdout.contains(cmd));
    }
}

#[test]
fn analyze_writes_report_csv_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let logs = tmp.path().join("logs");
    simulate("cohort_second.txt", 3, &logs, &[]);
    let report = tmp.path().join("r.toml");
    let csv = tmp.path().join("sessions.csv");
    let plots = tmp.path().join("plots");
    let reference = logs.join("tester1_level2.drl");
    let only_l2: Vec<PathBuf> = (1..=7).map(|t| logs.join(format!("tester{t}_level2.drl"))).collect();
    let mut args = vec!["analyze"];
    args.extend(only_l2.iter().map(|p| s(p)));
    args.extend([
        "--reference",
        s(&reference),
        "--window",
        "3",
        "--output",
        s(&report),
        "--csv",
        s(&csv),
        "--emit-plot-data",
        s(&plots),
    ]);
    let out = drillscope(&args);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);

    let doc: toml::Table = std::fs::read_to_string(&report).unwrap().parse().unwrap();
    let sessions = doc["session"].as_array().unwrap();
    assert_eq!(sessions.len(), 7);
    assert_eq!(sessions[0]["similarity_lcs"].as_float(), Some(1.0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 8);
    for name in [
        "completion_times.csv",
        "gaze_counts.csv",
        "similarity_lcs.csv",
        "emotion_breakdown.csv",
    ] {
        assert!(plots.join(name).is_file(), "{name}");
    }
}

#[test]
fn analyze_without_reference_for_a_level_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let logs = tmp.path().join("logs");
    simulate("cohort_second.txt", 3, &logs, &[]);
    let reference = logs.join("tester1_level1.drl");
    let out = drillscope(&["analyze", s(&logs), "--reference", s(&reference)]);
    assert_eq!(out.code, EXIT_ANALYSIS);
    assert!(
        out.stderr.contains("no reference scanpath for level 2"),
        "{}",
        out.stderr
    );
}

#[test]
fn analyze_with_baseline_adds_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let (old, new) = (tmp.path().join("old"), tmp.path().join("new"));
    simulate("cohort_second.txt", 1, &old, &["--extinguish-s", "52"]);
    simulate("cohort_second.txt", 1, &new, &[]);
    let out = drillscope(&["analyze", s(&new), "--baseline", s(&old)]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let doc: toml::Table = out.stdout.parse().unwrap();
    let rows = doc["comparison"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // only the extinguishable levels got faster
    assert!(rows[0]["improvement_pct"].as_float().unwrap() > 10.0);
    assert_eq!(rows[1]["improvement_pct"].as_float(), Some(0.0));
}

#[test]
fn compare_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let logs = tmp.path().join("logs");
    simulate("cohort_second.txt", 4, &logs, &[]);
    let same = drillscope(&["compare", s(&logs), s(&logs)]);
    assert_eq!(same.code, EXIT_OK);
    let doc: toml::Table = same.stdout.parse().unwrap();
    for row in doc["comparison"].as_array().unwrap() {
        assert_eq!(row["improvement_pct"].as_float(), Some(0.0));
    }
    assert_eq!(doc["quartiles"].as_array().unwrap().len(), 4);

    let partial = tmp.path().join("partial");
    std::fs::create_dir(&partial).unwrap();
    std::fs::copy(logs.join("tester1_level1.drl"), partial.join("tester1_level1.drl")).unwrap();
    let mismatch = drillscope(&["compare", s(&logs), s(&partial)]);
    assert_eq!(mismatch.code, EXIT_ANALYSIS);
}

#[test]
fn similarity_command() {
    let out = drillscope(&[
        "similarity",
        "--literal",
        "fire,phone,alarm,ext",
        "fire,alarm,phone,ext",
    ]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("lcs_length = 3"));
    assert!(out.stdout.contains("similarity_lcs = 0.7500"));
    let bad = drillscope(&["similarity", "--literal", "a", "a,b", "--window", "2"]);
    assert_eq!(bad.code, EXIT_ANALYSIS);

    let tmp = tempfile::tempdir().unwrap();
    simulate("cohort_second.txt", 4, tmp.path(), &[]);
    let a = tmp.path().join("tester1_level3.drl");
    let b = tmp.path().join("tester5_level3.drl");
    let files = drillscope(&["similarity", s(&a), s(&b)]);
    assert_eq!(files.code, EXIT_OK, "{}", files.stderr);
}

#[test]
fn vendor_channels_are_renamed_before_parsing() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("v.drl");
    std::fs::write(&log, "#drl v1 tester=1 level=1\nS 0 fire CHEEK_RAISE_L=0.8000\n").unwrap();
    assert_eq!(drillscope(&["validate", s(&log)]).code, EXIT_INVALID);
    let vendor = tmp.path().join("vendor.txt");
    std::fs::write(&vendor, "CHEEK_RAISE_L -> AU6\n").unwrap();
    let out = drillscope(&["validate", s(&log), "--vendor", s(&vendor)]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
}

#[test]
fn broken_config_file_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let logs = tmp.path().join("logs");
    simulate("cohort_second.txt", 1, &logs, &[]);
    let objects = tmp.path().join("objects.txt");
    std::fs::write(&objects, "fire -> locate_fire\nstove -> cook\n").unwrap();
    let out = drillscope(&["analyze", s(&logs), "--objects", s(&objects)]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("line 2"), "{}", out.stderr);
}
