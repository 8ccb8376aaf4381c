//! The `drillscope` command line.
//!
//! Exit codes: 0 success, 1 usage error or no input, 2 invalid input file,
//! 3 analysis or output failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{self, ConfigError, VendorAdapter};
use crate::facs::{RuleTable, ValenceMap};
use crate::gaze::{
    lcs_length, similarity_lcs, similarity_sw, sw_match_count, GazeSequence, DEFAULT_BLINK_GAP_MS, DEFAULT_WINDOW,
};
use crate::metrics::{ExpectedEmotionMap, StdDev};
use crate::protocol::ObjectMap;
use crate::report::{self, AnalysisConfig};
use crate::sim::{self, SimConfig};
use crate::telemetry::{parse_session, serialize_session, session_file_name, Level, SessionLog};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_ANALYSIS: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "drillscope", version, about = "Analyze and simulate VR fire-drill sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that session logs parse and are well formed.
    Validate {
        /// `.drl` files or directories containing them.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        vendor: VendorArgs,
    },
    /// Analyze a cohort and write a report.
    Analyze(AnalyzeArgs),
    /// Generate synthetic session logs for a cohort.
    Simulate {
        /// Cohort file: `id drill vr gaming deviation_rate emotionality` per line.
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Extinguisher run time in seconds at high drill experience.
        #[arg(long, default_value_t = 7.0)]
        extinguish_s: f64,
        #[arg(long, default_value_t = 100)]
        sample_interval_ms: u64,
    },
    /// Compare completion times of two cohorts level by level.
    Compare {
        before: PathBuf,
        after: PathBuf,
        #[arg(long)]
        objects: Option<PathBuf>,
        /// Use the population standard deviation instead of the sample one.
        #[arg(long)]
        population_std: bool,
        #[command(flatten)]
        vendor: VendorArgs,
    },
    /// Score one scanpath against a reference.
    Similarity {
        /// Reference `.drl` file, or a comma-separated object list with `--literal`.
        ideal: String,
        compared: String,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_BLINK_GAP_MS)]
        blink_gap_ms: u64,
        /// Treat both arguments as comma-separated object lists.
        #[arg(long)]
        literal: bool,
        #[command(flatten)]
        vendor: VendorArgs,
    },
}

#[derive(Debug, Args)]
pub struct VendorArgs {
    /// Vendor blendshape to AU mapping (`name -> AUn` lines).
    #[arg(long)]
    pub vendor: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// FACS rule table and valence map.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Object to drill task map.
    #[arg(long)]
    pub objects: Option<PathBuf>,
    /// Object to expected emotions map.
    #[arg(long)]
    pub expected: Option<PathBuf>,
    /// Reference session; its scanpath becomes the reference for its level. Repeatable.
    #[arg(long)]
    pub reference: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_BLINK_GAP_MS)]
    pub blink_gap_ms: u64,
    #[arg(long)]
    pub population_std: bool,
    /// Earlier cohort to compare completion times against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write one CSV row per session.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write chart data series as CSV files into this directory.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
    #[command(flatten)]
    pub vendor: VendorArgs,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    lines: Vec<String>,
}

impl Failure {
    fn new(code: u8, line: impl Into<String>) -> Failure {
        Failure {
            code,
            lines: vec![line.into()],
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the CLI with explicit arguments and streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Validate { paths, vendor } => validate(&paths, &vendor, out),
        Command::Analyze(args) => analyze(&args, out),
        Command::Simulate {
            cohort,
            seed,
            out: dir,
            extinguish_s,
            sample_interval_ms,
        } => simulate(&cohort, seed, &dir, extinguish_s, sample_interval_ms, out),
        Command::Compare {
            before,
            after,
            objects,
            population_std,
            vendor,
        } => compare(&before, &after, objects.as_deref(), population_std, &vendor, out),
        Command::Similarity {
            ideal,
            compared,
            window,
            blink_gap_ms,
            literal,
            vendor,
        } => similarity(&ideal, &compared, window, blink_gap_ms, literal, &vendor, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            for line in f.lines {
                let _ = writeln!(err, "error: {line}");
            }
            f.code
        }
    }
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::ExitCode::from(code)
}

/// Expands directories to their `.drl` files (sorted); plain files pass through.
pub fn collect_inputs(paths: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{}: no such file or directory", p.display()),
            ));
        }
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "drl"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_config<T>(
    explicit: Option<&Path>,
    name: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, Failure> {
    let Some(path) = config::resolve(explicit, name) else {
        return Ok(None);
    };
    let text = read_text(&path)?;
    parse(&text)
        .map(Some)
        .map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))
}

fn load_vendor(args: &VendorArgs) -> Result<Option<VendorAdapter>, Failure> {
    load_config(args.vendor.as_deref(), config::VENDOR_FILE, |t| {
        VendorAdapter::parse(t).map_err(|e: ConfigError| e.to_string())
    })
}

/// Reads and parses one log, renaming vendor channels first when asked.
fn load_session(path: &Path, vendor: Option<&VendorAdapter>) -> Result<SessionLog, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = match vendor {
        Some(adapter) => match std::str::from_utf8(&bytes) {
            Ok(text) => parse_session(adapter.apply(text).as_bytes()),
            Err(_) => parse_session(&bytes),
        },
        None => parse_session(&bytes),
    };
    let log = parsed.map_err(|e| format!("{}: {e}", path.display()))?;
    log.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(log)
}

/// Loads every input, collecting all failures rather than stopping at the first.
fn load_all(paths: &[PathBuf], vendor: Option<&VendorAdapter>) -> Result<Vec<SessionLog>, Failure> {
    let files = collect_inputs(paths).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    if files.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "no input: no .drl files found"));
    }
    let results: Vec<Result<SessionLog, String>> = files.par_iter().map(|f| load_session(f, vendor)).collect();
    let mut logs = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(log) => logs.push(log),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(logs)
    } else {
        Err(Failure {
            code: EXIT_INVALID,
            lines: errors,
        })
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_ANALYSIS, format!("{}: {e}", path.display()))
}

fn validate(paths: &[PathBuf], vendor: &VendorArgs, out: &mut dyn Write) -> CmdResult {
    let adapter = load_vendor(vendor)?;
    let files = collect_inputs(paths).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    if files.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "no input: no .drl files found"));
    }
    let results: Vec<Result<SessionLog, String>> =
        files.par_iter().map(|f| load_session(f, adapter.as_ref())).collect();
    let mut errors = Vec::new();
    for (file, r) in files.iter().zip(results) {
        match r {
            Ok(log) => {
                let _ = writeln!(
                    out,
                    "ok {} (tester {}, level {}, {} samples, {} events)",
                    file.display(),
                    log.tester_id,
                    log.level,
                    log.samples.len(),
                    log.events.len()
                );
            }
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_INVALID,
            lines: errors,
        })
    }
}

fn analysis_config(args: &AnalyzeArgs, vendor: Option<&VendorAdapter>) -> Result<AnalysisConfig, Failure> {
    let mut config = AnalysisConfig {
        window: args.window,
        blink_gap_ms: args.blink_gap_ms,
        std_dev: if args.population_std {
            StdDev::Population
        } else {
            StdDev::Sample
        },
        ..AnalysisConfig::default()
    };
    if args.window == 0 {
        return Err(Failure::new(EXIT_USAGE, "--window must be at least 1"));
    }
    let rules: Option<(RuleTable, ValenceMap)> = load_config(args.rules.as_deref(), config::RULES_FILE, |t| {
        RuleTable::parse_config(t).map_err(|e| e.to_string())
    })?;
    if let Some((rules, valence)) = rules {
        config.rules = rules;
        config.valence = valence;
    }
    if let Some(objects) = load_config(args.objects.as_deref(), config::OBJECTS_FILE, |t| {
        ObjectMap::parse(t).map_err(|e| e.to_string())
    })? {
        config.objects = objects;
    }
    if let Some(expected) = load_config(args.expected.as_deref(), config::EXPECTED_FILE, |t| {
        ExpectedEmotionMap::parse(t).map_err(|e| e.to_string())
    })? {
        config.expected = expected;
    }
    let references = args
        .reference
        .iter()
        .map(|p| load_session(p, vendor))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new(EXIT_INVALID, e))?;
    for log in &references {
        config
            .add_reference(log)
            .map_err(|e| Failure::new(EXIT_ANALYSIS, e.to_string()))?;
    }
    Ok(config)
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CmdResult {
    let vendor = load_vendor(&args.vendor)?;
    let config = analysis_config(args, vendor.as_ref())?;
    let logs = load_all(&args.paths, vendor.as_ref())?;
    let fail = |e: report::AnalysisError| Failure::new(EXIT_ANALYSIS, e.to_string());
    let mut cohort = report::analyze(&logs, &config).map_err(fail)?;
    if let Some(dir) = &args.baseline {
        let baseline = load_all(std::slice::from_ref(dir), vendor.as_ref())?;
        report::attach_baseline(&mut cohort, &baseline, &config).map_err(fail)?;
    }
    let text = report::render_report(&cohort);
    match &args.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_failure(path, e))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(EXIT_ANALYSIS, e.to_string()))?,
    }
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(|e| io_failure(path, e))?;
        report::write_sessions_csv(&cohort, file).map_err(|e| io_failure(path, e))?;
    }
    if let Some(dir) = &args.emit_plot_data {
        report::write_plot_data(&cohort, dir).map_err(|e| io_failure(dir, e))?;
    }
    Ok(())
}

fn simulate(
    cohort: &Path,
    seed: u64,
    dir: &Path,
    extinguish_s: f64,
    sample_interval_ms: u64,
    out: &mut dyn Write,
) -> CmdResult {
    let text = read_text(cohort)?;
    let testers =
        sim::parse_cohort(&text).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", cohort.display())))?;
    let template = SimConfig {
        extinguish_duration_s: extinguish_s,
        sample_interval_ms,
        ..SimConfig::new(seed, Level::ALL[0])
    };
    let logs =
        sim::simulate_cohort(&testers, &template, seed).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let names: Vec<String> = logs
        .par_iter()
        .map(|log| {
            let name = session_file_name(log);
            std::fs::write(dir.join(&name), serialize_session(log)).map(|_| name)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| io_failure(dir, e))?;
    for name in names {
        let _ = writeln!(out, "{}", dir.join(name).display());
    }
    Ok(())
}

fn compare(
    before: &Path,
    after: &Path,
    objects: Option<&Path>,
    population_std: bool,
    vendor: &VendorArgs,
    out: &mut dyn Write,
) -> CmdResult {
    let adapter = load_vendor(vendor)?;
    let objects = load_config(objects, config::OBJECTS_FILE, |t| {
        ObjectMap::parse(t).map_err(|e| e.to_string())
    })?
    .unwrap_or_default();
    let old = load_all(&[before.to_path_buf()], adapter.as_ref())?;
    let new = load_all(&[after.to_path_buf()], adapter.as_ref())?;
    let kind = if population_std {
        StdDev::Population
    } else {
        StdDev::Sample
    };
    let cmp =
        report::compare_cohorts(&old, &new, &objects, kind).map_err(|e| Failure::new(EXIT_ANALYSIS, e.to_string()))?;
    out.write_all(report::render_compare(&cmp).as_bytes())
        .map_err(|e| Failure::new(EXIT_ANALYSIS, e.to_string()))
}

fn similarity(
    ideal: &str,
    compared: &str,
    window: usize,
    blink_gap_ms: u64,
    literal: bool,
    vendor: &VendorArgs,
    out: &mut dyn Write,
) -> CmdResult {
    let adapter = load_vendor(vendor)?;
    let config = AnalysisConfig {
        blink_gap_ms,
        ..AnalysisConfig::default()
    };
    let sequence = |arg: &str| -> Result<GazeSequence, Failure> {
        if literal {
            Ok(GazeSequence::new(
                arg.split(',').map(str::trim).filter(|s| !s.is_empty()),
            ))
        } else {
            let log = load_session(Path::new(arg), adapter.as_ref()).map_err(|e| Failure::new(EXIT_INVALID, e))?;
            Ok(config.scanpath(&log))
        }
    };
    let (a, b) = (sequence(ideal)?, sequence(compared)?);
    let fail = |e: crate::gaze::GazeError| Failure::new(EXIT_ANALYSIS, e.to_string());
    let lcs = similarity_lcs(&a, &b).map_err(fail)?;
    let sw = similarity_sw(&a, &b, window).map_err(fail)?;
    let mut fields = BTreeMap::new();
    fields.insert("ideal_length", a.len().to_string());
    fields.insert("compared_length", b.len().to_string());
    fields.insert("lcs_length", lcs_length(a.items(), b.items()).to_string());
    fields.insert(
        "sw_matches",
        sw_match_count(a.items(), b.items(), window).map_err(fail)?.to_string(),
    );
    fields.insert("similarity_lcs", format!("{:.4}", lcs.value));
    fields.insert("similarity_sw", format!("{:.4}", sw.value));
    fields.insert("window", window.to_string());
    let mut text = String::new();
    for (k, v) in fields {
        text.push_str(&format!("{k} = {v}\n"));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::new(EXIT_ANALYSIS, e.to_string()))
}
