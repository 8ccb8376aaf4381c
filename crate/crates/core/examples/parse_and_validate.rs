//! Parses a hand-written session log, checks it, and prints it back in
//! canonical form.
//!
//!     cargo run --example parse_and_validate [path/to/log.drl]

use drillscope::telemetry::{parse_session, serialize_session};

const SAMPLE: &str = "\
#drl v1 tester=3 level=1
S 0 - AU6=0.1
S 100 fire AU1=0.8 AU2=0.7 AU4=0.6 AU5=0.9 AU20=0.55
E 150 activate emergency_phone
S 200 emergency_phone
E 900 enter_zone muster_area
";

fn main() {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => SAMPLE.as_bytes().to_vec(),
    };
    let log = match parse_session(&bytes) {
        Ok(log) => log,
        Err(e) => {
            eprintln!("invalid log: {e}");
            std::process::exit(2);
        }
    };
    log.validate().expect("parsed logs are well formed");
    println!(
        "tester {} level {}: {} samples, {} events",
        log.tester_id,
        log.level,
        log.samples.len(),
        log.events.len()
    );
    print!("{}", serialize_session(&log));

    let broken = SAMPLE.replace("AU6=0.1", "AU6=1.5");
    println!(
        "\nwith an out-of-range weight: {}",
        parse_session(broken.as_bytes()).unwrap_err()
    );
}
