//! Analytics for VR shipboard fire drills.
//!
//! The crate reads per-session telemetry logs (`.drl` files), labels each
//! frame's facial action units with an emotion, turns gaze samples into
//! scanpaths and scores them against a reference, checks the trainee's
//! actions against the drill protocol, and aggregates it all into a cohort
//! report. A seeded trainee simulator produces logs in the same format.
//!
//! ```
//! use drillscope::facs::{classify_frame, AuFrame, Emotion, RuleTable};
//! use drillscope::au::AuCode;
//!
//! let frame = AuFrame::from_pairs(&[(AuCode::Au6, 0.8), (AuCode::Au12, 0.9)]);
//! assert_eq!(classify_frame(&frame, &RuleTable::default()), Emotion::Happiness);
//! ```

pub mod au;
pub mod cli;
pub mod config;
pub mod facs;
pub mod gaze;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod sim;
pub mod telemetry;
