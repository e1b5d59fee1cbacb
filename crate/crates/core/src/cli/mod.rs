//! Command-line orchestration: configuration, experiment runs, reports and figures.

pub mod config;
pub mod plots;
pub mod run;
pub mod svg;

use serde::Serialize;

pub use config::{ExperimentConfig, ExperimentKind, MetricSpec, SeedSpec, Tolerances, VariantKind};
pub use run::{compute, compute_with_workers, plot, run, tables, write_artifacts, Report, Summary, VERSION};

use crate::error::Error;

/// Process exit status for an error: 2 configuration, 3 numerical failure, 4 IO.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MalformedReport(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DegeneratePoint => "degenerate_point",
        Error::UnsupportedFamily(_) => "unsupported_family",
        Error::Domain(_) => "domain",
        Error::NoSolution(_) => "no_solution",
        Error::Config(_) => "config",
        Error::StepFailure { .. } => "step_failure",
        Error::CapExceeded(_) => "cap_exceeded",
        Error::NonMorse(_) => "non_morse",
        Error::EulerMismatch { .. } => "euler_mismatch",
        Error::SeedSensitivity(_) => "seed_sensitivity",
        Error::Divergent(_) => "divergent",
        Error::NoConvergence(_) => "no_convergence",
        Error::MalformedReport(_) => "malformed_report",
        Error::ExperimentFailed(_) => "experiment_failed",
        Error::Io(_) => "io",
    }
}

/// One-line machine-readable error document for stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::to_string(&ErrorDoc { error: error_kind(e), message: e.to_string(), exit_code: exit_code(e) })
        .expect("error document serializes")
}
