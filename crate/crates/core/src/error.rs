use thiserror::Error;

/// Every failure the library can report. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scaling function is not smooth at eps = z = 0")]
    DegeneratePoint,
    #[error("unsupported scaling family: {0}")]
    UnsupportedFamily(String),
    #[error("outside the metric domain: {0}")]
    Domain(String),
    #[error("no unit-speed state: {0}")]
    NoSolution(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integration step failed at parameter {at}: {reason}")]
    StepFailure { at: f64, reason: String },
    #[error("step cap of {0} exceeded")]
    CapExceeded(usize),
    #[error("non-Morse critical point at y = {0}")]
    NonMorse(f64),
    #[error("Euler characteristic mismatch: critical points give {found}, expected {expected}")]
    EulerMismatch { found: i64, expected: i64 },
    #[error("reference geodesic is sensitive to its seed offset (moved by {0:e})")]
    SeedSensitivity(f64),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("front-face flow did not converge by tau = {0}")]
    NoConvergence(f64),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
