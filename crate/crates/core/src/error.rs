use thiserror::Error;

use crate::netmodel::Violation;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The network document could not be read.
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// A field in the document has an unusable value or shape.
    #[error("{context}: {message}")]
    Field { context: String, message: String },

    /// The network violates one or more model invariants.
    #[error("network validation failed:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("passive-bus block is singular; passive buses: {}", .buses.join(", "))]
    SingularPassiveBlock { buses: Vec<String> },

    #[error("droop gain at inverter {index} must be positive, got {value}")]
    NonPositiveDroop { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(
        "no stability crossing in mu bracket [{lower_mu}, {upper_mu}]: dominant real part {lower_re} at lower end, {upper_re} at upper end"
    )]
    NoSignChange {
        lower_mu: f64,
        upper_mu: f64,
        lower_re: f64,
        upper_re: f64,
    },

    #[error("non-monotone behaviour: {0}")]
    NonMonotone(String),

    #[error("Weyl bound violated for mode {index}: old {old}, new {new}, bound {bound}")]
    WeylViolation {
        index: usize,
        old: f64,
        new: f64,
        bound: f64,
    },

    #[error("unknown parameter: {0}")]
    UnknownParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that stem from the input rather than from numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::Field { .. }
                | Error::Invalid(_)
                | Error::UnknownParameter(_)
                | Error::InvalidArgument(_)
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  [{}] {}", x.code.as_str(), x.message))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
