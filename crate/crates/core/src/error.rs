use thiserror::Error;

use crate::expr::ParseError;
use crate::scale::{Domain, MonotoneReport};

pub type Result<T> = std::result::Result<T, Error>;

/// Which bracket of an additive log transform went non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Bracket {
    /// `u(x) + c/a` (bilinear) or `(1-u)/(1+u)` (product form).
    U,
    /// `v(y) + b/a` or `(1-v)/(1+v)`.
    V,
    /// `bc/a^2 - (d w(z) + e)/a` or `(1-w)/(1+w)`.
    W,
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bracket::U => "u",
            Bracket::V => "v",
            Bracket::W => "w",
        })
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("DomainError: {value} is outside the domain {domain}")]
    Domain { value: f64, domain: Domain },

    #[error("EvalError: expression undefined at {at}: {reason}")]
    Eval { at: f64, reason: String },

    #[error("RangeError: {value} is outside the range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("NoConvergence: inverting to {target} stopped at {best} with residual {residual:e}")]
    NoConvergence { target: f64, best: f64, residual: f64 },

    #[error("NotMonotone: {0}")]
    NotMonotone(MonotoneReport),

    #[error("ParseError: {0}")]
    Parse(#[from] ParseError),

    #[error("ParseError at line {line}, column {column}: {message}")]
    Dsl {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("expression does not use its variable `{0}`")]
    MissingVariable(String),

    #[error("EmptyRule: reachable set [{reach_lo}, {reach_hi}] misses the result scale range [{range_lo}, {range_hi}]")]
    EmptyRule {
        reach_lo: f64,
        reach_hi: f64,
        range_lo: f64,
        range_hi: f64,
    },

    #[error("PositivityViolation: bracket {bracket} is {value} at {at}")]
    PositivityViolation {
        bracket: Bracket,
        at: f64,
        value: f64,
    },

    #[error("ZeroA: the coefficient a of the bilinear form must be nonzero")]
    ZeroA,

    #[error("ZeroAlpha: the exponent of a power rule must be nonzero")]
    ZeroAlpha,

    #[error("OffScale: needs {needed_mm:.3} mm but the scale ends at {available_mm:.3} mm (overshoot {:.3} mm){}",
        (needed_mm - available_mm).abs(),
        step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    OffScale {
        needed_mm: f64,
        available_mm: f64,
        step: Option<usize>,
    },

    #[error("ChainUnsupported: {0}")]
    ChainUnsupported(String),

    #[error("DegenerateScale: fewer than two ticks fit on `{0}`")]
    DegenerateScale(String),

    #[error("UnknownEntry: `{name}`; valid names are {}", valid.join(", "))]
    UnknownEntry { name: String, valid: Vec<String> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Short machine-readable name, used by diagnostics and the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "DomainError",
            Error::Eval { .. } => "EvalError",
            Error::Range { .. } => "RangeError",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NotMonotone(_) => "NotMonotone",
            Error::Parse(_) | Error::Dsl { .. } => "ParseError",
            Error::UnboundParameter(_) => "UnboundParameter",
            Error::MissingVariable(_) => "MissingVariable",
            Error::EmptyRule { .. } => "EmptyRule",
            Error::PositivityViolation { .. } => "PositivityViolation",
            Error::ZeroA => "ZeroA",
            Error::ZeroAlpha => "ZeroAlpha",
            Error::OffScale { .. } => "OffScale",
            Error::ChainUnsupported(_) => "ChainUnsupported",
            Error::DegenerateScale(_) => "DegenerateScale",
            Error::UnknownEntry { .. } => "UnknownEntry",
            Error::Precondition(_) => "Precondition",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Serialization(_) => "Serialization",
        }
    }
}
