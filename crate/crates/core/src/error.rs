use thiserror::Error;

/// Crate-wide error type. Every variant maps to a stable machine-readable
/// category string used by the CLI for exit reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected d={expected}, got d={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("tapestry integrity violation: {0}")]
    Integrity(String),

    #[error("normalization of an all-zero tapestry is undefined")]
    ZeroNormalization,

    #[error("detection probability undefined: total strength is zero")]
    UndefinedProbability,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain capacity exhausted: {0}")]
    Capacity(String),

    #[error("enumeration budget exceeded: {what} > {bound}")]
    Budget { what: String, bound: usize },

    #[error("mixed-grade sum cannot be graded")]
    Ungraded,

    #[error("concatenation has no generation semantics")]
    UnsupportedGeneration,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String, kind: ConfigErrorKind },

    #[error("expression error at {pos}: {message}")]
    Expr { pos: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    MissingField,
    UnknownPrimitive,
    DuplicateDeclaration,
    MalformedExpression,
    BadValue,
}

impl Error {
    /// Stable category tag for scripting against the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension",
            Error::Parameter(_) => "parameter",
            Error::Integrity(_) => "integrity",
            Error::ZeroNormalization => "normalization",
            Error::UndefinedProbability => "probability",
            Error::GridMismatch(_) => "grid",
            Error::Capacity(_) => "capacity",
            Error::Budget { .. } => "budget",
            Error::Ungraded => "grading",
            Error::UnsupportedGeneration => "generation",
            Error::Config { kind, .. } => match kind {
                ConfigErrorKind::MissingField => "config-missing-field",
                ConfigErrorKind::UnknownPrimitive => "config-unknown-primitive",
                ConfigErrorKind::DuplicateDeclaration => "config-duplicate",
                ConfigErrorKind::MalformedExpression => "config-expression",
                ConfigErrorKind::BadValue => "config-value",
            },
            Error::Expr { .. } => "expression",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
