use std::fmt;

use thiserror::Error;

/// Byte offsets into a piece of rule text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A syntax error in rule, grouping or dictionary text.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.message, self.span)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("universe has {0} variables; at most 64 are supported")]
    UniverseTooLarge(usize),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("unknown variable `{name}`")]
    UnknownVariable { name: String, span: Option<SourceSpan> },
    #[error("enumeration would produce {requested} entries, above the cap of {cap}")]
    EnumerationTooLarge { requested: u128, cap: usize },
    #[error("constraint set must contain at least one count")]
    EmptyConstraint,
    #[error("variable index {index} is outside a universe of size {size}")]
    OutOfUniverse { index: usize, size: usize },
    #[error("operation `{op}` expects {expected} operand(s)")]
    ArityMismatch { op: &'static str, expected: usize },
    #[error("sequential node #{0} has no stage result")]
    MissingStageResult(usize),
    #[error("stage result for sequential node #{0} is not an entry of its left-hand dictionary")]
    InvalidStageResult(usize),
    #[error("equivalence is undefined for rules containing `=>`")]
    UnsupportedForEquivalence,
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("invalid grouping structure: {0}")]
    InvalidGrouping(String),
    #[error("grouping structure is not compatible with {0}")]
    IncompatibleGrouping(&'static str),
    #[error("latent overlapping group Lasso has no template rule; use the union closure of the grouping and rebuild a rule from it")]
    UseClosureInstead,
    #[error("missing column `{0}` in data header")]
    SchemaMismatch(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    DataParse { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("dataset has {0} rows; at least 2 are required")]
    TooFewRows(usize),
    #[error("design matrix for {0} is rank deficient")]
    RankDeficient(String),
    #[error("{params} parameters cannot be estimated from {rows} rows")]
    Underdetermined { params: usize, rows: usize },
    #[error("invalid number of folds {folds} for {rows} rows")]
    InvalidFolds { folds: usize, rows: usize },
    #[error("dictionary is empty: the rule is incoherent and admits no model")]
    EmptyDictionary,
    #[error("no variable universe given; add a `vars:` line or pass --vars")]
    NoUniverse,
    #[error("universe mismatch: {0}")]
    UniverseMismatch(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateVariable(_) => "DuplicateVariable",
            Error::UniverseTooLarge(_) => "UniverseTooLarge",
            Error::InvalidName(_) => "InvalidName",
            Error::UnknownVariable { .. } => "UnknownVariable",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::EmptyConstraint => "EmptyConstraint",
            Error::OutOfUniverse { .. } => "OutOfUniverse",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::MissingStageResult(_) => "MissingStageResult",
            Error::InvalidStageResult(_) => "InvalidStageResult",
            Error::UnsupportedForEquivalence => "UnsupportedForEquivalence",
            Error::Parse(_) => "ParseError",
            Error::InvalidGrouping(_) => "InvalidGrouping",
            Error::IncompatibleGrouping(_) => "IncompatibleGrouping",
            Error::UseClosureInstead => "UseClosureInstead",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::DataParse { .. } => "DataParseError",
            Error::MissingValue { .. } => "MissingValue",
            Error::TooFewRows(_) => "TooFewRows",
            Error::RankDeficient(_) => "RankDeficient",
            Error::Underdetermined { .. } => "Underdetermined",
            Error::InvalidFolds { .. } => "InvalidFolds",
            Error::EmptyDictionary => "EmptyDictionary",
            Error::NoUniverse => "NoUniverse",
            Error::UniverseMismatch(_) => "UniverseMismatch",
            Error::Usage(_) => "Usage",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Error::UnknownVariable { span, .. } => *span,
            Error::Parse(e) => Some(e.span),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
