use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series '{label}' starts at zero; cannot index-normalise")]
    ZeroOrigin { label: String },

    #[error("series '{label}' has a non-finite value at position {index}")]
    NonFinite { label: String, index: usize },

    #[error("{what}: need at least {needed} observations, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("{what}: input is empty")]
    Empty { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: denominator is zero")]
    ZeroDenominator { what: &'static str },

    #[error("every normalised-curvature observation in the window was excluded")]
    AllDegenerate,

    #[error("calibration regime produced no windows in {replications} replications")]
    NoWindows { replications: usize },

    #[error("series '{label}': periods must be strictly increasing with unit spacing (at position {index})")]
    NonMonotonePeriods { label: String, index: usize },

    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },

    #[error("series '{label}' has an interior gap at row {row}")]
    InteriorGap { label: String, row: usize },

    #[error("threshold document line {line}: {message}")]
    ThresholdFormat { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the series, window, or replication it came from.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the innermost error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroOrigin { .. } => "zero_origin",
            Error::NonFinite { .. } => "non_finite",
            Error::TooShort { .. } => "too_short",
            Error::Empty { .. } => "empty",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ZeroDenominator { .. } => "zero_denominator",
            Error::AllDegenerate => "all_degenerate",
            Error::NoWindows { .. } => "no_windows",
            Error::NonMonotonePeriods { .. } => "non_monotone_periods",
            Error::MalformedCsv { .. } => "malformed_csv",
            Error::InteriorGap { .. } => "interior_gap",
            Error::ThresholdFormat { .. } => "threshold_format",
            Error::Io { .. } => "io",
            Error::Context { source, .. } => source.kind(),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context_with<F, S>(self, f: F) -> Result<T>
    where
        F: FnOnce() -> S,
        S: Into<String>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context_with<F, S>(self, f: F) -> Result<T>
    where
        F: FnOnce() -> S,
        S: Into<String>,
    {
        self.map_err(|e| e.context(f()))
    }
}
