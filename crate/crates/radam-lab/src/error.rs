use std::fmt;
use std::io;

/// Failure cases surfaced by the library and the command-line front end.
///
/// Every variant renders as `<kind>: <detail>` on a single line so callers
/// can match on the kind prefix without parsing the rest.
#[derive(Debug)]
pub enum Error {
    /// A mathematical function was called outside its domain.
    Domain(String),
    /// The requested statistic does not exist here (variance of the
    /// adaptive rate requires more than four effective samples).
    VarianceIntractable(String),
    /// The configuration is well-formed but describes a run with no
    /// content, e.g. a rectifier that can never activate.
    DegenerateConfig(String),
    /// The configuration is malformed or inconsistent.
    InvalidConfig(String),
    Io {
        path: String,
        source: io::Error,
    },
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable machine-readable token identifying the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::VarianceIntractable(_) => "variance-intractable",
            Error::DegenerateConfig(_) => "degenerate-config",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(detail)
            | Error::VarianceIntractable(detail)
            | Error::DegenerateConfig(detail)
            | Error::InvalidConfig(detail) => write!(f, "{}: {}", self.kind(), detail),
            Error::Io { path, source } => write!(f, "io: {path}: {source}"),
            Error::Json { path, source } => write!(f, "json: {path}: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Json { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
