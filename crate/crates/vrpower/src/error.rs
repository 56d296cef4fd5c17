//! Error type shared by the whole toolkit.
//!
//! Every variant carries a stable category string (see [`Error::category`])
//! that the command-line frontend prints as a machine-parsable
//! `error[<category>]:` prefix. Tests match on categories rather than on
//! message text, so messages are free to improve while categories stay fixed.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of trace reduction, dataset handling, fitting,
/// evaluation and synthesis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed file content: bad CSV row, unrecognized header, unknown
    /// variable tag, malformed JSON, inconsistent parameter counts.
    #[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Parse {
        /// 1-based line (or data-row) number where the problem was found.
        line: Option<usize>,
        msg: String,
    },

    /// A domain invariant was violated (non-monotonic trace time, flag
    /// outside {0, 1}, nonpositive dimension, empty input, ...).
    #[error("{0}")]
    Validation(String),

    /// An averaging window does not lie inside the trace's time span.
    #[error("{0}")]
    OutOfRange(String),

    /// Gross steady-state power fell below the idle baseline.
    #[error("gross power {gross} W is below idle power {idle} W")]
    NegativeNet { gross: f64, idle: f64 },

    /// The design matrix has linearly dependent columns; the offending
    /// columns are named so the variable set can be fixed.
    #[error("design matrix is rank deficient; dependent column(s): {}", columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    /// Fewer measurement rows than model parameters.
    #[error("underdetermined fit: {rows} row(s) for {params} parameter(s)")]
    Underdetermined { rows: usize, params: usize },

    /// A model file declares a schema version this build does not support.
    #[error("unsupported model schema version {found} (supported: {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    /// A relative quantity was requested against a zero measured value.
    #[error("{0}")]
    DivisionByZero(String),

    /// The model cannot answer the query (e.g. it has no resolution term).
    #[error("{0}")]
    UnsupportedQuery(String),

    /// A cross-validation fold failed; names the held-out sequence.
    #[error("fold holding out \"{sequence}\" failed: {source}")]
    Fold {
        sequence: String,
        #[source]
        source: Box<Error>,
    },

    /// Invalid configuration (synthetic grids, ground truth, thread count).
    #[error("{0}")]
    Config(String),

    /// A numerical post-condition failed; indicates a pathological input
    /// rather than a user mistake.
    #[error("{0}")]
    Numerical(String),

    /// Underlying I/O failure, with the operation or path as context.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// Wraps another error with file or operation context while keeping the
    /// inner error's category.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Builds a parse error tied to a 1-based line or row number.
    pub fn parse_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line: Some(line),
            msg: msg.into(),
        }
    }

    /// Builds a parse error with no line information.
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse {
            line: None,
            msg: msg.into(),
        }
    }

    /// Builds an I/O error with context (typically the file path).
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Wraps `self` with context (typically a file name) without changing
    /// its category.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Stable machine-parsable category for this error.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::OutOfRange(_) => "out-of-range",
            Error::NegativeNet { .. } => "negative-net",
            Error::SingularDesign { .. } => "singular-design",
            Error::Underdetermined { .. } => "underdetermined",
            Error::SchemaVersion { .. } => "schema-version",
            Error::DivisionByZero(_) => "division-by-zero",
            Error::UnsupportedQuery(_) => "unsupported-query",
            Error::Fold { .. } => "fold",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Context { source, .. } => source.category(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_are_stable() {
        assert_eq!(Error::parse("x").category(), "parse");
        assert_eq!(Error::Validation("x".into()).category(), "validation");
        assert_eq!(
            Error::NegativeNet {
                gross: 1.0,
                idle: 2.0
            }
            .category(),
            "negative-net"
        );
        assert_eq!(
            Error::SchemaVersion {
                found: 2,
                supported: 1
            }
            .category(),
            "schema-version"
        );
    }

    #[test]
    fn context_preserves_inner_category() {
        let inner = Error::NegativeNet {
            gross: 1.0,
            idle: 2.0,
        };
        let wrapped = inner.with_context("run_03.csv");
        assert_eq!(wrapped.category(), "negative-net");
        assert!(wrapped.to_string().starts_with("run_03.csv: "));
    }

    #[test]
    fn parse_error_mentions_line() {
        let e = Error::parse_at(3, "expected 2 fields");
        assert_eq!(e.to_string(), "line 3: expected 2 fields");
    }
}
