use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input is outside its valid domain.
    #[error("invalid {param}: {reason}")]
    Domain { param: &'static str, reason: String },

    /// An iterative solve did not reach its tolerance.
    #[error("{what} did not converge (constraint residual {residual:.3e})")]
    Convergence { what: &'static str, residual: f64 },

    /// Malformed tabular or JSON input. `row` is the 1-based data row, when known.
    #[error("{}", format_parse(.row, .message))]
    Parse { row: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_parse(row: &Option<usize>, message: &str) -> String {
    match row {
        Some(r) => format!("row {r}: {message}"),
        None => message.to_string(),
    }
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: message.into(),
        }
    }

    /// True when the failure came from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let row = err.position().map(|p| p.line() as usize);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => Error::Parse {
                row: row.map(|line| line.saturating_sub(1)),
                message: format!("{kind:?}"),
            },
        }
    }
}
