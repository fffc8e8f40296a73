use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A series did not reach its tolerance within the term cap.
    #[error("series did not converge after {terms} terms (partial sum {partial_sum:e}, tail bound {tail_bound:e})")]
    NonConvergence {
        terms: usize,
        partial_sum: f64,
        tail_bound: f64,
    },

    #[error("inconsistent fits: likelihood-ratio statistic {statistic:e} is negative")]
    InconsistentFits { statistic: f64 },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("sample too small: {got} observations, at least {need} required")]
    SampleTooSmall { got: usize, need: usize },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
