use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateVar(String),

    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds { name: String, lower: f64, upper: f64 },

    #[error("unknown variable id {0}")]
    UnknownVar(usize),

    #[error("model has integrality marks; relax it before calling the LP engine")]
    NotRelaxed,

    #[error("instance too large for enumeration: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("infeasible hub configuration: {0}")]
    InfeasibleHubs(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
