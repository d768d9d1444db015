use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rational {0} is not in the open unit interval")]
    OutOfRange(String),

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("continued fraction word is empty")]
    EmptyWord,

    #[error("continued fraction digits must be positive")]
    ZeroDigit,

    #[error("word {0} is not in reduced form (last digit must be at least 2)")]
    NotReduced(String),

    #[error("partial quotient does not fit in 64 bits")]
    DigitOverflow,

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("stream ended after {got} digits, {needed} required")]
    StreamExhausted { got: u64, needed: u64 },

    #[error("stream does not carry consistent word-boundary metadata at position {0}")]
    BoundaryMetadata(u64),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("report serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str) -> Self {
        Error::Parse {
            what,
            input: input.to_owned(),
        }
    }
}
