use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid prime {0}: must be a prime in 2..=97")]
    InvalidPrime(u64),
    #[error("precision {0} below the minimum of 12 digits")]
    InvalidPrecision(u32),
    #[error("values over different primes ({0} and {1})")]
    PrimeMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operation undefined at zero: {0}")]
    ZeroInput(&'static str),
    #[error("precision exhausted: result agrees with 0 to all {0} known digits")]
    PrecisionExhausted(i64),
    #[error("precision exceeded: requested {requested} digits, {available} known")]
    PrecisionExceeded { requested: u32, available: u32 },
    #[error("indeterminate at available precision: {0}")]
    Indeterminate(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("not in level set: {0}")]
    NotInLevelSet(String),
    #[error("point outside the domain of {step}: {detail}")]
    Domain { step: String, detail: String },
    #[error("step {index}: {source}")]
    AtStep { index: usize, source: Box<Error> },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error("form is not integral on a part: {0}")]
    NonIntegralForm(String),
    #[error("empty set: {0}")]
    Empty(String),
    #[error("overlap: {0}")]
    Overlap(String),
    #[error("residue window too small: {condition} needs modulus exponent {required}")]
    WindowTooSmall { condition: String, required: i64 },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("parse error at {line}:{col}: {message}{}", expected_list(.expected))]
    Parse {
        line: usize,
        col: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io: {0}")]
    Io(String),
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl Error {
    /// True for errors caused by missing digits rather than by bad input.
    pub fn is_precision(&self) -> bool {
        match self {
            Error::PrecisionExhausted(_) | Error::PrecisionExceeded { .. } | Error::Indeterminate(_) => true,
            Error::AtStep { source, .. } => source.is_precision(),
            _ => false,
        }
    }

    pub fn at_step(self, index: usize) -> Error {
        Error::AtStep {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn domain(step: impl Into<String>, detail: impl Into<String>) -> Error {
        Error::Domain {
            step: step.into(),
            detail: detail.into(),
        }
    }
}
