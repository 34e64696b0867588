use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A sieve, factorization, or enumeration request exceeded its configured budget.
    #[error("{resource} budget exceeded: requested {requested}, limit {limit}")]
    Budget {
        resource: &'static str,
        requested: String,
        limit: String,
    },

    /// A precondition on an argument was violated.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Scheme construction failed (degenerate sizes, unrepresentable fields).
    #[error("construction error: {0}")]
    Construction(String),

    /// Key generation kept returning bottom past the retry cap.
    #[error("key generation failed after {attempts} attempts over [1..{bound}]")]
    KeyGeneration { attempts: u32, bound: String },

    /// A codeword bit string does not match the layout implied by the parameters.
    #[error("codeword width mismatch: expected {expected} bits ({expected_bytes} bytes), got {got} bytes")]
    WidthMismatch {
        expected: usize,
        expected_bytes: usize,
        got: usize,
    },

    /// A decoded codeword violates the layout invariants.
    #[error("malformed codeword: {0}")]
    MalformedCodeword(String),

    /// Hash-family composition with incompatible domain/range.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// A linear-code specification failed verification.
    #[error("invalid code spec: {0}")]
    InvalidCodeSpec(String),

    /// A hash family cannot be converted to the requested structure.
    #[error("incompatible family: {0}")]
    IncompatibleFamily(String),

    /// An input value lies outside the domain of the operation.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Text input (hex transport, matrix files) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
