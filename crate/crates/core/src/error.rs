use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is out of range (need 4 <= m <= 32767)")]
    InvalidModulus(i64),

    #[error("entry {value} is not a canonical representative modulo {modulus}")]
    NotCanonical { value: i64, modulus: u16 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operands live over different moduli ({0} vs {1})")]
    ModulusMismatch(u16, u16),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("{c} is not invertible modulo {m}")]
    NotInvertible { c: i64, m: u16 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("prover round state already answered a challenge")]
    StateConsumed,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
