//! Zero-knowledge identification from balanced Lee-metric syndrome decoding.
//!
//! Modules, bottom up:
//!
//! - [`ring`]: `Z_m` with centered representatives, Lee weight, syndromes.
//! - [`problems`]: general, balanced and ternary syndrome decoding instances.
//! - [`reductions`]: general → balanced and balanced ↔ ternary maps.
//! - [`commitments`]: salted SHA-256 commitments over canonical encodings.
//! - [`protocol`]: the three-challenge identification protocol.
//! - [`analysis`]: simulator, cheating provers, extractor and statistics.
//! - [`net`]: framed wire format and TCP prover/verifier sessions.

pub mod analysis;
mod bits;
pub mod commitments;
pub mod error;
pub mod net;
pub mod problems;
pub mod protocol;
pub mod reductions;
pub mod ring;

pub use commitments::{Commitment, Permutation, Slot};
pub use error::{Error, Result};
pub use problems::{SdInstance, TernaryVector, Variant, Witness};
pub use protocol::{Challenge, CommitMessage, Response, Verdict};
pub use ring::{Modulus, ZmMatrix, ZmVector};
