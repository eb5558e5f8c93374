//! Executable counterparts of the security arguments: the zero-knowledge
//! simulator, scripted cheating provers, the rewinding extractor, a
//! two-sample transcript test and an exhaustive probe of the general to
//! balanced reduction.
//!
//! Trials that need independent randomness take a generator from
//! [`derive_rng`], which splits a root seed by hashing it with the trial
//! index. The split rule is stable, so a trial can be replayed alone.

mod adversary;
mod extractor;
mod probe;
mod simulator;
mod stats;

pub use adversary::{
    broken_identity_round, cheating_prover_round, two_witness_instance, CheatStrategy,
    CheatingProver,
};
pub use extractor::{extract_from_responses, extract_from_state, Extraction};
pub use probe::{probe_balanced_reduction, ProbeOutcome};
pub use simulator::{real_view, simulate_view, SimulatedView, View};
pub use stats::{
    transcript_distribution_test, view_features, DistributionReport, FeatureResult, MIN_SAMPLES,
};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Generator for trial `index` under `root`:
/// `ChaCha20(SHA-256("lee-zk/trial" || root_le || index_le))`.
pub fn derive_rng(root: u64, index: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"lee-zk/trial");
    h.update(root.to_le_bytes());
    h.update(index.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}
