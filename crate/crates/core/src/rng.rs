//! Deterministic random-number streams.
//!
//! Every stochastic operation draws from a ChaCha8 stream keyed by
//! `(master_seed, purpose, index)`. ChaCha8 is a counter-based, versioned
//! generator, so repeated calls with the same triple are bit-identical on
//! every platform, and distinct trials never share state — which is what
//! makes trial-level parallelism reproducible regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A deterministic RNG for the given `(master_seed, purpose, index)` triple.
///
/// The 256-bit ChaCha key is `SHA-256(master_seed_le || purpose || index_le)`,
/// which keeps independently-purposed streams disjoint without manual
/// bookkeeping of seed offsets.
pub fn stream(master_seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
