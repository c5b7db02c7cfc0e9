//! FNV-1a-64 digests used for mock determinism and RNG stream derivation.

use core::hash::Hasher;

use fnv::FnvHasher;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(bytes);
    hasher.finish()
}

/// Seed for the per-agent, per-round RNG stream: `seed ^ FNV-1a-64(round_le || agent_le)`,
/// both encoded as little-endian `u64`.
pub fn stream_seed(seed: u64, round: usize, agent_id: usize) -> u64 {
    let mut buf = [0u8; 16];
    buf[..8].copy_from_slice(&(round as u64).to_le_bytes());
    buf[8..].copy_from_slice(&(agent_id as u64).to_le_bytes());
    seed ^ fnv1a64(&buf)
}

/// Seed for a named single-use stream (e.g. random leader selection).
pub fn labeled_seed(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a64(label.as_bytes())
}
