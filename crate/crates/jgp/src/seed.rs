//! Deterministic derivation of sub-seeds from a base seed.
//!
//! Every randomized component (data shuffles, simulated-row subsampling,
//! optimizer restarts) derives its own stream from the run seed and its
//! coordinates, so results do not depend on execution order or thread count.

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed and a coordinate tuple.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(base);
    for &p in parts {
        state = mix64(state ^ mix64(p));
    }
    state
}
