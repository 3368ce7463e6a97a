//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a base seed plus a
//! structural path (chain index, iteration, instance index, method name).
//! The derivation is a fixed bit-mixing function, so results are stable
//! across platforms and independent of execution order.

/// SplitMix64 finalizer; full-period bijection on u64.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a path of integers.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Derive a child seed from a base seed and a label (e.g. a method name).
pub fn derive_labeled(base: u64, label: &str) -> u64 {
    derive(base, &[fnv1a(label.as_bytes())])
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}
