//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is keyed as
//! `derive(master, purpose-label, index)`: the master seed comes from the
//! experiment config, the label separates purposes ("oracle-stream",
//! "psi-build", ...), and the index separates trials within a purpose.
//! Two consumers with different labels therefore see independent-looking
//! streams from the same master seed, and a run is reproducible from the
//! config alone regardless of how trials are scheduled.

/// splitmix64 finalizer; full-period bijective mixer on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` for the given purpose and trial index.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    let mut h = mix(master ^ 0x9e37_79b9_7f4a_7c15);
    for &b in label.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_deterministic() {
        assert_eq!(derive(7, "psi-build", 3), derive(7, "psi-build", 3));
    }

    #[test]
    fn labels_and_indices_separate_streams() {
        let base = derive(7, "psi-build", 0);
        assert_ne!(base, derive(7, "psi-build", 1));
        assert_ne!(base, derive(7, "psi-est", 0));
        assert_ne!(base, derive(8, "psi-build", 0));
    }

    #[test]
    fn derived_seeds_spread_over_the_word() {
        // Cheap avalanche check: consecutive indices should not produce
        // clustered seeds.  Count distinct high bytes over 256 derivations.
        let mut high = std::collections::HashSet::new();
        for i in 0..256 {
            high.insert(derive(42, "spread", i) >> 56);
        }
        assert!(high.len() > 150, "only {} distinct high bytes", high.len());
    }
}
