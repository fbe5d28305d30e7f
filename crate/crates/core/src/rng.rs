// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by
//! `(master seed, domain)` and positioned by an index, so ensemble members are
//! reproducible independently of execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream domains. Distinct domains never share key material.
pub mod domain {
    pub const NOISE: u64 = 0x6e6f_6973_6500_0001;
    pub const INITIAL: u64 = 0x696e_6974_0000_0002;
    pub const STATE: u64 = 0x7374_6174_6500_0003;
    pub const PERTURBATION: u64 = 0x7065_7274_0000_0004;
    pub const DERIVED: u64 = 0x6465_7269_7600_0005;
}

/// Random stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Child seed `label` of `seed`, for runs that chain several seeded stages.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    use rand::RngCore;
    stream(seed, domain::DERIVED, label).next_u64()
}
