//! Seed derivation. Every random stream in a run is a pure function of the
//! run seed and a tuple of indices, so rounds and agents can be generated in
//! any order (or in parallel) without changing the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Keeping these distinct prevents accidental reuse of the
/// same stream for two purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    RoundGraph = 1,
    BaseGraph = 2,
    Batch = 3,
    SyntheticData = 4,
    Shuffle = 5,
    Probe = 6,
    Sigma = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, domain: Domain, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(domain as u64));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    h
}

pub fn stream(seed: u64, domain: Domain, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, domain, indices))
}
