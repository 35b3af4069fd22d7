//! Seeded, splittable random streams.
//!
//! Every random decision in the pipeline draws from an [`RngStream`] keyed by
//! `(seed, stream index)`. Work items (images, epochs, sweep levels) own
//! distinct stream indices, so results do not depend on execution order or
//! worker count.

use rand::RngCore;
use rand_pcg::Pcg32;

/// Identity of the generator, recorded in run manifests.
pub const GENERATOR_ID: &str =
    "pcg32-xsh-rr-64/32 (rand_pcg 0.9 Pcg32); state=splitmix64(seed^splitmix64(stream)), increment=stream";

/// One step of SplitMix64.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed for a named purpose (e.g. "degrade at level 70").
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)).wrapping_add(index))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    inner: Pcg32,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let state = splitmix64(seed ^ splitmix64(stream));
        RngStream {
            inner: Pcg32::new(state, stream),
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
