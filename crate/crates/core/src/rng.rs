//! Keyed RNG substreams.
//!
//! Every unit of parallel work derives its own generator from the run seed and a
//! key describing the work (individual, stage, purpose). Results therefore do not
//! depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// One component of a substream key.
#[derive(Clone, Copy, Debug)]
pub enum Key<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Key<'a> {
    fn from(s: &'a str) -> Self {
        Key::Str(s)
    }
}

impl From<u64> for Key<'_> {
    fn from(v: u64) -> Self {
        Key::Int(v)
    }
}

impl From<usize> for Key<'_> {
    fn from(v: usize) -> Self {
        Key::Int(v as u64)
    }
}

/// Stable 64-bit seed for `(seed, keys...)`. Stable across platforms and releases.
pub fn derive_seed(seed: u64, keys: &[Key<'_>]) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    let mut feed = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    };
    for key in keys {
        match key {
            Key::Str(s) => {
                feed(0x01);
                for &b in s.as_bytes() {
                    feed(b);
                }
                feed(0xff);
            }
            Key::Int(v) => {
                feed(0x02);
                for b in v.to_le_bytes() {
                    feed(b);
                }
            }
        }
    }
    splitmix64(h)
}

pub fn substream(seed: u64, keys: &[Key<'_>]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, keys))
}
