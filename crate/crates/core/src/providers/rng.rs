//! Per-query random streams. Each draw site gets its own generator keyed by
//! `(seed, track, frame, purpose)`, so results do not depend on call order
//! or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    MatchDropout = 1,
    MatchCenter = 2,
    GeometryDepth = 3,
    GeometryDims = 4,
    GeometryDirection = 5,
    DepthPixel = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, track: u64, frame: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = splitmix64(seed);
    for part in [track, frame, purpose as u64] {
        key = splitmix64(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}
