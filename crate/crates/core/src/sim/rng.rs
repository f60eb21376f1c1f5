//! Keyed ChaCha8 substreams: one key per `(seed, domain, key)` and one
//! stream per attempt, so any unit of work can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_TRIALS: u64 = 1;
pub const DOMAIN_ARRIVALS: u64 = 2;
pub const DOMAIN_ATTEMPTS: u64 = 3;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, domain: u64, key: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(32);
    let mut bytes = [0u8; 32];
    let mut mix = splitmix64(&mut state) ^ key;
    for chunk in bytes.chunks_mut(8) {
        mix = splitmix64(&mut state) ^ mix.rotate_left(17);
        chunk.copy_from_slice(&mix.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(stream);
    rng
}

/// Probability as a 64-bit threshold: an event fires when a uniform `u64`
/// falls below it. `None` means certain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(Option<u64>);

impl Threshold {
    pub fn new(p: f64) -> Self {
        if p >= 1.0 {
            Threshold(None)
        } else if p <= 0.0 {
            Threshold(Some(0))
        } else {
            Threshold(Some((p * 18_446_744_073_709_551_616.0) as u64))
        }
    }

    #[inline]
    pub fn hit(self, draw: u64) -> bool {
        match self.0 {
            None => true,
            Some(t) => draw < t,
        }
    }
}
