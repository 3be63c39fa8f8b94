//! Deterministic per-stream random generators derived from one top-level seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trig_spectral::TrigPoly;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for stream `(seed, component, index)`.
pub fn stream_seed(seed: u64, component: &str, index: u64) -> u64 {
    // FNV-1a over the component name
    let tag = component.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    splitmix64(splitmix64(seed ^ tag).wrapping_add(index))
}

pub fn stream_rng(seed: u64, component: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, component, index))
}

/// Random series on modes `0..=max_mode` with coefficients uniform in
/// `[−amp/(1+j), amp/(1+j)]`; `keep(j)` filters the active modes.
pub fn random_series<R: Rng>(
    rng: &mut R,
    order: usize,
    max_mode: usize,
    amp: f64,
    keep: impl Fn(usize) -> bool,
) -> TrigPoly {
    let mut u = TrigPoly::zeros(order);
    for j in 0..=max_mode.min(order) {
        let scale = amp / (1.0 + j as f64);
        let a = rng.gen_range(-scale..=scale);
        let b = rng.gen_range(-scale..=scale);
        if keep(j) {
            u.set_mode(j, a, if j == 0 { 0.0 } else { b });
        }
    }
    u
}
