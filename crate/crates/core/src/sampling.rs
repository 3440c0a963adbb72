//! Deterministic random streams and low-discrepancy designs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a list of tags into an independent 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(base ^ 0x6a09_e667_f3bc_c909);
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible RNG for the stream identified by `(base, tags)`.
pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Halton sequence with per-dimension random digit permutations (zero kept
/// fixed), skipping the origin. Points lie in `[0, 1)^dim`.
pub fn scrambled_halton(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        dim <= PRIMES.len(),
        "scrambled_halton supports up to {} dims",
        PRIMES.len()
    );
    let mut rng = stream(seed, &[0x4a17]);
    let perms: Vec<Vec<u64>> = PRIMES[..dim]
        .iter()
        .map(|&b| {
            let mut tail: Vec<u64> = (1..b).collect();
            tail.shuffle(&mut rng);
            std::iter::once(0).chain(tail).collect()
        })
        .collect();
    (1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| radical_inverse(i, PRIMES[d], &perms[d]))
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64, perm: &[u64]) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += perm[(i % base) as usize] as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

/// Maps unit-cube points onto the probability simplex of dimension `dim + 1`
/// (sorted-spacings construction, uniform for uniform inputs).
pub fn cube_to_simplex(u: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = u.to_vec();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(u.len() + 1);
    let mut prev = 0.0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}
