//! Seeded random streams.
//!
//! Every sampling routine takes an explicit `&mut R: Rng`. Experiments derive
//! one independent ChaCha stream per replication from a master seed and a
//! short list of integer tags, so each stream's output depends only on its
//! own tags.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a 64-bit stream seed from a master seed and tags.
pub fn derive_seed(master_seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master_seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// A generator for the stream identified by `(master_seed, tags)`.
pub fn stream(master_seed: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master_seed, tags))
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill so that column k depends only on draws for column k
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Uniform point on the unit sphere in R^n (normalized Gaussian).
pub fn unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = normal_vector(n, rng);
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}
