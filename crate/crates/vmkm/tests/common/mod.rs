//! Shared generators for integration tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use vmkm::{validate_dataset, Dataset};

/// Three 1-D Gaussian blobs at 0 / 50 / 100 with sigma 2, 100 points each.
#[allow(dead_code)]
pub fn gaussian_blobs_1d(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(300);
    for mean in [0.0, 50.0, 100.0] {
        let normal = Normal::new(mean, 2.0).unwrap();
        for _ in 0..100 {
            rows.push(vec![normal.sample(&mut rng)]);
        }
    }
    validate_dataset(&rows).unwrap()
}

/// Uniform noise in [0, 100]^2.
#[allow(dead_code)]
pub fn uniform_noise_2d(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect();
    validate_dataset(&rows).unwrap()
}

/// A dataset whose elements are all identical.
#[allow(dead_code)]
pub fn constant_data(n: usize) -> Dataset {
    validate_dataset(&vec![vec![7.5]; n]).unwrap()
}

/// Random small instance for oracle comparisons: n elements, d features,
/// values in [0, 10).
#[allow(dead_code)]
pub fn random_instance(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..10.0)).collect())
        .collect();
    validate_dataset(&rows).unwrap()
}

/// Random 64x64 grayscale intensities as a flat row-major buffer.
#[allow(dead_code)]
pub fn random_image_values(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..64 * 64)
        .map(|_| rng.random_range(0..=255u16) as f64)
        .collect()
}
