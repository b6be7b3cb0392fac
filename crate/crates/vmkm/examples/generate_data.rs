//! Regenerates the bundled sample datasets under `data/`.
//!
//! Usage: `cargo run -p vmkm --example generate_data -- <output-dir>`

use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use vmkm::dataio::{write_segmented_pgm, LabelMap};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = Path::new(args.get(1).map(String::as_str).unwrap_or("data"));
    std::fs::create_dir_all(out).expect("create output dir");

    // three 1-D Gaussian blobs at 0 / 50 / 100, sigma 2, 100 points each
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut csv = String::new();
    for mean in [0.0, 50.0, 100.0] {
        let normal = Normal::new(mean, 2.0).unwrap();
        for _ in 0..100 {
            let x: f64 = normal.sample(&mut rng);
            let _ = writeln!(csv, "{x}");
        }
    }
    std::fs::write(out.join("blobs.csv"), csv).expect("write blobs.csv");

    // two concentric rings in 2-D, 32 points each
    let mut rings = String::new();
    for (radius, phase) in [(1.0, 0.0), (5.0, 0.5)] {
        for i in 0..32 {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + phase) / 32.0;
            let _ = writeln!(rings, "{},{}", radius * t.cos(), radius * t.sin());
        }
    }
    std::fs::write(out.join("rings.csv"), rings).expect("write rings.csv");

    // 64x64 four-tone quadrant image: 0 / 85 / 170 / 255
    let tones = [0.0, 85.0, 170.0, 255.0];
    let mut labels = Vec::with_capacity(64 * 64);
    for row in 0..64 {
        for col in 0..64 {
            let quadrant = (row / 32) * 2 + col / 32;
            labels.push(quadrant);
        }
    }
    let quadrants = LabelMap {
        labels,
        k: 4,
        image_shape: Some((64, 64)),
    };
    let centroids: Vec<Vec<f64>> = tones.iter().map(|&t| vec![t]).collect();
    write_segmented_pgm(out.join("quadrants.pgm"), &quadrants, &centroids)
        .expect("write quadrants.pgm");

    // 64x64 uniform random grayscale image
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise_labels: Vec<usize> = (0..64 * 64).map(|_| rng.random_range(0..256)).collect();
    let noise = LabelMap {
        labels: noise_labels,
        k: 256,
        image_shape: Some((64, 64)),
    };
    let intensity_scale: Vec<Vec<f64>> = (0..256).map(|i| vec![i as f64]).collect();
    write_segmented_pgm(out.join("random64.pgm"), &noise, &intensity_scale)
        .expect("write random64.pgm");

    println!("wrote blobs.csv, rings.csv, quadrants.pgm, random64.pgm to {}", out.display());
}
