//! Deterministic inputs shared by the benchmarks.

use hirqm::{GrayImage, ImagePair};

/// Cheap integer hash mapped to `[0, 1)`, so inputs need no RNG crate.
fn hash01(r: usize, c: usize, salt: usize) -> f32 {
    let mut x = (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (c as u64).wrapping_add(salt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 31;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 29;
    (x >> 40) as f32 / (1u64 << 24) as f32
}

pub fn textured(height: usize, width: usize) -> GrayImage {
    GrayImage::from_fn(height, width, |r, c| {
        let (x, y) = (c as f32 / width as f32, r as f32 / height as f32);
        0.5 + 0.3 * (11.0 * x).sin() * (7.0 * y).cos() + 0.1 * (hash01(r, c, 0) - 0.5)
    })
    .expect("non-empty")
}

/// `textured` plus uniform noise of the given amplitude.
pub fn noisy_pair(height: usize, width: usize, amplitude: f32) -> ImagePair {
    let reference = textured(height, width);
    let distorted = GrayImage::from_fn(height, width, |r, c| {
        reference.get(r, c) + amplitude * (hash01(r, c, 1) - 0.5)
    })
    .expect("non-empty");
    ImagePair::new(reference, distorted).expect("same size")
}
