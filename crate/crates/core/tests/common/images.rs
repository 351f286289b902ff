use hirqm::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_noise(h: usize, w: usize, seed: u64) -> GrayImage {
    let mut r = rng(seed);
    GrayImage::from_fn(h, w, |_, _| r.random::<f32>()).unwrap()
}

pub fn gradient(h: usize, w: usize, angle: f32) -> GrayImage {
    let (s, c) = angle.sin_cos();
    let norm = (h as f32 * s.abs() + w as f32 * c.abs()).max(1.0);
    GrayImage::from_fn(h, w, |r, col| {
        let t = (r as f32 * s.abs() + col as f32 * c.abs()) / norm;
        t.clamp(0.0, 1.0)
    })
    .unwrap()
}

pub fn checkerboard(h: usize, w: usize, cell: usize, lo: f32, hi: f32) -> GrayImage {
    GrayImage::from_fn(h, w, |r, c| if (r / cell + c / cell) % 2 == 0 { lo } else { hi }).unwrap()
}

/// Smooth multi-frequency pattern plus mild seeded grain; stands in for a
/// natural photograph in ordering tests.
pub fn natural(h: usize, w: usize, seed: u64) -> GrayImage {
    textured(h, w, seed, 0.03)
}

/// The `natural` pattern without grain, for use as a clean reference when
/// the distortion under test is itself additive noise.
pub fn clean_natural(h: usize, w: usize, seed: u64) -> GrayImage {
    textured(h, w, seed, 0.0)
}

fn textured(h: usize, w: usize, seed: u64, grain_sigma: f32) -> GrayImage {
    let mut r = rng(seed);
    let f1: f32 = r.random_range(3.0..8.0);
    let f2: f32 = r.random_range(8.0..20.0);
    let phase: f32 = r.random_range(0.0..6.28);
    let grain = Normal::new(0.0f32, grain_sigma).unwrap();
    GrayImage::from_fn(h, w, |row, col| {
        let (x, y) = (col as f32 / w as f32, row as f32 / h as f32);
        let base = 0.5
            + 0.22 * (f1 * x + phase).sin() * (f1 * 0.7 * y).cos()
            + 0.12 * (f2 * (x + y) + phase).sin()
            + 0.08 * if ((row / 9) + (col / 11)) % 2 == 0 { 1.0 } else { -1.0 };
        base + grain.sample(&mut r)
    })
    .unwrap()
}

/// Adds zero-mean Gaussian noise and clips to `[0, 1]`.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f32, seed: u64) -> GrayImage {
    if sigma == 0.0 {
        return img.clone();
    }
    let mut r = rng(seed);
    let noise = Normal::new(0.0f32, sigma).unwrap();
    GrayImage::from_fn(img.height(), img.width(), |row, col| img.get(row, col) + noise.sample(&mut r)).unwrap()
}

pub fn invert(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(img.height(), img.width(), |r, c| 1.0 - img.get(r, c)).unwrap()
}

/// Twenty varied images: noise, gradients, checkerboards, constants, textures.
pub fn identity_suite(seed: u64) -> Vec<(String, GrayImage)> {
    let mut out = Vec::new();
    for i in 0..4u64 {
        let size = 40 + 8 * i as usize;
        out.push((format!("noise{i}"), uniform_noise(size, size + 3, seed + i)));
        out.push((format!("gradient{i}"), gradient(size + 5, size, i as f32 * 0.4)));
        out.push((format!("checker{i}"), checkerboard(size, size, 2 + 3 * i as usize, 0.1 * i as f32, 0.9)));
        out.push((format!("constant{i}"), GrayImage::constant(size, size, [0.0, 0.25, 0.5, 1.0][i as usize]).unwrap()));
        out.push((format!("natural{i}"), natural(size + 11, size + 7, seed + 100 + i)));
    }
    out
}
