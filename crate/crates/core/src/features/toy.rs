use crate::error::Result;
use crate::features::{FeatureExtractor, FeatureMap, FeatureMapSet};
use crate::image::GrayImage;

/// 3x3 kernels applied at every layer, in channel order.
pub const TOY_KERNELS: [[[f32; 3]; 3]; 4] = [
    // identity
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
    // horizontal Sobel
    [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]],
    // vertical Sobel
    [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]],
    // binomial blur
    [[0.0625, 0.125, 0.0625], [0.125, 0.25, 0.125], [0.0625, 0.125, 0.0625]],
];

/// Channel of each layer that feeds the next one.
pub const TOY_CARRY_CHANNEL: usize = 3;

/// Intensity subtracted from the input so mid-gray maps to zero activations.
pub const TOY_INPUT_OFFSET: f32 = 0.5;

const TOY_LAYERS: [usize; 5] = [1, 2, 3, 4, 5];

/// Small fixed convolution bank standing in for a pretrained network.
///
/// Layer 1 applies [`TOY_KERNELS`] to the centered image. Every further
/// layer 2x average-pools the blur channel of the previous layer and applies
/// the same bank again. Borders replicate edge pixels; there is no
/// nonlinearity, so responses are easy to compute by hand.
#[derive(Debug, Clone, Default)]
pub struct ToyExtractor;

impl ToyExtractor {
    pub fn new() -> Self {
        Self
    }
}

fn apply_bank(plane: &[f32], height: usize, width: usize) -> FeatureMap {
    let mut data = Vec::with_capacity(TOY_KERNELS.len() * height * width);
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, height as isize - 1) as usize;
        let c = c.clamp(0, width as isize - 1) as usize;
        plane[r * width + c]
    };
    for kernel in &TOY_KERNELS {
        for r in 0..height as isize {
            for c in 0..width as isize {
                let mut acc = 0f32;
                for (dr, row) in kernel.iter().enumerate() {
                    for (dc, &k) in row.iter().enumerate() {
                        if k != 0.0 {
                            acc += k * at(r + dr as isize - 1, c + dc as isize - 1);
                        }
                    }
                }
                data.push(acc);
            }
        }
    }
    FeatureMap::new(TOY_KERNELS.len(), height, width, data).expect("bank output matches its shape")
}

/// 2x2 mean pooling; blocks cut by the border average the pixels they hold.
fn avg_pool(plane: &[f32], height: usize, width: usize) -> (Vec<f32>, usize, usize) {
    let (nh, nw) = (height.div_ceil(2), width.div_ceil(2));
    let mut out = Vec::with_capacity(nh * nw);
    for r in 0..nh {
        for c in 0..nw {
            let mut acc = 0f32;
            let mut n = 0f32;
            for rr in 2 * r..(2 * r + 2).min(height) {
                for cc in 2 * c..(2 * c + 2).min(width) {
                    acc += plane[rr * width + cc];
                    n += 1.0;
                }
            }
            out.push(acc / n);
        }
    }
    (out, nh, nw)
}

impl FeatureExtractor for ToyExtractor {
    fn name(&self) -> &str {
        "toy"
    }

    fn layer_ids(&self) -> &[usize] {
        &TOY_LAYERS
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMapSet> {
        let (mut h, mut w) = img.dims();
        let mut plane: Vec<f32> = img.data().iter().map(|v| v - TOY_INPUT_OFFSET).collect();
        let mut layers = Vec::with_capacity(TOY_LAYERS.len());
        for depth in 0..TOY_LAYERS.len() {
            if depth > 0 {
                let prev: &FeatureMap = layers.last().expect("previous layer exists");
                let (pooled, nh, nw) = avg_pool(prev.channel(TOY_CARRY_CHANNEL), h, w);
                plane = pooled;
                h = nh;
                w = nw;
            }
            layers.push(apply_bank(&plane, h, w));
        }
        FeatureMapSet::new(TOY_LAYERS.to_vec(), layers)
    }
}
