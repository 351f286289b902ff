//! Hierarchical feature extraction backends.

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[cfg(feature = "onnx")]
mod onnx;
mod toy;

#[cfg(feature = "onnx")]
pub use self::onnx::{ModelManifest, OnnxVggExtractor, IMAGENET_MEAN, IMAGENET_STD};
pub use self::toy::ToyExtractor;

/// Layer indices of the VGG16 `features` trunk that are tapped.
pub const VGG16_LAYERS: [usize; 5] = [3, 8, 15, 22, 29];

/// Dense `channels x height x width` activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} feature map",
                data.len()
            )));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[channel * plane..(channel + 1) * plane]
    }

    /// Root mean square activation, `||F||_2 / sqrt(len)`.
    pub fn rms(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let sq: f64 = self.data.iter().map(|&v| (v as f64) * (v as f64)).sum();
        (sq / self.data.len() as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }
}

/// Ordered feature maps, shallow to deep.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSet {
    layer_ids: Vec<usize>,
    layers: Vec<FeatureMap>,
}

impl FeatureMapSet {
    pub fn new(layer_ids: Vec<usize>, layers: Vec<FeatureMap>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("feature map set has no layers".into()));
        }
        if layer_ids.len() != layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} layer ids for {} feature maps",
                layer_ids.len(),
                layers.len()
            )));
        }
        for pair in layers.windows(2) {
            if pair[1].height > pair[0].height || pair[1].width > pair[0].width {
                return Err(Error::ShapeMismatch(format!(
                    "deeper layer {}x{} is larger than {}x{}",
                    pair[1].height, pair[1].width, pair[0].height, pair[0].width
                )));
            }
        }
        Ok(Self { layer_ids, layers })
    }

    pub fn layer_ids(&self) -> &[usize] {
        &self.layer_ids
    }

    pub fn layers(&self) -> &[FeatureMap] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn deepest(&self) -> &FeatureMap {
        self.layers.last().expect("feature map set is never empty")
    }
}

/// A frozen network mapping a grayscale image to hierarchical features.
///
/// Implementations must be deterministic and must not change state in a way
/// that affects later outputs.
pub trait FeatureExtractor: Send + Sync {
    /// Backend name echoed in reports (`toy`, `vgg16`).
    fn name(&self) -> &str;

    fn layer_ids(&self) -> &[usize];

    fn extract(&self, img: &GrayImage) -> Result<FeatureMapSet>;
}

impl<T: FeatureExtractor + ?Sized> FeatureExtractor for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn layer_ids(&self) -> &[usize] {
        (**self).layer_ids()
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMapSet> {
        (**self).extract(img)
    }
}
