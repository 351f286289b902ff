//! Grayscale image type, decoding and resolution alignment.

use std::path::Path;

use image::{DynamicImage, ImageError};

use crate::error::{Error, Result};

const LUMA_R: f32 = 0.299;
const LUMA_G: f32 = 0.587;
const LUMA_B: f32 = 0.114;

/// Row-major single-channel image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!("empty image {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    /// Builds an image from `f(row, col)`; values are clamped into `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                data.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
            }
        }
        Self::new(height, width, data)
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Result<Self> {
        Self::from_fn(height, width, |_, _| value)
    }

    /// Internal constructor for data already known to satisfy the invariants.
    pub(crate) fn from_raw_clamped(height: usize, width: usize, mut data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Population variance of pixel intensities.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / self.data.len() as f64
    }

    /// Grows the image to `height x width` by replicating its last row and
    /// column. Dimensions smaller than the current ones are kept.
    pub fn pad_to(&self, height: usize, width: usize) -> GrayImage {
        let height = height.max(self.height);
        let width = width.max(self.width);
        if (height, width) == self.dims() {
            return self.clone();
        }
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            let src = self.row(r.min(self.height - 1));
            data.extend_from_slice(src);
            let last = src[self.width - 1];
            data.extend(std::iter::repeat_n(last, width - self.width));
        }
        GrayImage { height, width, data }
    }
}

/// Reference/distorted pair with identical dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    reference: GrayImage,
    distorted: GrayImage,
}

impl ImagePair {
    /// Pairs two images that already share dimensions.
    pub fn new(reference: GrayImage, distorted: GrayImage) -> Result<Self> {
        if reference.dims() != distorted.dims() {
            return Err(Error::ShapeMismatch(format!(
                "reference {:?} vs distorted {:?}",
                reference.dims(),
                distorted.dims()
            )));
        }
        Ok(Self { reference, distorted })
    }

    pub fn reference(&self) -> &GrayImage {
        &self.reference
    }

    pub fn distorted(&self) -> &GrayImage {
        &self.distorted
    }

    pub fn dims(&self) -> (usize, usize) {
        self.reference.dims()
    }

    pub fn swapped(&self) -> ImagePair {
        ImagePair { reference: self.distorted.clone(), distorted: self.reference.clone() }
    }

    pub fn into_parts(self) -> (GrayImage, GrayImage) {
        (self.reference, self.distorted)
    }
}

/// Aligns two images to the per-axis maximum size, growing each one on its
/// bottom and right edges by edge replication.
pub fn pad_to_same_resolution(a: &GrayImage, b: &GrayImage) -> ImagePair {
    let height = a.height.max(b.height);
    let width = a.width.max(b.width);
    ImagePair { reference: a.pad_to(height, width), distorted: b.pad_to(height, width) }
}

/// Decodes a PNG, JPEG or BMP file into normalized luminance.
///
/// Color inputs are converted with Rec. 601 weights; alpha is ignored.
/// 8-bit samples are divided by 255 and 16-bit samples by 65535.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    // Sniff the content only; a misleading extension must not pick the decoder.
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let reader = image::ImageReader::new(file)
        .with_guessed_format()
        .map_err(|e| Error::Decode { path: path.to_path_buf(), reason: e.to_string() })?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "unrecognized file signature".into(),
        });
    }
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(u) => Error::UnsupportedFormat { path: path.to_path_buf(), reason: u.to_string() },
        other => Error::Decode { path: path.to_path_buf(), reason: other.to_string() },
    })?;
    from_dynamic(&decoded)
}

/// Converts a decoded image into normalized luminance.
pub fn from_dynamic(img: &DynamicImage) -> Result<GrayImage> {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma8(b) => b.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.as_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(b) => b.pixels().map(|p| p.0[0] as f32 / 65535.0).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| luma(p.0.map(|c| c as f32)) / 255.0).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| luma([p.0[0], p.0[1], p.0[2]].map(|c| c as f32)) / 255.0).collect(),
        DynamicImage::ImageRgb16(b) => b.pixels().map(|p| luma(p.0.map(|c| c as f32)) / 65535.0).collect(),
        DynamicImage::ImageRgba16(b) => {
            b.pixels().map(|p| luma([p.0[0], p.0[1], p.0[2]].map(|c| c as f32)) / 65535.0).collect()
        }
        other => other.to_rgb32f().pixels().map(|p| luma(p.0)).collect(),
    };
    Ok(GrayImage::from_raw_clamped(height, width, data))
}

/// Neutral pixels pass through unchanged: the weights sum to 1 but the
/// rounded dot product does not, and a gray file saved as RGB must load
/// identically to the same file saved as gray.
#[inline]
fn luma([r, g, b]: [f32; 3]) -> f32 {
    if r == g && g == b {
        return r;
    }
    LUMA_R * r + LUMA_G * g + LUMA_B * b
}
