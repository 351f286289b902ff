//! Multi-scale similarity from Gaussian pyramid variances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, ImagePair};

/// Offset applied to variances before taking logarithms.
pub const LOG_VARIANCE_EPS: f64 = 1e-6;

/// Tolerance used to decide that two degenerate log-variance vectors match.
const DEGENERATE_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfsConfig {
    pub levels: usize,
    pub sigma: f64,
}

impl Default for MfsConfig {
    fn default() -> Self {
        Self { levels: 4, sigma: 1.0 }
    }
}

impl MfsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidConfig(format!("pyramid needs at least 2 levels, got {}", self.levels)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("blur sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPyramid {
    levels: Vec<GrayImage>,
    sigma: f64,
}

impl GaussianPyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Normalized Gaussian taps truncated at `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| (t / sum) as f32).collect()
}

/// Separable convolution with edge-replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (h, w) = img.dims();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0f32; h * w];
    for r in 0..h {
        let row = img.row(r);
        for c in 0..w {
            let mut acc = 0f32;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * row[clamp(c as isize + k as isize - radius, w)];
            }
            horizontal[r * w + c] = acc;
        }
    }

    let mut out = vec![0f32; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f32;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * horizontal[clamp(r as isize + k as isize - radius, h) * w + c];
            }
            out[r * w + c] = acc;
        }
    }
    GrayImage::from_raw_clamped(h, w, out)
}

/// Keeps even-indexed rows and columns.
pub fn downsample(img: &GrayImage) -> GrayImage {
    let (h, w) = img.dims();
    let (nh, nw) = (h.div_ceil(2), w.div_ceil(2));
    let mut data = Vec::with_capacity(nh * nw);
    for r in (0..h).step_by(2) {
        data.extend(img.row(r).iter().step_by(2));
    }
    GrayImage::from_raw_clamped(nh, nw, data)
}

/// Level 0 is the input; each further level is the previous one blurred and
/// decimated by two.
pub fn build_pyramid(img: &GrayImage, levels: usize, sigma: f64) -> Result<GaussianPyramid> {
    MfsConfig { levels, sigma }.validate()?;
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for _ in 1..levels {
        let prev = out.last().expect("pyramid has a base level");
        let next = downsample(&gaussian_blur(prev, sigma));
        if next.is_empty() {
            return Err(Error::ImageTooSmall { height: img.height(), width: img.width(), min: 1 });
        }
        out.push(next);
    }
    Ok(GaussianPyramid { levels: out, sigma })
}

/// Per-level population variance of pixel intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceVector(Vec<f64>);

impl VarianceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("variances must be finite and nonnegative".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Population standard deviation of the entries.
    pub fn std_dev(&self) -> f64 {
        let n = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        (self.0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

pub fn variance_vector(pyramid: &GaussianPyramid) -> VarianceVector {
    VarianceVector(pyramid.levels.iter().map(GrayImage::variance).collect())
}

/// `max(0, rho(log(v_ref + eps), log(v_dist + eps)))`.
///
/// When either log vector has zero spread the correlation is undefined; the
/// score is then 1 if the vectors coincide and 0 otherwise.
pub fn mfs_from_variances(reference: &VarianceVector, distorted: &VarianceVector) -> Result<f64> {
    if reference.len() != distorted.len() {
        return Err(Error::ShapeMismatch(format!(
            "variance vectors of length {} and {}",
            reference.len(),
            distorted.len()
        )));
    }
    let x: Vec<f64> = reference.0.iter().map(|v| (v + LOG_VARIANCE_EPS).ln()).collect();
    let y: Vec<f64> = distorted.0.iter().map(|v| (v + LOG_VARIANCE_EPS).ln()).collect();
    // sqrt(sxx) * sqrt(sxx) can land an ulp away from sxx.
    if x == y {
        return Ok(1.0);
    }

    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    // Spread below this is rounding noise from the log of equal values.
    let tiny = 1e-24 * n;
    if sxx <= tiny || syy <= tiny {
        let equal = x.iter().zip(&y).all(|(a, b)| (a - b).abs() <= DEGENERATE_MATCH_TOL);
        return Ok(if equal { 1.0 } else { 0.0 });
    }
    let rho = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(rho.clamp(0.0, 1.0))
}

pub fn mfs_score(pair: &ImagePair, cfg: &MfsConfig) -> Result<f64> {
    let (reference, distorted) = rayon::join(
        || build_pyramid(pair.reference(), cfg.levels, cfg.sigma),
        || build_pyramid(pair.distorted(), cfg.levels, cfg.sigma),
    );
    mfs_from_variances(&variance_vector(&reference?), &variance_vector(&distorted?))
}
