//! Patch histogram similarity.
//!
//! Both images are cut into the same grid of patches. Each patch becomes a
//! smoothed intensity histogram, histograms are compared with the
//! Kullback-Leibler divergence (reference first) and the mean divergence `d`
//! is mapped to a similarity `exp(-d)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, ImagePair};

/// Mass added to every bin before renormalization.
pub const HISTOGRAM_SMOOTHING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdfConfig {
    pub patch_size: usize,
    pub stride: usize,
    pub bins: usize,
}

impl Default for PdfConfig {
    fn default() -> Self {
        Self { patch_size: 32, stride: 32, bins: 256 }
    }
}

impl PdfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 {
            return Err(Error::InvalidConfig("patch size must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidConfig("bin count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rectangular region of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub stride: usize,
    pub patches: Vec<Patch>,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Offsets `0, stride, 2*stride, ...` below `extent`, with any patch that
/// would overrun pulled back so it ends on the image edge.
fn axis_offsets(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let patch = patch.min(extent);
    let last = extent - patch;
    let mut offsets: Vec<usize> = (0..extent).step_by(stride).map(|o| o.min(last)).collect();
    offsets.dedup();
    offsets
}

/// Tiles `img` with `patch_size` squares placed every `stride` pixels.
///
/// Dimensions smaller than the patch size produce patches that span the
/// whole axis, so there is always at least one patch.
pub fn build_patch_grid(img: &GrayImage, patch_size: usize, stride: usize) -> Result<PatchGrid> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::InvalidConfig("patch size and stride must be at least 1".into()));
    }
    let (height, width) = img.dims();
    let ph = patch_size.min(height);
    let pw = patch_size.min(width);
    let rows = axis_offsets(height, patch_size, stride);
    let cols = axis_offsets(width, patch_size, stride);
    let patches = rows
        .iter()
        .flat_map(|&row| cols.iter().map(move |&col| Patch { row, col, height: ph, width: pw }))
        .collect();
    Ok(PatchGrid { patch_size, stride, patches })
}

/// Smoothed probability mass over equal-width intensity bins.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchHistogram {
    mass: Vec<f64>,
}

impl PatchHistogram {
    /// Normalizes raw counts, adds [`HISTOGRAM_SMOOTHING`] to every bin and
    /// renormalizes.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let total = total.max(1) as f64;
        let mut mass: Vec<f64> = counts.iter().map(|&c| c as f64 / total + HISTOGRAM_SMOOTHING).collect();
        let sum: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= sum;
        }
        Self { mass }
    }

    /// Wraps an explicit distribution. Entries must be strictly positive and
    /// are renormalized to sum to one.
    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || mass.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidConfig("histogram mass must be non-empty and strictly positive".into()));
        }
        let sum: f64 = mass.iter().sum();
        Ok(Self { mass: mass.into_iter().map(|m| m / sum).collect() })
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

/// Bin for a normalized intensity: half-open bins with 1.0 in the top bin.
#[inline]
pub fn bin_index(value: f32, bins: usize) -> usize {
    ((value as f64 * bins as f64).floor() as usize).min(bins - 1)
}

fn patch_counts(img: &GrayImage, patch: &Patch, bins: usize, counts: &mut [u64]) {
    counts.fill(0);
    for r in patch.row..patch.row + patch.height {
        for &v in &img.row(r)[patch.col..patch.col + patch.width] {
            counts[bin_index(v, bins)] += 1;
        }
    }
}

pub fn patch_histogram(img: &GrayImage, patch: &Patch, bins: usize) -> Result<PatchHistogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bin count must be at least 1".into()));
    }
    if patch.height == 0
        || patch.width == 0
        || patch.row + patch.height > img.height()
        || patch.col + patch.width > img.width()
    {
        return Err(Error::InvalidConfig(format!("patch {patch:?} outside {:?} image", img.dims())));
    }
    let mut counts = vec![0; bins];
    patch_counts(img, patch, bins, &mut counts);
    Ok(PatchHistogram::from_counts(&counts))
}

/// `sum_i p(i) ln(p(i) / q(i))`, in nats.
pub fn kl_divergence(p: &PatchHistogram, q: &PatchHistogram) -> Result<f64> {
    if p.bins() != q.bins() {
        return Err(Error::BinCountMismatch { left: p.bins(), right: q.bins() });
    }
    Ok(kl_sum(&p.mass, &q.mass))
}

fn kl_sum(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum()
}

/// Similarity `exp(-mean KL)` over the patch grid of the reference image.
pub fn pdf_score(pair: &ImagePair, cfg: &PdfConfig) -> Result<f64> {
    cfg.validate()?;
    let grid = build_patch_grid(pair.reference(), cfg.patch_size, cfg.stride)?;
    let divergences: Vec<f64> = grid
        .patches
        .par_iter()
        .map_init(
            || (vec![0u64; cfg.bins], vec![0u64; cfg.bins]),
            |(ref_counts, dist_counts), patch| {
                patch_counts(pair.reference(), patch, cfg.bins, ref_counts);
                patch_counts(pair.distorted(), patch, cfg.bins, dist_counts);
                let p = PatchHistogram::from_counts(ref_counts);
                let q = PatchHistogram::from_counts(dist_counts);
                kl_sum(&p.mass, &q.mass)
            },
        )
        .collect();
    // Collected in grid order so the mean does not depend on thread scheduling.
    let mean = divergences.iter().sum::<f64>() / divergences.len() as f64;
    Ok((-mean).exp().min(1.0))
}
