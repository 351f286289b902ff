//! Dynamic component weights, score aggregation and the quality report.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::FeatureMapSet;
use crate::image::GrayImage;
use crate::mfs::{variance_vector, GaussianPyramid, VarianceVector};

const NORMALIZATION_EPS: f64 = 1e-12;

/// Raw, pre-softmax relevance of each component for a reference image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScores {
    pub s_pdf: f64,
    pub s_mfs: f64,
    pub s_hdif: f64,
}

/// Exponents of the three components; nonnegative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicWeights {
    pub w_pdf: f64,
    pub w_mfs: f64,
    pub w_hdif: f64,
}

impl DynamicWeights {
    pub const EQUAL: DynamicWeights = DynamicWeights { w_pdf: 1.0 / 3.0, w_mfs: 1.0 / 3.0, w_hdif: 1.0 / 3.0 };

    pub fn new(w_pdf: f64, w_mfs: f64, w_hdif: f64) -> Result<Self> {
        let w = Self { w_pdf, w_mfs, w_hdif };
        let all = [w_pdf, w_mfs, w_hdif];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (all.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!("weights {all:?} must be nonnegative and sum to 1")));
        }
        Ok(w)
    }

    pub fn sum(&self) -> f64 {
        self.w_pdf + self.w_mfs + self.w_hdif
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub pdf: f64,
    pub mfs: f64,
    pub hdif: f64,
}

/// Linear coefficients `[a, b, bias]` of the three weight heuristics.
///
/// * PDF: `a * mean(ref) + b * var(ref) + bias`
/// * MFS: `a * std(pyramid variances) + b * mean(pyramid variances) + bias`
/// * HDIF: `a * rms(deepest map) + b * mean(deepest map) + bias`
///
/// The three results are then divided by their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightCoefficients {
    pub pdf: [f64; 3],
    pub mfs: [f64; 3],
    pub hdif: [f64; 3],
}

impl Default for WeightCoefficients {
    fn default() -> Self {
        Self { pdf: [1.0, 1.0, 0.0], mfs: [1.0, 0.0, 0.0], hdif: [1.0, 0.0, 0.0] }
    }
}

impl WeightCoefficients {
    pub fn validate(&self) -> Result<()> {
        if self.pdf.iter().chain(&self.mfs).chain(&self.hdif).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("weight coefficients must be finite".into()));
        }
        Ok(())
    }
}

fn linear([a, b, bias]: [f64; 3], x: f64, y: f64) -> f64 {
    a * x + b * y + bias
}

/// Reference-image statistics the weight heuristics read.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    pub mean: f64,
    pub variance: f64,
    pub pyramid_variances: VarianceVector,
    pub deep_rms: f64,
    pub deep_mean: f64,
}

impl ReferenceStats {
    pub fn from_parts(reference: &GrayImage, pyramid: &GaussianPyramid, features: &FeatureMapSet) -> Self {
        let deepest = features.deepest();
        Self {
            mean: reference.mean(),
            variance: reference.variance(),
            pyramid_variances: variance_vector(pyramid),
            deep_rms: deepest.rms(),
            deep_mean: deepest.mean(),
        }
    }
}

/// Component relevance derived from the reference image, its pyramid and its
/// feature maps.
pub fn weight_scores(
    reference: &GrayImage,
    pyramid: &GaussianPyramid,
    features: &FeatureMapSet,
    coeffs: &WeightCoefficients,
) -> WeightScores {
    scores_from_stats(&ReferenceStats::from_parts(reference, pyramid, features), coeffs)
}

pub fn scores_from_stats(stats: &ReferenceStats, coeffs: &WeightCoefficients) -> WeightScores {
    let variances = stats.pyramid_variances.values();
    let var_mean = variances.iter().sum::<f64>() / variances.len().max(1) as f64;
    let raw = [
        linear(coeffs.pdf, stats.mean, stats.variance),
        linear(coeffs.mfs, stats.pyramid_variances.std_dev(), var_mean),
        linear(coeffs.hdif, stats.deep_rms, stats.deep_mean),
    ];
    let total: f64 = raw.iter().sum::<f64>() + NORMALIZATION_EPS;
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    WeightScores { s_pdf: finite(raw[0] / total), s_mfs: finite(raw[1] / total), s_hdif: finite(raw[2] / total) }
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn softmax_weights(s: &WeightScores) -> DynamicWeights {
    let m = s.s_pdf.max(s.s_mfs).max(s.s_hdif);
    let e = [(s.s_pdf - m).exp(), (s.s_mfs - m).exp(), (s.s_hdif - m).exp()];
    let z = e[0] + e[1] + e[2];
    DynamicWeights { w_pdf: e[0] / z, w_mfs: e[1] / z, w_hdif: e[2] / z }
}

/// `score^w` with `0^w = 0` for `w > 0` and `x^0 = 1`.
fn weighted_power(score: f64, weight: f64) -> f64 {
    if weight == 0.0 {
        1.0
    } else if score <= 0.0 {
        0.0
    } else {
        score.powf(weight)
    }
}

/// Weighted geometric product `pdf^w1 * mfs^w2 * hdif^w3`.
pub fn aggregate(scores: &ComponentScores, w: &DynamicWeights) -> f64 {
    weighted_power(scores.pdf, w.w_pdf) * weighted_power(scores.mfs, w.w_mfs) * weighted_power(scores.hdif, w.w_hdif)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rating {
    Excellent,
    Good,
    Fair,
    Poor,
}

impl Rating {
    pub fn from_score(hirqm: f64) -> Self {
        if hirqm >= 0.90 {
            Rating::Excellent
        } else if hirqm >= 0.75 {
            Rating::Good
        } else if hirqm >= 0.50 {
            Rating::Fair
        } else {
            Rating::Poor
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Parameters echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub patch: usize,
    pub stride: usize,
    pub bins: usize,
    pub levels: usize,
    pub sigma: f64,
    pub backend: String,
    pub ssim_window: usize,
    pub weighting: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub hirqm: f64,
    #[serde(flatten)]
    pub components: ComponentScores,
    #[serde(flatten)]
    pub weights: DynamicWeights,
    pub mse: f64,
    #[serde(with = "psnr_repr")]
    pub psnr: f64,
    pub ssim: f64,
    pub rating: Rating,
    pub config: ReportConfig,
}

impl QualityReport {
    /// Fixed-order `key: value` listing.
    pub fn to_text(&self) -> String {
        let psnr = if self.psnr.is_infinite() { "inf".to_string() } else { format!("{:.4}", self.psnr) };
        let c = &self.config;
        format!(
            "hirqm: {:.6}\npdf: {:.6}\nmfs: {:.6}\nhdif: {:.6}\nw_pdf: {:.6}\nw_mfs: {:.6}\nw_hdif: {:.6}\n\
             mse: {:.6}\npsnr: {psnr}\nssim: {:.6}\nrating: {}\n\
             config: patch={} stride={} bins={} levels={} sigma={} backend={} ssim_window={} weighting={}\n",
            self.hirqm,
            self.components.pdf,
            self.components.mfs,
            self.components.hdif,
            self.weights.w_pdf,
            self.weights.w_mfs,
            self.weights.w_hdif,
            self.mse,
            self.ssim,
            self.rating,
            c.patch,
            c.stride,
            c.bins,
            c.levels,
            c.sigma,
            c.backend,
            c.ssim_window,
            c.weighting,
        )
    }
}

/// PSNR as a JSON number, or the string `"inf"` for identical images.
pub mod psnr_repr {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid psnr value {t:?}"))),
        }
    }
}
