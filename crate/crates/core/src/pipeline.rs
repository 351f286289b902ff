//! End-to-end comparison of a reference and a distorted image.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{mse, psnr_from_mse, ssim, SsimConfig};
use crate::error::{Error, Result, Stage};
use crate::features::FeatureExtractor;
use crate::hdif::hdif_from_features;
use crate::image::{load_gray, pad_to_same_resolution, GrayImage, ImagePair};
use crate::mfs::{build_pyramid, mfs_from_variances, variance_vector, MfsConfig};
use crate::pdf::{pdf_score, PdfConfig};
use crate::weighting::{
    aggregate, softmax_weights, weight_scores, ComponentScores, DynamicWeights, QualityReport, Rating, ReportConfig,
    WeightCoefficients,
};

/// How the component exponents are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Softmax over reference-image statistics.
    #[default]
    Dynamic,
    /// Caller-supplied exponents; the reference statistics are ignored.
    Fixed(DynamicWeights),
}

impl WeightingMode {
    pub fn label(&self) -> &'static str {
        match self {
            WeightingMode::Dynamic => "dynamic",
            WeightingMode::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HirqmConfig {
    pub pdf: PdfConfig,
    pub mfs: MfsConfig,
    pub ssim: SsimConfig,
    pub weights: WeightCoefficients,
    pub weighting: WeightingMode,
}

impl HirqmConfig {
    pub fn validate(&self) -> Result<()> {
        self.pdf.validate()?;
        self.mfs.validate()?;
        self.ssim.validate()?;
        self.weights.validate()?;
        if let WeightingMode::Fixed(w) = self.weighting {
            DynamicWeights::new(w.w_pdf, w.w_mfs, w.w_hdif)?;
        }
        Ok(())
    }

    pub fn report_config(&self, backend: &str) -> ReportConfig {
        ReportConfig {
            patch: self.pdf.patch_size,
            stride: self.pdf.stride,
            bins: self.pdf.bins,
            levels: self.mfs.levels,
            sigma: self.mfs.sigma,
            backend: backend.to_string(),
            ssim_window: self.ssim.window,
            weighting: self.weighting.label().to_string(),
        }
    }
}

/// Everything computed for one aligned pair, independent of the weighting
/// mode used to combine it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAnalysis {
    pub components: ComponentScores,
    pub dynamic_weights: DynamicWeights,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

impl PairAnalysis {
    pub fn weights_for(&self, mode: &WeightingMode) -> DynamicWeights {
        match mode {
            WeightingMode::Dynamic => self.dynamic_weights,
            WeightingMode::Fixed(w) => *w,
        }
    }

    pub fn hirqm(&self, mode: &WeightingMode) -> f64 {
        aggregate(&self.components, &self.weights_for(mode))
    }

    pub fn report(&self, cfg: &HirqmConfig, backend: &str) -> QualityReport {
        let weights = self.weights_for(&cfg.weighting);
        let hirqm = aggregate(&self.components, &weights);
        QualityReport {
            hirqm,
            components: self.components,
            weights,
            mse: self.mse,
            psnr: self.psnr,
            ssim: self.ssim,
            rating: Rating::from_score(hirqm),
            config: cfg.report_config(backend),
        }
    }
}

pub fn analyze_pair(pair: &ImagePair, cfg: &HirqmConfig, extractor: &dyn FeatureExtractor) -> Result<PairAnalysis> {
    cfg.validate()?;
    let pdf = pdf_score(pair, &cfg.pdf).map_err(Error::at(Stage::Pdf))?;

    let (ref_pyr, dist_pyr) = rayon::join(
        || build_pyramid(pair.reference(), cfg.mfs.levels, cfg.mfs.sigma),
        || build_pyramid(pair.distorted(), cfg.mfs.levels, cfg.mfs.sigma),
    );
    let ref_pyr = ref_pyr.map_err(Error::at(Stage::Mfs))?;
    let dist_pyr = dist_pyr.map_err(Error::at(Stage::Mfs))?;
    let mfs = mfs_from_variances(&variance_vector(&ref_pyr), &variance_vector(&dist_pyr)).map_err(Error::at(Stage::Mfs))?;

    let ref_feats = extractor.extract(pair.reference()).map_err(Error::at(Stage::Hdif))?;
    let dist_feats = extractor.extract(pair.distorted()).map_err(Error::at(Stage::Hdif))?;
    let hdif = hdif_from_features(&ref_feats, &dist_feats).map_err(Error::at(Stage::Hdif))?;

    let scores = weight_scores(pair.reference(), &ref_pyr, &ref_feats, &cfg.weights);
    let dynamic_weights = softmax_weights(&scores);

    let mse = mse(pair);
    let ssim = ssim(pair, &cfg.ssim).map_err(Error::at(Stage::Ssim))?;
    Ok(PairAnalysis { components: ComponentScores { pdf, mfs, hdif }, dynamic_weights, mse, psnr: psnr_from_mse(mse), ssim })
}

/// Aligns two in-memory images and produces the full report.
pub fn compare_gray(
    reference: &GrayImage,
    distorted: &GrayImage,
    cfg: &HirqmConfig,
    extractor: &dyn FeatureExtractor,
) -> Result<QualityReport> {
    let pair = pad_to_same_resolution(reference, distorted);
    Ok(analyze_pair(&pair, cfg, extractor)?.report(cfg, extractor.name()))
}

pub fn compare_images(
    reference: impl AsRef<Path>,
    distorted: impl AsRef<Path>,
    cfg: &HirqmConfig,
    extractor: &dyn FeatureExtractor,
) -> Result<QualityReport> {
    cfg.validate()?;
    let reference = load_gray(reference).map_err(Error::at(Stage::LoadReference))?;
    let distorted = load_gray(distorted).map_err(Error::at(Stage::LoadDistorted))?;
    compare_gray(&reference, &distorted, cfg, extractor)
}
