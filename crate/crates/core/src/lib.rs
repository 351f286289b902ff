//! Full-reference image quality assessment.
//!
//! The score combines three similarity components computed on grayscale
//! images normalized to `[0, 1]`:
//!
//! * [`pdf`]: per-patch intensity histograms compared with the
//!   Kullback-Leibler divergence,
//! * [`mfs`]: Pearson correlation of log-variances across a Gaussian pyramid,
//! * [`hdif`]: mean squared differences of hierarchical convolutional
//!   feature maps produced by a [`FeatureExtractor`].
//!
//! Component exponents come from a softmax over properties of the reference
//! image ([`weighting`]); the final score is their weighted geometric
//! product. [`compare_images`] runs the whole pipeline and returns a
//! [`QualityReport`] that also carries MSE, PSNR and SSIM baselines.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod features;
pub mod hdif;
pub mod image;
pub mod mfs;
pub mod pdf;
pub mod pipeline;
pub mod weighting;

pub use crate::baselines::{mse, psnr, psnr_from_mse, ssim, SsimConfig};
pub use crate::error::{Error, Result, Stage};
pub use crate::eval::{
    load_dataset, pearson, run_evaluation, spearman, AblationMode, CorrelationResult,
    EvaluationSummary, ManifestFormat, MosRecord,
};
pub use crate::features::{FeatureExtractor, FeatureMap, FeatureMapSet, ToyExtractor};
#[cfg(feature = "onnx")]
pub use crate::features::OnnxVggExtractor;
pub use crate::hdif::{feature_mse, hdif_from_features, hdif_score};
pub use crate::image::{load_gray, pad_to_same_resolution, GrayImage, ImagePair};
pub use crate::mfs::{build_pyramid, mfs_from_variances, mfs_score, GaussianPyramid, MfsConfig, VarianceVector};
pub use crate::pdf::{build_patch_grid, kl_divergence, patch_histogram, pdf_score, PatchGrid, PatchHistogram, PdfConfig};
pub use crate::pipeline::{analyze_pair, compare_gray, compare_images, HirqmConfig, PairAnalysis, WeightingMode};
pub use crate::weighting::{
    aggregate, scores_from_stats, softmax_weights, weight_scores, ComponentScores, DynamicWeights, QualityReport,
    Rating, ReferenceStats, ReportConfig, WeightCoefficients, WeightScores,
};
