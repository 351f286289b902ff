//! Deep feature similarity: `1 / (1 + mean_l MSE(F_l^ref, F_l^dist))`.

use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureMapSet};
use crate::image::ImagePair;

/// Per-layer mean squared difference, normalized by `C * H * W`.
pub fn feature_mse(a: &FeatureMapSet, b: &FeatureMapSet) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} layers vs {} layers", a.len(), b.len())));
    }
    a.layers()
        .iter()
        .zip(b.layers())
        .enumerate()
        .map(|(i, (fa, fb))| {
            if fa.shape() != fb.shape() {
                return Err(Error::ShapeMismatch(format!("layer {i}: {:?} vs {:?}", fa.shape(), fb.shape())));
            }
            let sq: f64 = fa
                .data()
                .iter()
                .zip(fb.data())
                .map(|(&x, &y)| {
                    let d = x as f64 - y as f64;
                    d * d
                })
                .sum();
            Ok(sq / fa.len() as f64)
        })
        .collect()
}

pub fn hdif_from_features(reference: &FeatureMapSet, distorted: &FeatureMapSet) -> Result<f64> {
    let per_layer = feature_mse(reference, distorted)?;
    let mean = per_layer.iter().sum::<f64>() / per_layer.len() as f64;
    Ok(1.0 / (1.0 + mean))
}

pub fn hdif_score(pair: &ImagePair, extractor: &dyn FeatureExtractor) -> Result<f64> {
    let reference = extractor.extract(pair.reference())?;
    let distorted = extractor.extract(pair.distorted())?;
    hdif_from_features(&reference, &distorted)
}
