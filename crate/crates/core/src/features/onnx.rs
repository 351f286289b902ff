//! Exported VGG16 trunk executed with tract.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tract_onnx::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureMap, FeatureMapSet, VGG16_LAYERS};
use crate::image::GrayImage;

pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

/// Smallest spatial size for which all five taps are non-empty.
pub const VGG_MIN_SIDE: usize = 32;

const MANIFEST_FILE: &str = "manifest.json";

/// Sidecar written next to the exported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    #[serde(default = "default_layer_ids")]
    pub layer_ids: Vec<usize>,
    #[serde(default = "default_output_names")]
    pub output_names: Vec<String>,
    #[serde(default = "default_mean")]
    pub mean: [f32; 3],
    #[serde(default = "default_std")]
    pub std: [f32; 3],
    /// Hex SHA-256 of the model file, verified on load when present.
    #[serde(default, alias = "checksum")]
    pub sha256: Option<String>,
}

fn default_layer_ids() -> Vec<usize> {
    VGG16_LAYERS.to_vec()
}

fn default_output_names() -> Vec<String> {
    VGG16_LAYERS.iter().map(|l| format!("feat{l}")).collect()
}

fn default_mean() -> [f32; 3] {
    IMAGENET_MEAN
}

fn default_std() -> [f32; 3] {
    IMAGENET_STD
}

impl Default for ModelManifest {
    fn default() -> Self {
        Self {
            layer_ids: default_layer_ids(),
            output_names: default_output_names(),
            mean: IMAGENET_MEAN,
            std: IMAGENET_STD,
            sha256: None,
        }
    }
}

impl ModelManifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelLoad(format!("reading {}: {e}", path.display())))?;
        let manifest: ModelManifest = serde_json::from_str(&text)
            .map_err(|e| Error::ModelLoad(format!("parsing {}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.output_names.is_empty() || self.output_names.len() != self.layer_ids.len() {
            return Err(Error::ModelLoad(format!(
                "manifest lists {} outputs for {} layers",
                self.output_names.len(),
                self.layer_ids.len()
            )));
        }
        if self.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::ModelLoad("normalization std must be positive".into()));
        }
        Ok(())
    }
}

type Plan = Arc<TypedRunnableModel>;

/// Runs an ONNX export with input `1x3xHxW` and one output per tapped layer.
///
/// The gray image is replicated to three channels and standardized with the
/// manifest mean/std before inference. Optimized plans are cached per input
/// size.
pub struct OnnxVggExtractor {
    path: PathBuf,
    model: InferenceModel,
    manifest: ModelManifest,
    plans: Mutex<HashMap<(usize, usize), Plan>>,
}

impl std::fmt::Debug for OnnxVggExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxVggExtractor").field("path", &self.path).field("manifest", &self.manifest).finish()
    }
}

impl OnnxVggExtractor {
    /// Loads `path`, reading `manifest.json` from the same directory when it
    /// exists and falling back to the standard VGG16 taps otherwise.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let sidecar = path.with_file_name(MANIFEST_FILE);
        let manifest = if sidecar.is_file() { ModelManifest::from_file(&sidecar)? } else { ModelManifest::default() };
        Self::with_manifest(path, manifest)
    }

    pub fn with_manifest(path: impl AsRef<Path>, manifest: ModelManifest) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::ModelLoad(format!("model file not found: {}", path.display())));
        }
        manifest.validate()?;
        if let Some(expected) = &manifest.sha256 {
            let bytes = std::fs::read(path).map_err(|e| Error::ModelLoad(e.to_string()))?;
            let actual = hex::encode(Sha256::digest(&bytes));
            if !actual.eq_ignore_ascii_case(expected) {
                return Err(Error::ModelLoad(format!(
                    "checksum mismatch for {}: manifest {expected}, file {actual}",
                    path.display()
                )));
            }
        }
        let mut model = tract_onnx::onnx()
            .model_for_path(path)
            .map_err(|e| Error::ModelLoad(format!("{}: {e}", path.display())))?;
        model
            .select_outputs_by_name(&manifest.output_names)
            .map_err(|e| Error::ModelLoad(format!("{}: {e}", path.display())))?;
        Ok(Self { path: path.to_path_buf(), model, manifest, plans: Mutex::new(HashMap::new()) })
    }

    pub fn manifest(&self) -> &ModelManifest {
        &self.manifest
    }

    fn plan(&self, height: usize, width: usize) -> Result<Plan> {
        let mut plans = self.plans.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(plan) = plans.get(&(height, width)) {
            return Ok(plan.clone());
        }
        let plan = self
            .model
            .clone()
            .with_input_fact(0, f32::fact([1, 3, height, width]).into())
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| Error::ModelLoad(format!("preparing {height}x{width} plan: {e}")))?;
        plans.insert((height, width), plan.clone());
        Ok(plan)
    }

    fn input_tensor(&self, img: &GrayImage) -> Result<Tensor> {
        let plane = img.len();
        let mut data = Vec::with_capacity(3 * plane);
        for ch in 0..3 {
            let (mean, std) = (self.manifest.mean[ch], self.manifest.std[ch]);
            data.extend(img.data().iter().map(|&v| (v - mean) / std));
        }
        Tensor::from_shape(&[1, 3, img.height(), img.width()], &data).map_err(|e| Error::Inference(e.to_string()))
    }
}

impl FeatureExtractor for OnnxVggExtractor {
    fn name(&self) -> &str {
        "vgg16"
    }

    fn layer_ids(&self) -> &[usize] {
        &self.manifest.layer_ids
    }

    fn extract(&self, img: &GrayImage) -> Result<FeatureMapSet> {
        let (height, width) = img.dims();
        if height.min(width) < VGG_MIN_SIDE {
            return Err(Error::InputTooSmall { height, width, min: VGG_MIN_SIDE });
        }
        let plan = self.plan(height, width)?;
        let input = self.input_tensor(img)?;
        let outputs = plan.run(tvec!(input.into())).map_err(|e| Error::Inference(e.to_string()))?;
        if outputs.len() != self.manifest.output_names.len() {
            return Err(Error::Inference(format!(
                "model produced {} outputs, expected {}",
                outputs.len(),
                self.manifest.output_names.len()
            )));
        }
        let mut layers = Vec::with_capacity(outputs.len());
        for (name, out) in self.manifest.output_names.iter().zip(outputs.iter()) {
            let view = out.to_plain_array_view::<f32>().map_err(|e| Error::Inference(format!("{name}: {e}")))?;
            let shape = view.shape();
            if shape.len() != 4 || shape[0] != 1 {
                return Err(Error::Inference(format!("{name}: unexpected output shape {shape:?}")));
            }
            let (c, h, w) = (shape[1], shape[2], shape[3]);
            if h == 0 || w == 0 {
                return Err(Error::InputTooSmall { height, width, min: VGG_MIN_SIDE });
            }
            layers.push(FeatureMap::new(c, h, w, view.iter().copied().collect())?);
        }
        FeatureMapSet::new(self.manifest.layer_ids.clone(), layers)
    }
}
