//! Correlation of metric scores with human opinion scores.
//!
//! A dataset is a list of reference/distorted pairs with a mean opinion
//! score (MOS). Every pair is analyzed once; each [`AblationMode`] then
//! recombines the component scores with its own weights and the resulting
//! columns are correlated against MOS.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::image::{load_gray, pad_to_same_resolution};
use crate::pipeline::{analyze_pair, HirqmConfig, PairAnalysis, WeightingMode};
use crate::weighting::DynamicWeights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosRecord {
    pub reference: PathBuf,
    pub distorted: PathBuf,
    pub mos: f64,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ManifestFormat {
    /// `reference,distorted,mos[,tag]` with a header row.
    #[default]
    Csv,
    /// TID2013 `mos.txt`: `<score> <distorted file>` per line, images under
    /// `distorted_images/` and `reference_images/` next to the file.
    Tid2013,
}

impl FromStr for ManifestFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ManifestFormat::Csv),
            "tid2013" => Ok(ManifestFormat::Tid2013),
            other => Err(Error::InvalidConfig(format!("unknown manifest format {other:?}"))),
        }
    }
}

fn resolve(root: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

/// Parses a manifest and checks that every referenced image exists.
pub fn load_dataset(manifest: impl AsRef<Path>, format: ManifestFormat) -> Result<Vec<MosRecord>> {
    let manifest = manifest.as_ref();
    if !manifest.is_file() {
        return Err(Error::FileNotFound(manifest.to_path_buf()));
    }
    let root = manifest.parent().unwrap_or(Path::new("."));
    let records = match format {
        ManifestFormat::Csv => parse_csv(manifest, root)?,
        ManifestFormat::Tid2013 => parse_tid2013(&fs::read_to_string(manifest)?, root)?,
    };
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let missing: Vec<PathBuf> = records
        .iter()
        .flat_map(|r| [&r.reference, &r.distorted])
        .filter(|p| !p.is_file())
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFile(missing));
    }
    Ok(records)
}

fn parse_mos(text: &str, line: usize) -> Result<f64> {
    let mos: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::ManifestParse { line, message: format!("mos {text:?} is not a number") })?;
    if !mos.is_finite() {
        return Err(Error::ManifestParse { line, message: format!("mos {text:?} is not finite") });
    }
    Ok(mos)
}

fn parse_csv(manifest: &Path, root: &Path) -> Result<Vec<MosRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| Error::ManifestParse { line: 1, message: e.to_string() })?;
    let header = reader.headers().map_err(|e| Error::ManifestParse { line: 1, message: e.to_string() })?.clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names.len() < 3 || names[..3] != ["reference", "distorted", "mos"] || (names.len() > 3 && names[3] != "tag") {
        return Err(Error::ManifestParse {
            line: 1,
            message: format!("expected header reference,distorted,mos[,tag], got {}", names.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::ManifestParse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() < 3 || row.len() > 4 {
            return Err(Error::ManifestParse { line, message: format!("expected 3 or 4 fields, found {}", row.len()) });
        }
        out.push(MosRecord {
            reference: resolve(root, &row[0]),
            distorted: resolve(root, &row[1]),
            mos: parse_mos(&row[2], line)?,
            tag: row.get(3).filter(|t| !t.is_empty()).map(str::to_string),
        });
    }
    Ok(out)
}

/// Splits a TID2013 distorted name such as `i01_01_1.bmp` into the reference
/// number and the `type_level` tag.
fn tid2013_parts(name: &str) -> Option<(&str, String)> {
    let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
    let mut parts = stem.split('_');
    let image = parts.next()?;
    let kind = parts.next()?;
    let level = parts.next()?;
    if parts.next().is_some() || image.len() < 2 || !image[..1].eq_ignore_ascii_case("i") {
        return None;
    }
    let number = &image[1..];
    if !number.chars().all(|c| c.is_ascii_digit()) || kind.is_empty() || level.is_empty() {
        return None;
    }
    Some((number, format!("{kind}_{level}")))
}

fn parse_tid2013(text: &str, root: &Path) -> Result<Vec<MosRecord>> {
    let reference_dir = root.join("reference_images");
    let distorted_dir = root.join("distorted_images");
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let [score, name] = fields[..] else {
            return Err(Error::ManifestParse { line, message: format!("expected `<mos> <file>`, got {raw:?}") });
        };
        let mos = parse_mos(score, line)?;
        let (number, tag) = tid2013_parts(name)
            .ok_or_else(|| Error::ManifestParse { line, message: format!("unrecognized TID2013 file name {name:?}") })?;
        let candidates = [format!("I{number}.BMP"), format!("I{number}.bmp"), format!("i{number}.bmp")];
        let reference = candidates
            .iter()
            .map(|c| reference_dir.join(c))
            .find(|p| p.is_file())
            .unwrap_or_else(|| reference_dir.join(&candidates[0]));
        out.push(MosRecord { reference, distorted: distorted_dir.join(name), mos, tag: Some(tag) });
    }
    Ok(out)
}

fn check_columns(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 samples, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_columns(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("constant sample".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_columns(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Experimental configurations for the component ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    FullDynamic,
    NoPdf,
    NoMfs,
    NoHdif,
    StaticEqual,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] =
        [AblationMode::FullDynamic, AblationMode::NoPdf, AblationMode::NoMfs, AblationMode::NoHdif, AblationMode::StaticEqual];

    pub fn name(&self) -> &'static str {
        match self {
            AblationMode::FullDynamic => "full_dynamic",
            AblationMode::NoPdf => "no_pdf",
            AblationMode::NoMfs => "no_mfs",
            AblationMode::NoHdif => "no_hdif",
            AblationMode::StaticEqual => "static_equal",
        }
    }

    /// Knock-out modes zero one exponent and split the rest equally.
    pub fn weighting(&self) -> WeightingMode {
        let fixed = |w_pdf, w_mfs, w_hdif| WeightingMode::Fixed(DynamicWeights { w_pdf, w_mfs, w_hdif });
        match self {
            AblationMode::FullDynamic => WeightingMode::Dynamic,
            AblationMode::NoPdf => fixed(0.0, 0.5, 0.5),
            AblationMode::NoMfs => fixed(0.5, 0.0, 0.5),
            AblationMode::NoHdif => fixed(0.5, 0.5, 0.0),
            AblationMode::StaticEqual => WeightingMode::Fixed(DynamicWeights::EQUAL),
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "full_dynamic" | "dynamic" => Ok(AblationMode::FullDynamic),
            "no_pdf" => Ok(AblationMode::NoPdf),
            "no_mfs" => Ok(AblationMode::NoMfs),
            "no_hdif" => Ok(AblationMode::NoHdif),
            "static" | "static_equal" => Ok(AblationMode::StaticEqual),
            other => Err(Error::InvalidConfig(format!("unknown ablation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

impl MetricCorrelation {
    fn compute(metric: &[f64], mos: &[f64]) -> Self {
        Self { pearson: pearson(metric, mos).ok(), spearman: spearman(metric, mos).ok() }
    }
}

/// Correlations for one configuration. `pearson`/`spearman` refer to the
/// combined score; `None` marks a column that was constant or too short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub n: usize,
    pub per_metric: BTreeMap<String, MetricCorrelation>,
}

/// One evaluated pair under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub index: usize,
    pub reference: String,
    pub distorted: String,
    pub mos: f64,
    pub tag: String,
    pub pdf: f64,
    pub mfs: f64,
    pub hdif: f64,
    pub w_pdf: f64,
    pub w_mfs: f64,
    pub w_hdif: f64,
    pub hirqm: f64,
    pub mse: f64,
    pub psnr: String,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub index: usize,
    pub reference: PathBuf,
    pub distorted: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub records: usize,
    pub skipped: Vec<SkippedPair>,
    pub configs: BTreeMap<String, CorrelationResult>,
    #[serde(skip)]
    pub rows: BTreeMap<String, Vec<PairRow>>,
}

impl EvaluationSummary {
    /// Writes `<config>.csv` per configuration and `summary.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, rows) in &self.rows {
            let path = dir.join(format!("{name}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.into()))?;
            if rows.is_empty() {
                w.write_record([
                    "index", "reference", "distorted", "mos", "tag", "pdf", "mfs", "hdif", "w_pdf", "w_mfs", "w_hdif",
                    "hirqm", "mse", "psnr", "ssim",
                ])
                .map_err(|e| Error::Io(e.into()))?;
            }
            for row in rows {
                w.serialize(row).map_err(|e| Error::Io(e.into()))?;
            }
            w.flush()?;
            written.push(path);
        }
        let summary = dir.join("summary.json");
        let json = serde_json::json!({
            "records": self.records,
            "skipped": self.skipped.len(),
            "failures": self.skipped,
            "configs": self.configs,
        });
        fs::write(&summary, serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.into()))?)?;
        written.push(summary);
        Ok(written)
    }
}

fn analyze_record(record: &MosRecord, cfg: &HirqmConfig, extractor: &dyn FeatureExtractor) -> Result<PairAnalysis> {
    let reference = load_gray(&record.reference)?;
    let distorted = load_gray(&record.distorted)?;
    analyze_pair(&pad_to_same_resolution(&reference, &distorted), cfg, extractor)
}

/// Scores every record once and correlates each configuration's columns
/// with MOS. Pairs that fail are skipped and listed in the summary.
pub fn run_evaluation(
    records: &[MosRecord],
    modes: &[AblationMode],
    extractor: &dyn FeatureExtractor,
    cfg: &HirqmConfig,
) -> Result<EvaluationSummary> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    if records.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 records, got {}", records.len())));
    }
    if modes.is_empty() {
        return Err(Error::InvalidConfig("no evaluation configurations given".into()));
    }
    cfg.validate()?;

    let analyses: Vec<Result<PairAnalysis>> =
        records.par_iter().map(|record| analyze_record(record, cfg, extractor)).collect();

    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (index, (record, analysis)) in records.iter().zip(analyses).enumerate() {
        match analysis {
            Ok(a) => ok.push((index, record, a)),
            Err(e) => skipped.push(SkippedPair {
                index,
                reference: record.reference.clone(),
                distorted: record.distorted.clone(),
                error: e.to_string(),
            }),
        }
    }

    let mos: Vec<f64> = ok.iter().map(|(_, r, _)| r.mos).collect();
    let mse: Vec<f64> = ok.iter().map(|(_, _, a)| a.mse).collect();
    let ssim: Vec<f64> = ok.iter().map(|(_, _, a)| a.ssim).collect();

    let mut configs = BTreeMap::new();
    let mut rows = BTreeMap::new();
    for mode in modes {
        let weighting = mode.weighting();
        let mode_rows: Vec<PairRow> = ok
            .iter()
            .map(|(index, record, a)| {
                let w = a.weights_for(&weighting);
                PairRow {
                    index: *index,
                    reference: record.reference.display().to_string(),
                    distorted: record.distorted.display().to_string(),
                    mos: record.mos,
                    tag: record.tag.clone().unwrap_or_default(),
                    pdf: a.components.pdf,
                    mfs: a.components.mfs,
                    hdif: a.components.hdif,
                    w_pdf: w.w_pdf,
                    w_mfs: w.w_mfs,
                    w_hdif: w.w_hdif,
                    hirqm: a.hirqm(&weighting),
                    mse: a.mse,
                    psnr: if a.psnr.is_infinite() { "inf".into() } else { a.psnr.to_string() },
                    ssim: a.ssim,
                }
            })
            .collect();
        let hirqm: Vec<f64> = mode_rows.iter().map(|r| r.hirqm).collect();
        let combined = MetricCorrelation::compute(&hirqm, &mos);
        let per_metric = BTreeMap::from([
            ("hirqm".to_string(), combined),
            ("mse".to_string(), MetricCorrelation::compute(&mse, &mos)),
            ("ssim".to_string(), MetricCorrelation::compute(&ssim, &mos)),
        ]);
        configs.insert(
            mode.name().to_string(),
            CorrelationResult { pearson: combined.pearson, spearman: combined.spearman, n: mode_rows.len(), per_metric },
        );
        rows.insert(mode.name().to_string(), mode_rows);
    }

    Ok(EvaluationSummary { records: records.len(), skipped, configs, rows })
}
