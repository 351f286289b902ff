use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hirqm::{
    compare_images, load_dataset, run_evaluation, AblationMode, DynamicWeights, FeatureExtractor, HirqmConfig,
    ManifestFormat, ToyExtractor, WeightingMode,
};

#[derive(Parser)]
#[command(name = "hirqm", version, about = "Full-reference image quality scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one distorted image against its reference.
    Compare(CompareArgs),
    /// Score a MOS-annotated dataset and correlate every configuration with MOS.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct CompareArgs {
    reference: PathBuf,
    distorted: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    /// Use these exponents (pdf,mfs,hdif) instead of the dynamic weights.
    #[arg(long, value_delimiter = ',')]
    fixed_weights: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,
}

#[derive(Args)]
struct EvaluateArgs {
    /// CSV with reference,distorted,mos[,tag] columns, or a TID2013 mos.txt.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = DatasetFormat::Csv)]
    format: DatasetFormat,
    /// Comma-separated configurations, or `all`.
    #[arg(long, default_value = "full_dynamic", value_delimiter = ',')]
    ablation: Vec<String>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
}

#[derive(Args)]
struct MetricArgs {
    /// TOML file with any subset of the metric settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    ssim_window: Option<usize>,
    /// Feature backend. Defaults to vgg16 when a model is given, toy otherwise.
    #[arg(long, value_enum)]
    features: Option<Backend>,
    /// ONNX feature model; reads manifest.json from the same directory if present.
    #[arg(long, env = "HIRQM_MODEL")]
    model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Toy,
    Vgg16,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetFormat {
    Csv,
    Tid2013,
}

impl From<DatasetFormat> for ManifestFormat {
    fn from(f: DatasetFormat) -> Self {
        match f {
            DatasetFormat::Csv => ManifestFormat::Csv,
            DatasetFormat::Tid2013 => ManifestFormat::Tid2013,
        }
    }
}

/// Marks failures caused by bad user input rather than a fault in the tool.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl MetricArgs {
    fn config(&self) -> anyhow::Result<HirqmConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => HirqmConfig::default(),
        };
        if let Some(v) = self.patch_size {
            cfg.pdf.patch_size = v;
        }
        if let Some(v) = self.stride {
            cfg.pdf.stride = v;
        }
        if let Some(v) = self.bins {
            cfg.pdf.bins = v;
        }
        if let Some(v) = self.levels {
            cfg.mfs.levels = v;
        }
        if let Some(v) = self.sigma {
            cfg.mfs.sigma = v;
        }
        if let Some(v) = self.ssim_window {
            cfg.ssim.window = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn extractor(&self) -> anyhow::Result<Box<dyn FeatureExtractor>> {
        let backend = self.features.unwrap_or(if self.model.is_some() { Backend::Vgg16 } else { Backend::Toy });
        match backend {
            Backend::Toy => Ok(Box::new(ToyExtractor::new())),
            Backend::Vgg16 => {
                let Some(model) = &self.model else {
                    return Err(usage("the vgg16 backend needs --model or HIRQM_MODEL"));
                };
                load_vgg(model)
            }
        }
    }
}

#[cfg(feature = "onnx")]
fn load_vgg(model: &Path) -> anyhow::Result<Box<dyn FeatureExtractor>> {
    Ok(Box::new(hirqm::OnnxVggExtractor::from_path(model)?))
}

#[cfg(not(feature = "onnx"))]
fn load_vgg(_model: &Path) -> anyhow::Result<Box<dyn FeatureExtractor>> {
    Err(usage("this build has no ONNX support; rebuild with the `onnx` feature"))
}

fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let mut cfg = args.metric.config()?;
    if let Some(w) = &args.fixed_weights {
        if w.len() != 3 {
            bail!(usage(format!("--fixed-weights takes 3 values (pdf,mfs,hdif), got {}", w.len())));
        }
        cfg.weighting = WeightingMode::Fixed(DynamicWeights::new(w[0], w[1], w[2])?);
    }
    let extractor = args.metric.extractor()?;
    let report = compare_images(&args.reference, &args.distorted, &cfg, extractor.as_ref())?;
    match args.output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        OutputFormat::Text => print!("{}", report.to_text()),
    }
    Ok(())
}

fn parse_modes(names: &[String]) -> anyhow::Result<Vec<AblationMode>> {
    let mut modes = Vec::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if name == "all" {
            return Ok(AblationMode::ALL.to_vec());
        }
        let mode: AblationMode = name.parse()?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        bail!(usage("no ablation configurations given"));
    }
    Ok(modes)
}

fn fmt_corr(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let cfg = args.metric.config()?;
    let modes = parse_modes(&args.ablation)?;
    let extractor = args.metric.extractor()?;
    let records = load_dataset(&args.manifest, args.format.into())?;
    let summary = run_evaluation(&records, &modes, extractor.as_ref(), &cfg)?;
    let written = summary.write(&args.out_dir).with_context(|| format!("writing {}", args.out_dir.display()))?;

    for s in &summary.skipped {
        eprintln!("skipped pair {}: {}", s.index, s.error);
    }
    match args.output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        OutputFormat::Text => {
            println!("records: {}  scored: {}", summary.records, summary.records - summary.skipped.len());
            println!("{:<14} {:>8} {:>8} {:>6}", "config", "pearson", "spearman", "n");
            for (name, c) in &summary.configs {
                println!("{name:<14} {:>8} {:>8} {:>6}", fmt_corr(c.pearson), fmt_corr(c.spearman), c.n);
            }
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.chain().find_map(|e| e.downcast_ref::<hirqm::Error>()) {
        Some(e) if e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compare(args) => compare(args),
        Command::Evaluate(args) => evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
