use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hirqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hirqm"))
        .args(args)
        .env_remove("HIRQM_MODEL")
        .output()
        .expect("binary runs")
}

fn write_png(dir: &Path, name: &str, f: impl Fn(u32, u32) -> u8) -> PathBuf {
    let img = image::GrayImage::from_fn(64, 64, |x, y| image::Luma([f(x, y)]));
    let path = dir.join(name);
    img.save(&path).unwrap();
    path
}

fn texture(x: u32, y: u32) -> u8 {
    (128.0 + 60.0 * ((x as f32) * 0.3).sin() * ((y as f32) * 0.2).cos() + ((x * 7 + y * 13) % 17) as f32) as u8
}

fn noisy(level: u32) -> impl Fn(u32, u32) -> u8 {
    move |x, y| {
        let n = ((x * 31 + y * 17 + x * y) % 23) as i32 - 11;
        (texture(x, y) as i32 + n * level as i32).clamp(0, 255) as u8
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compare_identical_json() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    let out = hirqm(&["compare", s(&a), s(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["hirqm"].as_f64().unwrap(), 1.0);
    assert_eq!(v["rating"], "Excellent");
    assert_eq!(v["psnr"], "inf");
    assert_eq!(v["config"]["backend"], "toy");
    for key in ["pdf", "mfs", "hdif", "w_pdf", "w_mfs", "w_hdif", "mse", "ssim"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn compare_text_output_and_flags() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    let b = write_png(dir.path(), "b.png", noisy(2));
    let out = hirqm(&["compare", s(&a), s(&b), "--output", "text", "--patch-size", "16", "--stride", "8", "--bins", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("hirqm: "), "{text}");
    assert!(text.contains("patch=16"));
    assert!(text.contains("bins=64"));
}

#[test]
fn compare_fixed_weights() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    let b = write_png(dir.path(), "b.png", noisy(3));
    let out = hirqm(&["compare", s(&a), s(&b), "--fixed-weights", "0.2,0.3,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["w_pdf"].as_f64().unwrap(), 0.2);
    assert_eq!(v["config"]["weighting"], "fixed");

    let out = hirqm(&["compare", s(&a), s(&b), "--fixed-weights", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hirqm(&["compare", s(&a), s(&b), "--fixed-weights", "0.5,0.6,0.7"]);
    assert_eq!(out.status.code(), Some(2), "weights must sum to 1");
}

#[test]
fn config_file_is_applied_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    let cfg = dir.path().join("hirqm.toml");
    fs::write(&cfg, "[pdf]\npatch_size = 8\nbins = 32\n\n[mfs]\nlevels = 3\n").unwrap();
    let out = hirqm(&["compare", s(&a), s(&a), "--config", s(&cfg), "--bins", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["patch"], 8);
    assert_eq!(v["config"]["bins"], 16);
    assert_eq!(v["config"]["levels"], 3);
    assert_eq!(v["config"]["stride"], 32);
}

#[test]
fn missing_file_is_input_error() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    let missing = dir.path().join("nope.png");
    let out = hirqm(&["compare", s(&a), s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nope.png"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_parameters_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let a = write_png(dir.path(), "a.png", texture);
    for bad in [["--patch-size", "0"], ["--levels", "1"], ["--sigma", "-1"], ["--ssim-window", "4"]] {
        let out = hirqm(&["compare", s(&a), s(&a), bad[0], bad[1]]);
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
    let out = hirqm(&["compare", s(&a)]);
    assert_eq!(out.status.code(), Some(2));
    let out = hirqm(&["compare", s(&a), s(&a), "--features", "vgg16"]);
    assert_eq!(out.status.code(), Some(2));
}

fn dataset(dir: &Path, n: u32) -> PathBuf {
    let reference = write_png(dir, "ref.png", texture);
    let mut csv = String::from("reference,distorted,mos,tag\n");
    for i in 0..n {
        let name = format!("d{i}.png");
        write_png(dir, &name, noisy(i));
        csv.push_str(&format!("{},{name},{},noise_{i}\n", reference.file_name().unwrap().to_str().unwrap(), 9 - i));
    }
    let manifest = dir.join("manifest.csv");
    fs::write(&manifest, csv).unwrap();
    manifest
}

#[test]
fn evaluate_single_config() {
    let dir = TempDir::new().unwrap();
    let manifest = dataset(dir.path(), 5);
    let out_dir = dir.path().join("results");
    let out = hirqm(&["evaluate", "--manifest", s(&manifest), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["configs"].as_object().unwrap().len(), 1);
    assert_eq!(summary["records"], 5);
    let rows = fs::read_to_string(out_dir.join("full_dynamic.csv")).unwrap();
    assert_eq!(rows.lines().count(), 6);
    let spearman = summary["configs"]["full_dynamic"]["spearman"].as_f64().unwrap();
    assert!(spearman > 0.8, "{spearman}");
}

#[test]
fn evaluate_all_configs() {
    let dir = TempDir::new().unwrap();
    let manifest = dataset(dir.path(), 4);
    let out_dir = dir.path().join("out");
    let out = hirqm(&["evaluate", "--manifest", s(&manifest), "--ablation", "all", "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for mode in ["full_dynamic", "no_pdf", "no_mfs", "no_hdif", "static_equal"] {
        assert!(out_dir.join(format!("{mode}.csv")).exists(), "{mode}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("static_equal"));
}

#[test]
fn evaluate_empty_manifest() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("m.csv");
    fs::write(&manifest, "reference,distorted,mos\n").unwrap();
    let out = hirqm(&["evaluate", "--manifest", s(&manifest), "--out-dir", s(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no records"));
}

#[test]
fn evaluate_unknown_ablation() {
    let dir = TempDir::new().unwrap();
    let manifest = dataset(dir.path(), 2);
    let out = hirqm(&["evaluate", "--manifest", s(&manifest), "--ablation", "no_such_mode"]);
    assert_eq!(out.status.code(), Some(2));
}
