//! MSE, PSNR and single-scale SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImagePair;

/// SSIM with a uniform square window evaluated at every position where the
/// window fits inside the image. Local variances use the sample (n - 1)
/// normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimConfig {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: 7, k1: 0.01, k2: 0.03, dynamic_range: 1.0 }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidConfig(format!("SSIM window must be odd and >= 3, got {}", self.window)));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::InvalidConfig("SSIM constants must be positive".into()));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

pub fn mse(pair: &ImagePair) -> f64 {
    let a = pair.reference().data();
    let b = pair.distorted().data();
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

/// PSNR in dB for unit peak; infinite for identical images.
pub fn psnr(pair: &ImagePair) -> f64 {
    psnr_from_mse(mse(pair))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Summed-area table with a zero guard row and column.
struct Integral {
    width: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(height: usize, width: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; (height + 1) * stride];
        for r in 0..height {
            let mut row_acc = 0.0;
            for c in 0..width {
                row_acc += value(r * width + c);
                sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + row_acc;
            }
        }
        Self { width: stride, sums }
    }

    fn window(&self, row: usize, col: usize, size: usize) -> f64 {
        let s = self.width;
        let (r1, c1) = (row + size, col + size);
        self.sums[r1 * s + c1] - self.sums[row * s + c1] - self.sums[r1 * s + col] + self.sums[row * s + col]
    }
}

pub fn ssim(pair: &ImagePair, cfg: &SsimConfig) -> Result<f64> {
    cfg.validate()?;
    let (h, w) = pair.dims();
    let win = cfg.window;
    if h.min(w) < win {
        return Err(Error::ImageTooSmall { height: h, width: w, min: win });
    }
    let x = pair.reference().data();
    let y = pair.distorted().data();
    let sx = Integral::new(h, w, |i| x[i] as f64);
    let sy = Integral::new(h, w, |i| y[i] as f64);
    let sxx = Integral::new(h, w, |i| (x[i] as f64).powi(2));
    let syy = Integral::new(h, w, |i| (y[i] as f64).powi(2));
    let sxy = Integral::new(h, w, |i| x[i] as f64 * y[i] as f64);

    let n = (win * win) as f64;
    let cov_norm = n / (n - 1.0);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..=h - win {
        for c in 0..=w - win {
            let mx = sx.window(r, c, win) / n;
            let my = sy.window(r, c, win) / n;
            let vx = cov_norm * (sxx.window(r, c, win) / n - mx * mx);
            let vy = cov_norm * (syy.window(r, c, win) / n - my * my);
            let vxy = cov_norm * (sxy.window(r, c, win) / n - mx * my);
            let num = (2.0 * mx * my + c1) * (2.0 * vxy + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
