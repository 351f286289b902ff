//! Straight-line reimplementations with explicit loops and f64 throughout.

use hirqm::{FeatureMapSet, GrayImage};

fn to_grid(img: &GrayImage) -> Vec<Vec<f64>> {
    (0..img.height()).map(|r| (0..img.width()).map(|c| img.get(r, c) as f64).collect()).collect()
}

/// Offsets 0, s, 2s, ... (< extent), clamped so the patch ends on the edge,
/// duplicates dropped.
fn offsets(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let p = patch.min(extent);
    let mut out: Vec<usize> = Vec::new();
    let mut o = 0;
    while o < extent {
        let clamped = if o + p > extent { extent - p } else { o };
        if !out.contains(&clamped) {
            out.push(clamped);
        }
        o += stride;
    }
    out
}

fn histogram(grid: &[Vec<f64>], r0: usize, c0: usize, ph: usize, pw: usize, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0f64; bins];
    for row in grid.iter().skip(r0).take(ph) {
        for &v in row.iter().skip(c0).take(pw) {
            let mut b = (v * bins as f64).floor() as usize;
            if b >= bins {
                b = bins - 1;
            }
            counts[b] += 1.0;
        }
    }
    let n = (ph * pw) as f64;
    let mut p: Vec<f64> = counts.iter().map(|c| c / n + 1e-10).collect();
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
    p
}

pub fn pdf_score(reference: &GrayImage, distorted: &GrayImage, patch: usize, stride: usize, bins: usize) -> f64 {
    let a = to_grid(reference);
    let b = to_grid(distorted);
    let (h, w) = reference.dims();
    let (ph, pw) = (patch.min(h), patch.min(w));
    let mut total = 0.0;
    let mut n = 0usize;
    for &r0 in &offsets(h, patch, stride) {
        for &c0 in &offsets(w, patch, stride) {
            let p = histogram(&a, r0, c0, ph, pw, bins);
            let q = histogram(&b, r0, c0, ph, pw, bins);
            let mut kl = 0.0;
            for i in 0..bins {
                kl += p[i] * (p[i] / q[i]).ln();
            }
            total += kl;
            n += 1;
        }
    }
    (-(total / n as f64)).exp()
}

pub fn feature_mse(a: &FeatureMapSet, b: &FeatureMapSet) -> Vec<f64> {
    let mut out = Vec::new();
    for (fa, fb) in a.layers().iter().zip(b.layers()) {
        let (c, h, w) = fa.shape();
        let mut s = 0.0;
        for k in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let d = fa.get(k, i, j) as f64 - fb.get(k, i, j) as f64;
                    s += d * d;
                }
            }
        }
        out.push(s / (c * h * w) as f64);
    }
    out
}

/// Uniform-window SSIM at every valid position, sample covariances.
pub fn ssim(x: &GrayImage, y: &GrayImage, win: usize, k1: f64, k2: f64) -> f64 {
    let a = to_grid(x);
    let b = to_grid(y);
    let (h, w) = x.dims();
    let c1 = (k1 * 1.0f64).powi(2);
    let c2 = (k2 * 1.0f64).powi(2);
    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0.0;
    for r in 0..=h - win {
        for c in 0..=w - win {
            let mut mx = 0.0;
            let mut my = 0.0;
            for i in r..r + win {
                for j in c..c + win {
                    mx += a[i][j];
                    my += b[i][j];
                }
            }
            mx /= n;
            my /= n;
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in r..r + win {
                for j in c..c + win {
                    vx += (a[i][j] - mx).powi(2);
                    vy += (b[i][j] - my).powi(2);
                    cxy += (a[i][j] - mx) * (b[i][j] - my);
                }
            }
            vx /= n - 1.0;
            vy /= n - 1.0;
            cxy /= n - 1.0;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1.0;
        }
    }
    total / count
}

/// Raw-moment Pearson formula.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Quadratic-time average ranks.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&u| u < v).count() as f64;
            let ties = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + below + (ties - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Direct 2D convolution with the outer-product Gaussian kernel (radius
/// ceil(3 sigma), replicated borders), then even-index subsampling.
pub fn blur_and_decimate(img: &GrayImage, sigma: f64) -> Vec<Vec<f64>> {
    let g = to_grid(img);
    let (h, w) = img.dims();
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k1 = Vec::new();
    for t in -radius..=radius {
        k1.push((-(t * t) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let s: f64 = k1.iter().sum();
    let k1: Vec<f64> = k1.iter().map(|v| v / s).collect();
    let mut blurred = vec![vec![0.0; w]; h];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let mut acc = 0.0;
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let rr = (r + dr).clamp(0, h as i64 - 1) as usize;
                    let cc = (c + dc).clamp(0, w as i64 - 1) as usize;
                    acc += k1[(dr + radius) as usize] * k1[(dc + radius) as usize] * g[rr][cc];
                }
            }
            blurred[r as usize][c as usize] = acc;
        }
    }
    blurred.iter().step_by(2).map(|row| row.iter().step_by(2).copied().collect()).collect()
}

pub fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
}

const TOY_KERNELS: [[[f64; 3]; 3]; 4] = [
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
    [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]],
    [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]],
    [[1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0], [2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0], [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0]],
];

fn conv3(g: &[Vec<f64>], k: &[[f64; 3]; 3]) -> Vec<Vec<f64>> {
    let h = g.len() as i64;
    let w = g[0].len() as i64;
    let mut out = vec![vec![0.0; w as usize]; h as usize];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, krow) in k.iter().enumerate() {
                for (j, &kv) in krow.iter().enumerate() {
                    let rr = (r + i as i64 - 1).clamp(0, h - 1) as usize;
                    let cc = (c + j as i64 - 1).clamp(0, w - 1) as usize;
                    acc += kv * g[rr][cc];
                }
            }
            out[r as usize][c as usize] = acc;
        }
    }
    out
}

fn pool2(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h = g.len();
    let w = g[0].len();
    let mut out = Vec::new();
    for r in (0..h).step_by(2) {
        let mut row = Vec::new();
        for c in (0..w).step_by(2) {
            let mut s = 0.0;
            let mut n = 0.0;
            for rr in r..(r + 2).min(h) {
                for cc in c..(c + 2).min(w) {
                    s += g[rr][cc];
                    n += 1.0;
                }
            }
            row.push(s / n);
        }
        out.push(row);
    }
    out
}

/// The toy bank evaluated layer by layer: `[layer][channel][row][col]`.
pub fn toy_features(img: &GrayImage) -> Vec<Vec<Vec<Vec<f64>>>> {
    let mut plane: Vec<Vec<f64>> = to_grid(img).into_iter().map(|r| r.into_iter().map(|v| v - 0.5).collect()).collect();
    let mut layers = Vec::new();
    for depth in 0..5 {
        if depth > 0 {
            let prev: &Vec<Vec<Vec<f64>>> = layers.last().unwrap();
            plane = pool2(&prev[3]);
        }
        layers.push(TOY_KERNELS.iter().map(|k| conv3(&plane, k)).collect::<Vec<_>>());
    }
    layers
}

pub fn toy_hdif(a: &GrayImage, b: &GrayImage) -> f64 {
    let fa = toy_features(a);
    let fb = toy_features(b);
    let mut total = 0.0;
    for (la, lb) in fa.iter().zip(&fb) {
        let mut s = 0.0;
        let mut n = 0.0;
        for (ca, cb) in la.iter().zip(lb) {
            for (ra, rb) in ca.iter().zip(cb) {
                for (va, vb) in ra.iter().zip(rb) {
                    s += (va - vb) * (va - vb);
                    n += 1.0;
                }
            }
        }
        total += s / n;
    }
    1.0 / (1.0 + total / fa.len() as f64)
}
