//! Brute-force reference implementations and random inputs shared by the integration
//! tests. Each oracle recomputes its quantity directly from the definition.

#![allow(dead_code)]

use docbin::{GrayImage, LabelImage};
use rand::Rng;

pub fn random_image<R: Rng>(rng: &mut R, max_side: usize) -> GrayImage {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let data = (0..w * h).map(|_| rng.random()).collect();
    GrayImage::new(w, h, data).unwrap()
}

/// Random image whose pixels only take a few levels, so ties are common.
pub fn random_few_level_image<R: Rng>(rng: &mut R, max_side: usize) -> GrayImage {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let levels: Vec<u8> = (0..rng.random_range(1..=5)).map(|_| rng.random()).collect();
    let data = (0..w * h).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    GrayImage::new(w, h, data).unwrap()
}

pub fn random_labels<R: Rng>(rng: &mut R, w: usize, h: usize, p: f64) -> LabelImage {
    LabelImage::from_fn(w, h, |_, _| rng.random_bool(p))
}

pub fn odd(n: usize) -> usize {
    (n | 1).max(3)
}

/// Pixels of the clipped `w × h` window centred on `(x, y)`; even sides reach further
/// right and down.
pub fn window_pixels(im: &GrayImage, x: usize, y: usize, w: usize, h: usize) -> Vec<u8> {
    let (x0, x1) = (x as i64 - (w as i64 - 1) / 2, x as i64 + w as i64 / 2);
    let (y0, y1) = (y as i64 - (h as i64 - 1) / 2, y as i64 + h as i64 / 2);
    let mut out = Vec::new();
    for yy in y0..=y1 {
        for xx in x0..=x1 {
            if xx >= 0 && yy >= 0 && (xx as usize) < im.width() && (yy as usize) < im.height() {
                out.push(im.get(xx as usize, yy as usize));
            }
        }
    }
    out
}

/// Two-pass population mean and standard deviation.
pub fn mean_std(values: &[u8]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn etni(i: f64, mean: f64, std: f64) -> f64 {
    if i > mean || std == 0.0 {
        1.0
    } else {
        ((i - mean) / std).exp()
    }
}

pub fn ltsi(i: f64, mean: f64, std: f64, range: f64) -> f64 {
    if std > range {
        0.0
    } else if mean == 0.0 {
        0.5
    } else {
        let k = (i / mean - 1.0) / (std - range);
        1.0 / (1.0 + (-k).exp())
    }
}

/// Fraction of pixels in the band of odd thickness `t` around `(x, y)` that are not
/// brighter than `(x, y)`. Direction 0 rows, 1 columns, 2 constant `x - y`, 3 constant `x + y`.
pub fn band_percentile(im: &GrayImage, x: usize, y: usize, direction: usize, t: usize) -> f64 {
    let key = |xx: usize, yy: usize| -> i64 {
        match direction {
            0 => yy as i64,
            1 => xx as i64,
            2 => xx as i64 - yy as i64,
            _ => xx as i64 + yy as i64,
        }
    };
    let centre = key(x, y);
    let half = (t / 2) as i64;
    let v = im.get(x, y);
    let (mut below, mut total) = (0u64, 0u64);
    for yy in 0..im.height() {
        for xx in 0..im.width() {
            if (key(xx, yy) - centre).abs() <= half {
                total += 1;
                below += u64::from(im.get(xx, yy) <= v);
            }
        }
    }
    below as f64 / total as f64
}

pub fn global_percentile(im: &GrayImage, v: u8) -> f64 {
    im.data().iter().filter(|&&p| p <= v).count() as f64 / im.len() as f64
}

pub fn lip(p: f64, th: f64) -> f64 {
    if p <= th {
        1.0
    } else {
        p.ln() / th.ln()
    }
}

fn bilinear(im: &GrayImage, fx: f64, fy: f64) -> f64 {
    let fx = fx.clamp(0.0, (im.width() - 1) as f64);
    let fy = fy.clamp(0.0, (im.height() - 1) as f64);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(im.width() - 1), (y0 + 1).min(im.height() - 1));
    let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
    if ax == 0.0 && ay == 0.0 {
        return f64::from(im.get(x0, y0));
    }
    let p = |x, y| f64::from(im.get(x, y));
    let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
    let bottom = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
    top * (1.0 - ay) + bottom * ay
}

/// LTP code counts `(zero, minus, plus)` over 8 equally spaced neighbours at radius `r`.
pub fn ltp_counts(im: &GrayImage, x: usize, y: usize, r: f64, tol: f64) -> (u32, u32, u32) {
    let c = f64::from(im.get(x, y));
    let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    let (mut zero, mut minus, mut plus) = (0, 0, 0);
    for l in 0..8 {
        let theta = std::f64::consts::TAU * l as f64 / 8.0;
        let n = bilinear(im, x as f64 + snap(r * theta.cos()), y as f64 + snap(r * theta.sin()));
        if n >= c + tol {
            plus += 1;
        } else if n <= c - tol {
            minus += 1;
        } else {
            zero += 1;
        }
    }
    (zero, minus, plus)
}

/// Exhaustive Otsu: every `t` splits into `{v < t}` and `{v >= t}`; scores are compared
/// exactly in integer arithmetic and the smallest maximizer wins.
pub fn otsu_exhaustive(bins: &[u64; 256]) -> u8 {
    let occupied: Vec<usize> = (0..256).filter(|&v| bins[v] > 0).collect();
    if occupied.len() <= 1 {
        return occupied.first().copied().unwrap_or(0) as u8;
    }
    // score(t) = (s0·n1 - s1·n0)² / (n0·n1), kept as a fraction
    let mut best: Option<(u8, i128, i128)> = None;
    for t in 0..256usize {
        let n0: i128 = (0..t).map(|v| bins[v] as i128).sum();
        let s0: i128 = (0..t).map(|v| v as i128 * bins[v] as i128).sum();
        let n1: i128 = (t..256).map(|v| bins[v] as i128).sum();
        let s1: i128 = (t..256).map(|v| v as i128 * bins[v] as i128).sum();
        let (num, den) = if n0 == 0 || n1 == 0 {
            (0, 1)
        } else {
            let d = s0 * n1 - s1 * n0;
            (d * d, n0 * n1)
        };
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t as u8, num, den)),
        }
    }
    best.unwrap().0
}

pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn counts(pred: &LabelImage, gt: &LabelImage) -> Counts {
    let mut c = Counts { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            match (pred.get(x, y), gt.get(x, y)) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
    }
    c
}

pub fn f1_percent(c: &Counts) -> f64 {
    if c.tp + c.fp + c.fn_ == 0 {
        return 100.0;
    }
    if c.tp == 0 {
        return 0.0;
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    100.0 * 2.0 * precision * recall / (precision + recall)
}

pub fn psnr(c: &Counts) -> f64 {
    let errors = c.fp + c.fn_;
    if errors == 0 {
        return 100.0;
    }
    let mse = errors as f64 / (c.tp + c.fp + c.fn_ + c.tn) as f64;
    (10.0 * (1.0 / mse).log10()).min(100.0)
}

/// DRD from the definition: every flipped pixel adds the normalized reciprocal-distance
/// weights of in-image 5×5 neighbours whose ground truth differs from its predicted
/// value; the total is divided by the number of mixed 8×8 ground-truth blocks.
pub fn drd(pred: &LabelImage, gt: &LabelImage) -> Option<f64> {
    let (w, h) = (gt.width() as i64, gt.height() as i64);
    let mut weights = [[0.0f64; 5]; 5];
    let mut total = 0.0;
    for i in -2i64..=2 {
        for j in -2i64..=2 {
            if i != 0 || j != 0 {
                let v = 1.0 / ((i * i + j * j) as f64).sqrt();
                weights[(i + 2) as usize][(j + 2) as usize] = v;
                total += v;
            }
        }
    }
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = pred.get(x as usize, y as usize);
            if p == gt.get(x as usize, y as usize) {
                continue;
            }
            for i in -2i64..=2 {
                for j in -2i64..=2 {
                    let (yy, xx) = (y + i, x + j);
                    if xx < 0 || yy < 0 || xx >= w || yy >= h {
                        continue;
                    }
                    if gt.get(xx as usize, yy as usize) != p {
                        sum += weights[(i + 2) as usize][(j + 2) as usize] / total;
                    }
                }
            }
        }
    }
    let mut mixed = 0usize;
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            let mut seen = [false; 2];
            for y in by..(by + 8).min(h) {
                for x in bx..(bx + 8).min(w) {
                    seen[gt.get(x as usize, y as usize) as usize] = true;
                }
            }
            mixed += usize::from(seen[0] && seen[1]);
        }
    }
    (mixed > 0).then(|| sum / mixed as f64)
}

/// Closed-form two-class Gaussian naive Bayes log-odds `log P(fg | x) - log P(bg | x)`.
pub fn gnb_log_odds(priors: [f64; 2], means: [&[f64]; 2], vars: [&[f64]; 2], x: &[f64]) -> f64 {
    let log_joint = |c: usize| {
        let mut acc = priors[c].ln();
        for d in 0..x.len() {
            let var = vars[c][d];
            acc += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x[d] - means[c][d]).powi(2) / (2.0 * var);
        }
        acc
    };
    log_joint(1) - log_joint(0)
}
