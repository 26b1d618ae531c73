//! Intensity, local-statistic, contrast, Laplacian, ETNI and LTSI channels.

use rayon::prelude::*;

use crate::image::{histogram, otsu_threshold, GrayImage};
use crate::integral::IntegralPair;
use crate::window::{odd_window, window_min_max};

use super::schema::SCALES;

/// Default `ε` guarding the contrast ratio on black regions (0..255 scale).
pub const EPS_SU: f64 = 1e-6;

/// Window sides `odd(k·s)` for k in 1, 2, 4, 8.
pub fn local_windows(s: usize) -> [usize; 4] {
    SCALES.map(|k| odd_window(k * s))
}

/// Su/Howe windows: a literal scale 1 followed by `odd(k·s)` for k in 1, 2, 4.
///
/// For Su the literal scale is a 3×3 window; for Howe it is the identity (`1`).
pub fn su_windows(s: usize) -> [usize; 4] {
    [3, odd_window(s), odd_window(2 * s), odd_window(4 * s)]
}

pub fn howe_windows(s: usize) -> [usize; 4] {
    [1, odd_window(s), odd_window(2 * s), odd_window(4 * s)]
}

pub fn feat_intensity(im: &GrayImage) -> Vec<f64> {
    im.data().iter().map(|&v| f64::from(v) / 255.0).collect()
}

pub fn feat_otsu_diff(im: &GrayImage) -> Vec<f64> {
    let t = f64::from(otsu_threshold(&histogram(im)));
    im.data().iter().map(|&v| (f64::from(v) - t) / 255.0).collect()
}

/// Four local-mean channels followed by four local-std channels, all divided by 255.
pub fn feat_local_stats(im: &GrayImage, s: usize) -> Vec<Vec<f64>> {
    let ip = IntegralPair::new(im);
    let windows = local_windows(s);
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for w in windows {
        let (m, sd) = stats_maps(&ip, w);
        means.push(m.into_iter().map(|v| v / 255.0).collect());
        stds.push(sd.into_iter().map(|v| v / 255.0).collect());
    }
    means.extend(stds);
    means
}

/// Raw (0..255 scale) mean and std maps for a square window.
pub fn stats_maps(ip: &IntegralPair, w: usize) -> (Vec<f64>, Vec<f64>) {
    let (width, height) = (ip.width(), ip.height());
    let mut mean = vec![0.0; width * height];
    let mut std = vec![0.0; width * height];
    mean.par_chunks_mut(width)
        .zip(std.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (mrow, srow))| {
            for x in 0..width {
                let (m, s) = ip.local_stats(x, y, w, w);
                mrow[x] = m;
                srow[x] = s;
            }
        });
    (mean, std)
}

#[inline]
pub fn su_contrast(min: f64, max: f64, eps: f64) -> f64 {
    (max - min) / (max + min + eps)
}

/// Unnormalized contrast map `(max - min) / (max + min + ε)` over a `w × w` window.
pub fn su_raw(im: &GrayImage, w: usize, eps: f64) -> Vec<f64> {
    let mm = window_min_max(im, w, w);
    mm.min
        .iter()
        .zip(&mm.max)
        .map(|(&lo, &hi)| su_contrast(f64::from(lo), f64::from(hi), eps))
        .collect()
}

/// 4-neighbour Laplacian with border replication.
pub fn laplacian(map: &[f64], width: usize, height: usize) -> Vec<f64> {
    let at = |x: usize, y: usize| map[y * width + x];
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(height - 1);
        for x in 0..width {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(width - 1);
            row[x] = at(left, y) + at(right, y) + at(x, up) + at(x, down) - 4.0 * at(x, y);
        }
    });
    out
}

/// Laplacian of the local-mean map; `w == 1` is the Laplacian of the image itself.
pub fn howe_raw(im: &GrayImage, ip: &IntegralPair, w: usize) -> Vec<f64> {
    let mean = if w <= 1 {
        im.data().iter().map(|&v| f64::from(v)).collect()
    } else {
        stats_maps(ip, w).0
    };
    laplacian(&mean, im.width(), im.height())
}

/// Per-image `(x - min) / (max - min)`; a constant channel maps to 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self { min, max }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let mm = MinMax::of(values);
    values.iter().map(|&v| mm.apply(v)).collect()
}

pub fn feat_su(im: &GrayImage, s: usize, eps: f64) -> Vec<Vec<f64>> {
    su_windows(s)
        .iter()
        .map(|&w| minmax_normalize(&su_raw(im, w, eps)))
        .collect()
}

pub fn feat_howe(im: &GrayImage, s: usize) -> Vec<Vec<f64>> {
    let ip = IntegralPair::new(im);
    howe_windows(s)
        .iter()
        .map(|&w| minmax_normalize(&howe_raw(im, &ip, w)))
        .collect()
}

/// Exponential truncated Niblack index: `exp((I - μ)/σ)` below the mean, 1 otherwise.
#[inline]
pub fn etni(intensity: f64, mean: f64, std: f64) -> f64 {
    if std <= 0.0 || intensity > mean {
        1.0
    } else {
        ((intensity - mean) / std).exp()
    }
}

/// Logistic truncated Sauvola index.
///
/// Zero when `σ > S`; otherwise the logistic of `(I/μ - 1)/(σ - S)`. A zero mean yields 0.5.
#[inline]
pub fn ltsi(intensity: f64, mean: f64, std: f64, dynamic_range: f64) -> f64 {
    if std > dynamic_range {
        return 0.0;
    }
    if mean == 0.0 {
        return 0.5;
    }
    let k = (intensity / mean - 1.0) / (std - dynamic_range);
    let v = 1.0 / (1.0 + (-k).exp());
    if v.is_nan() {
        0.5
    } else {
        v
    }
}

pub fn feat_etni(im: &GrayImage, s: usize) -> Vec<Vec<f64>> {
    let ip = IntegralPair::new(im);
    local_windows(s)
        .iter()
        .map(|&w| {
            let (m, sd) = stats_maps(&ip, w);
            im.data()
                .iter()
                .zip(m.iter().zip(&sd))
                .map(|(&v, (&mu, &sigma))| etni(f64::from(v), mu, sigma))
                .collect()
        })
        .collect()
}

pub fn feat_ltsi(im: &GrayImage, s: usize, dynamic_range: f64) -> Vec<Vec<f64>> {
    let ip = IntegralPair::new(im);
    local_windows(s)
        .iter()
        .map(|&w| {
            let (m, sd) = stats_maps(&ip, w);
            im.data()
                .iter()
                .zip(m.iter().zip(&sd))
                .map(|(&v, (&mu, &sigma))| ltsi(f64::from(v), mu, sigma, dynamic_range))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn intensity_and_otsu_diff() {
        let im = GrayImage::new(2, 1, vec![255, 0]).unwrap();
        assert_eq!(feat_intensity(&im), vec![1.0, 0.0]);

        // two-level image: the threshold sits one above the dark level
        let im = GrayImage::new(4, 1, vec![0, 0, 254, 254]).unwrap();
        let t = f64::from(otsu_threshold(&histogram(&im)));
        assert_eq!(t, 1.0);
        assert_eq!(feat_otsu_diff(&im)[0], -1.0 / 255.0);

        let im = GrayImage::filled(3, 3, 127);
        assert!(feat_otsu_diff(&im).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn local_stats_constant() {
        let ch = feat_local_stats(&GrayImage::filled(12, 9, 128), 1);
        assert_eq!(ch.len(), 8);
        for m in &ch[..4] {
            assert!(m.iter().all(|&v| v == 128.0 / 255.0));
        }
        for s in &ch[4..] {
            assert!(s.iter().all(|&v| v == 0.0));
        }
        assert_eq!(local_windows(1), [3, 3, 5, 9]);
    }

    #[test]
    fn su_examples() {
        assert!(feat_su(&GrayImage::filled(8, 8, 90), 2, EPS_SU)
            .iter()
            .all(|c| c.iter().all(|&v| v == 0.0)));
        assert_abs_diff_eq!(su_contrast(0.0, 255.0, EPS_SU), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn howe_examples() {
        let mut im = GrayImage::filled(7, 7, 0);
        im.set(3, 3, 255);
        let ip = IntegralPair::new(&im);
        let lap = howe_raw(&im, &ip, 1);
        assert_eq!(lap[3 * 7 + 3], -4.0 * 255.0);
        for (x, y) in [(2, 3), (4, 3), (3, 2), (3, 4)] {
            assert_eq!(lap[y * 7 + x], 255.0);
        }

        let ramp = GrayImage::from_fn(10, 10, |x, _| (x * 20) as u8);
        let lap = howe_raw(&ramp, &IntegralPair::new(&ramp), 1);
        for y in 1..9 {
            for x in 1..9 {
                assert_eq!(lap[y * 10 + x], 0.0);
            }
        }
        assert!(feat_howe(&GrayImage::filled(5, 5, 3), 1)
            .iter()
            .all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn etni_examples() {
        assert_eq!(etni(150.0, 150.0, 25.0), 1.0);
        assert_eq!(etni(10.0, 10.0, 0.0), 1.0);
        assert_eq!(etni(200.0, 150.0, 25.0), 1.0);
        assert_abs_diff_eq!(etni(100.0, 150.0, 25.0), (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(etni(100.0, 150.0, 25.0), 0.1353, epsilon = 1e-4);
    }

    #[test]
    fn ltsi_examples() {
        assert_eq!(ltsi(10.0, 100.0, 129.0, 128.0), 0.0);
        assert_eq!(ltsi(100.0, 100.0, 20.0, 128.0), 0.5);
        assert_eq!(ltsi(0.0, 0.0, 0.0, 128.0), 0.5);
        let expected = 1.0 / (1.0 + (-0.005f64).exp());
        assert_abs_diff_eq!(ltsi(64.0, 128.0, 28.0, 128.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(ltsi(64.0, 128.0, 28.0, 128.0), 0.50125, epsilon = 1e-5);
        // σ == S takes the logistic branch with a zero denominator
        // (-0.5) / (+0.0) = -inf, so the logistic saturates at 0
        assert_eq!(ltsi(64.0, 128.0, 128.0, 128.0), 0.0);
        assert_eq!(ltsi(128.0, 128.0, 128.0, 128.0), 0.5);
    }

    #[test]
    fn minmax_degenerate() {
        assert_eq!(minmax_normalize(&[2.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(minmax_normalize(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
    }
}
