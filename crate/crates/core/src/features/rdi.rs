//! Local ternary pattern codes and relative darkness index (RDI) channels.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::image::GrayImage;

use super::schema::SCALES;

/// Neighbours sampled per circle.
pub const NEIGHBORS: usize = 8;
/// Default LTP tolerance in intensity levels.
pub const LTP_TOL: f64 = 8.0;
/// Channels per radius: three code frequencies and three ratios.
pub const PER_RADIUS: usize = 6;
pub const RDI_CHANNELS: usize = 30;

/// Radii 1, s, 2s, 4s, 8s.
pub fn rdi_radii(s: usize) -> [f64; 5] {
    let mut r = [1.0; 5];
    for (i, k) in SCALES.iter().enumerate() {
        r[i + 1] = (k * s) as f64;
    }
    r
}

#[inline]
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Offsets `(dx, dy)` of the 8 neighbours at equal angles on a circle of radius `r`.
pub fn circle_offsets(r: f64) -> [(f64, f64); NEIGHBORS] {
    let mut out = [(0.0, 0.0); NEIGHBORS];
    for (l, o) in out.iter_mut().enumerate() {
        let theta = 2.0 * PI * l as f64 / NEIGHBORS as f64;
        *o = (snap(r * theta.cos()), snap(r * theta.sin()));
    }
    out
}

/// Bilinear sample with coordinates clamped to the image.
#[inline]
pub fn sample_bilinear(im: &GrayImage, fx: f64, fy: f64) -> f64 {
    let fx = fx.clamp(0.0, (im.width() - 1) as f64);
    let fy = fy.clamp(0.0, (im.height() - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let ax = fx - x0 as f64;
    let ay = fy - y0 as f64;
    let x1 = (x0 + 1).min(im.width() - 1);
    let y1 = (y0 + 1).min(im.height() - 1);
    let p = |x, y| f64::from(im.get(x, y));
    if ax == 0.0 && ay == 0.0 {
        return p(x0, y0);
    }
    let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
    let bottom = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
    top * (1.0 - ay) + bottom * ay
}

#[inline]
pub fn ternary(neighbor: f64, center: f64, tol: f64) -> i8 {
    if neighbor >= center + tol {
        1
    } else if neighbor <= center - tol {
        -1
    } else {
        0
    }
}

/// LTP code of neighbour `l` on the radius-`r` circle around `(x, y)`.
pub fn ltp_code(im: &GrayImage, x: usize, y: usize, l: usize, r: f64, tol: f64) -> i8 {
    let (dx, dy) = circle_offsets(r)[l % NEIGHBORS];
    let n = sample_bilinear(im, x as f64 + dx, y as f64 + dy);
    ternary(n, f64::from(im.get(x, y)), tol)
}

/// Code counts `(zero, minus, plus)` over one circle.
#[inline]
pub fn code_counts(im: &GrayImage, x: usize, y: usize, offsets: &[(f64, f64); NEIGHBORS], tol: f64) -> (u32, u32, u32) {
    let c = f64::from(im.get(x, y));
    let (mut zero, mut minus, mut plus) = (0, 0, 0);
    for &(dx, dy) in offsets {
        match ternary(sample_bilinear(im, x as f64 + dx, y as f64 + dy), c, tol) {
            1 => plus += 1,
            -1 => minus += 1,
            _ => zero += 1,
        }
    }
    (zero, minus, plus)
}

#[inline]
fn ratio(a: u32, b: u32) -> f64 {
    if a + b == 0 {
        0.0
    } else {
        f64::from(a) / f64::from(a + b)
    }
}

/// Writes `X⁰, X⁻¹, X⁺¹, X⁺¹/(X⁰+X⁺¹), X⁻¹/(X⁻¹+X⁺¹), X⁰/(X⁻¹+X⁰)`; empty ratios are 0.
#[inline]
pub fn rdi_from_counts(zero: u32, minus: u32, plus: u32, out: &mut [f64]) {
    let k = NEIGHBORS as f64;
    out[0] = f64::from(zero) / k;
    out[1] = f64::from(minus) / k;
    out[2] = f64::from(plus) / k;
    out[3] = ratio(plus, zero);
    out[4] = ratio(minus, plus);
    out[5] = ratio(zero, minus);
}

/// Per-image RDI evaluator with precomputed circle offsets.
#[derive(Clone, Debug)]
pub struct RdiSampler {
    offsets: Vec<[(f64, f64); NEIGHBORS]>,
    tol: f64,
}

impl RdiSampler {
    pub fn new(s: usize, tol: f64) -> Self {
        Self {
            offsets: rdi_radii(s).iter().map(|&r| circle_offsets(r)).collect(),
            tol,
        }
    }

    #[inline]
    pub fn channels(&self, im: &GrayImage, x: usize, y: usize, out: &mut [f64]) {
        for (i, offs) in self.offsets.iter().enumerate() {
            let (z, m, p) = code_counts(im, x, y, offs, self.tol);
            rdi_from_counts(z, m, p, &mut out[i * PER_RADIUS..(i + 1) * PER_RADIUS]);
        }
    }
}

/// All 30 RDI channels as full maps.
pub fn feat_rdi(im: &GrayImage, s: usize, tol: f64) -> Vec<Vec<f64>> {
    let sampler = RdiSampler::new(s, tol);
    let w = im.width();
    let rows: Vec<[f64; RDI_CHANNELS]> = (0..im.len())
        .into_par_iter()
        .map(|i| {
            let mut out = [0.0; RDI_CHANNELS];
            sampler.channels(im, i % w, i / w, &mut out);
            out
        })
        .collect();
    (0..RDI_CHANNELS)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect()
}
