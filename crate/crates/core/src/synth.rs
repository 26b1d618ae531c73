//! Synthetic degraded pages with exact ground truth: pen strokes laid out as lines of
//! pseudo-glyphs over an uneven, stained, noisy background.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{GrayImage, LabelImage};
use crate::learner::TrainingImage;
use crate::seeding::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageSpec {
    pub width: usize,
    pub height: usize,
    /// Pen diameter in pixels.
    pub stroke_width: usize,
    /// Background level at the left and right edges.
    pub background: (f64, f64),
    /// Ink level at the left and right edges.
    pub ink: (f64, f64),
    /// Standard deviation of additive Gaussian noise.
    pub noise_sigma: f64,
    /// Fraction of pixels replaced by pure black or white.
    pub salt_fraction: f64,
    /// Number of darkened elliptical stains.
    pub stains: usize,
}

impl Default for PageSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            stroke_width: 3,
            background: (140.0, 235.0),
            ink: (35.0, 105.0),
            noise_sigma: 8.0,
            salt_fraction: 0.003,
            stains: 2,
        }
    }
}

impl PageSpec {
    /// Flat white background, black ink, no noise.
    pub fn clean(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            background: (235.0, 235.0),
            ink: (30.0, 30.0),
            noise_sigma: 0.0,
            salt_fraction: 0.0,
            stains: 0,
            ..Self::default()
        }
    }
}

pub struct SynthPage {
    pub image: GrayImage,
    pub gt: LabelImage,
}

fn stamp_disk(mask: &mut [u8], w: usize, h: usize, cx: f64, cy: f64, r: f64) {
    let x0 = (cx - r).floor().max(0.0) as usize;
    let y0 = (cy - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as usize).min(w.saturating_sub(1));
    let y1 = ((cy + r).ceil() as usize).min(h.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                mask[y * w + x] = 1;
            }
        }
    }
}

fn stroke_segment(mask: &mut [u8], w: usize, h: usize, a: (f64, f64), b: (f64, f64), r: f64) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let steps = (len * 2.0).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        stamp_disk(mask, w, h, a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), r);
    }
}

/// Lines of pseudo-glyphs; each glyph is a short polyline through a 3×4 anchor grid.
fn render_text<R: Rng>(spec: &PageSpec, rng: &mut R) -> Vec<u8> {
    let (w, h) = (spec.width, spec.height);
    let mut mask = vec![0u8; w * h];
    let s = spec.stroke_width.max(1) as f64;
    let r = s / 2.0;
    let glyph_h = 6.0 * s;
    let line_gap = 3.0 * s;
    let margin = 3.0 * s;
    let mut top = margin;
    while top + glyph_h + margin < h as f64 {
        let mut left = margin;
        loop {
            let glyph_w = rng.random_range(2.5 * s..4.5 * s);
            if left + glyph_w + margin >= w as f64 {
                break;
            }
            let anchor = |i: usize, j: usize| (left + glyph_w * i as f64 / 2.0, top + glyph_h * j as f64 / 3.0);
            let strokes = rng.random_range(1..=3);
            for _ in 0..strokes {
                let points = rng.random_range(2..=4);
                let mut prev = anchor(rng.random_range(0..3), rng.random_range(0..4));
                for _ in 1..points {
                    let next = anchor(rng.random_range(0..3), rng.random_range(0..4));
                    stroke_segment(&mut mask, w, h, prev, next, r);
                    prev = next;
                }
            }
            left += glyph_w + rng.random_range(1.0 * s..2.0 * s);
            if rng.random_bool(0.15) {
                left += 3.0 * s;
            }
        }
        top += glyph_h + line_gap;
    }
    mask
}

/// Renders one page; the same spec and seed always give the same page.
pub fn generate_page(spec: &PageSpec, seed: u64) -> SynthPage {
    let mut rng = stream_rng(seed, 0);
    let (w, h) = (spec.width, spec.height);
    let mask = render_text(spec, &mut rng);

    // 3×3 box blur of the ink coverage softens stroke edges
    let mut coverage = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut acc, mut n) = (0u32, 0u32);
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    acc += u32::from(mask[yy * w + xx]);
                    n += 1;
                }
            }
            coverage[y * w + x] = f64::from(acc) / f64::from(n);
        }
    }

    let stains: Vec<(f64, f64, f64, f64, f64)> = (0..spec.stains)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(0.1..0.35) * w as f64,
                rng.random_range(0.1..0.35) * h as f64,
                rng.random_range(0.7..0.85),
            )
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");

    let lerp = |(a, b): (f64, f64), t: f64| a + (b - a) * t;
    let mut data = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let tx = if w > 1 { x as f64 / (w - 1) as f64 } else { 0.0 };
            let ty = if h > 1 { y as f64 / (h - 1) as f64 } else { 0.0 };
            let mut bg = lerp(spec.background, tx) - 12.0 * (std::f64::consts::PI * ty).sin();
            for &(cx, cy, rx, ry, factor) in &stains {
                let d = ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
                if d < 1.0 {
                    bg *= factor + (1.0 - factor) * d;
                }
            }
            let ink = lerp(spec.ink, tx);
            let c = coverage[y * w + x];
            let mut v = c * ink + (1.0 - c) * bg;
            if spec.noise_sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            data[y * w + x] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    if spec.salt_fraction > 0.0 {
        for v in data.iter_mut() {
            if rng.random_bool(spec.salt_fraction.min(1.0)) {
                *v = if rng.random_bool(0.5) { 255 } else { 0 };
            }
        }
    }
    // ground truth marks pixels that are mostly ink after the blur
    let gt = coverage.iter().map(|&c| u8::from(c >= 0.5)).collect();
    SynthPage {
        image: GrayImage::new(w, h, data).expect("buffer matches dimensions"),
        gt: LabelImage::new(w, h, gt).expect("buffer matches dimensions"),
    }
}

/// `n` pages drawn from independent streams of `seed`, named `page_00`, `page_01`, ...
pub fn synthetic_corpus(spec: &PageSpec, n: usize, seed: u64) -> Result<Vec<TrainingImage>> {
    (0..n)
        .map(|i| {
            let page = generate_page(spec, seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            TrainingImage::new(format!("page_{i:02}"), page.image, page.gt)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_plausible() {
        let spec = PageSpec::default();
        let a = generate_page(&spec, 5);
        let b = generate_page(&spec, 5);
        assert_eq!(a.image, b.image);
        assert_eq!(a.gt, b.gt);
        let fg = a.gt.foreground_count() as f64 / a.gt.len() as f64;
        assert!(fg > 0.03 && fg < 0.5, "foreground fraction {fg}");
        assert_ne!(generate_page(&spec, 6).gt, a.gt);
    }

    #[test]
    fn ink_is_darker_than_paper() {
        let page = generate_page(&PageSpec::clean(120, 80), 1);
        for (&v, &g) in page.image.data().iter().zip(page.gt.data()) {
            if g == 1 {
                assert!(v < 160);
            }
        }
    }
}
