//! Stroke-width estimation from contrast edges and foreground run lengths.

use crate::image::{histogram, otsu_threshold, GrayImage, LabelImage};
use crate::thresholders::binarize_otsu;

use super::local::{su_raw, EPS_SU};

/// Estimated stroke width in pixels, `1 <= s <= max(1, min(W, H) / 4)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StrokeWidth(usize);

impl StrokeWidth {
    pub fn new(s: usize, width: usize, height: usize) -> Self {
        let cap = (width.min(height) / 4).max(1);
        Self(s.clamp(1, cap))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// High-contrast pixels: Otsu on the 3×3 contrast map quantized to 0..255.
pub fn contrast_edges(im: &GrayImage) -> LabelImage {
    let contrast = su_raw(im, 3, EPS_SU);
    let q: Vec<u8> = contrast
        .iter()
        .map(|&c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let qim = GrayImage::new(im.width(), im.height(), q).expect("same dimensions");
    let t = otsu_threshold(&histogram(&qim));
    LabelImage::from_fn(im.width(), im.height(), |x, y| qim.get(x, y) >= t)
}

/// Lengths of foreground runs that lie strictly inside `line` and start and end on edges.
fn bounded_runs(fg: impl Fn(usize) -> bool, edge: impl Fn(usize) -> bool, n: usize, out: &mut Vec<usize>) {
    let mut i = 0;
    while i < n {
        if !fg(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && fg(i) {
            i += 1;
        }
        let end = i - 1;
        if start > 0 && i < n && edge(start) && edge(end) {
            out.push(end - start + 1);
        }
    }
}

/// Mode of horizontal and vertical provisional-foreground run lengths bounded by
/// contrast edges; ties go to the shorter run. No runs gives 1.
pub fn estimate_stroke_width(im: &GrayImage) -> StrokeWidth {
    let (w, h) = (im.width(), im.height());
    let fg = binarize_otsu(im);
    let edges = contrast_edges(im);
    let mut runs = Vec::new();
    for y in 0..h {
        bounded_runs(|x| fg.get(x, y) == 1, |x| edges.get(x, y) == 1, w, &mut runs);
    }
    for x in 0..w {
        bounded_runs(|y| fg.get(x, y) == 1, |y| edges.get(x, y) == 1, h, &mut runs);
    }
    if runs.is_empty() {
        return StrokeWidth::new(1, w, h);
    }
    let max_len = *runs.iter().max().expect("nonempty");
    let mut counts = vec![0usize; max_len + 1];
    for r in runs {
        counts[r] += 1;
    }
    let mode = (1..=max_len)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .expect("nonempty");
    StrokeWidth::new(mode, w, h)
}
