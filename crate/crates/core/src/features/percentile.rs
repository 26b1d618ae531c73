//! Intensity percentiles over whole-image and directional band regions, and their
//! logarithmic rescaling (LIP).
//!
//! A percentile counts region pixels that are not brighter than the query pixel, so it
//! depends only on intensity ranks. All band percentiles are answered in O(1) from
//! per-direction tables of cumulative per-line histograms.

use rayon::prelude::*;

use crate::image::GrayImage;
use crate::window::odd_window;

use super::schema::SCALES;

/// Percentiles at or below this value saturate the LIP channel at 1.
pub const TH_PERC: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Row,
    Column,
    /// Lines of constant `x - y`.
    Diagonal,
    /// Lines of constant `x + y`.
    AntiDiagonal,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Row,
        Direction::Column,
        Direction::Diagonal,
        Direction::AntiDiagonal,
    ];

    fn line_count(self, width: usize, height: usize) -> usize {
        match self {
            Direction::Row => height,
            Direction::Column => width,
            Direction::Diagonal | Direction::AntiDiagonal => width + height - 1,
        }
    }

    #[inline]
    fn line_of(self, x: usize, y: usize, height: usize) -> usize {
        match self {
            Direction::Row => y,
            Direction::Column => x,
            Direction::Diagonal => x + (height - 1) - y,
            Direction::AntiDiagonal => x + y,
        }
    }
}

/// Region over which a percentile is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Whole,
    /// `thickness` consecutive full-span lines centred on the query pixel's line.
    Band { direction: Direction, thickness: usize },
}

/// Inclusive line range of a band of `thickness` lines centred on `line`.
#[inline]
fn band_range(line: usize, thickness: usize, lines: usize) -> (usize, usize) {
    let lo = line.saturating_sub((thickness.max(1) - 1) / 2);
    let hi = (line + thickness.max(1) / 2).min(lines - 1);
    (lo, hi)
}

/// Fraction of region pixels `q` with `I(x, y) >= I(q)`, via a 256-bin count of the region.
pub fn region_percentile(im: &GrayImage, x: usize, y: usize, region: Region) -> f64 {
    let (w, h) = (im.width(), im.height());
    let mut bins = [0u64; 256];
    match region {
        Region::Whole => {
            for &v in im.data() {
                bins[v as usize] += 1;
            }
        }
        Region::Band { direction, thickness } => {
            let lines = direction.line_count(w, h);
            let (lo, hi) = band_range(direction.line_of(x, y, h), thickness, lines);
            for yy in 0..h {
                for xx in 0..w {
                    let l = direction.line_of(xx, yy, h);
                    if l >= lo && l <= hi {
                        bins[im.get(xx, yy) as usize] += 1;
                    }
                }
            }
        }
    }
    let total: u64 = bins.iter().sum();
    let below: u64 = bins[..=im.get(x, y) as usize].iter().sum();
    below as f64 / total as f64
}

/// `1` for `p <= th`, else `log_th(p)`.
#[inline]
pub fn lip(p: f64, th: f64) -> f64 {
    if p <= th {
        1.0
    } else {
        p.ln() / th.ln()
    }
}

/// Cumulative counts over lines and intensities for one direction.
///
/// `cum[l * 256 + v]` is the number of pixels on lines `< l` with intensity `<= v`.
#[derive(Clone, Debug)]
struct LineTable {
    direction: Direction,
    lines: usize,
    cum: Vec<u32>,
}

impl LineTable {
    fn new(im: &GrayImage, direction: Direction) -> Self {
        let (w, h) = (im.width(), im.height());
        let lines = direction.line_count(w, h);
        let mut per_line = vec![0u32; lines * 256];
        for y in 0..h {
            for (x, &v) in im.row(y).iter().enumerate() {
                per_line[direction.line_of(x, y, h) * 256 + v as usize] += 1;
            }
        }
        let mut cum = vec![0u32; (lines + 1) * 256];
        for l in 0..lines {
            let mut running = 0u32;
            for v in 0..256 {
                running += per_line[l * 256 + v];
                cum[(l + 1) * 256 + v] = cum[l * 256 + v] + running;
            }
        }
        Self {
            direction,
            lines,
            cum,
        }
    }

    /// `(count <= v, total)` over the band of `thickness` lines around `(x, y)`.
    #[inline]
    fn query(&self, x: usize, y: usize, height: usize, v: u8, thickness: usize) -> (u32, u32) {
        let (lo, hi) = band_range(self.direction.line_of(x, y, height), thickness, self.lines);
        let at = |l: usize, v: usize| self.cum[l * 256 + v];
        let below = at(hi + 1, v as usize) - at(lo, v as usize);
        let total = at(hi + 1, 255) - at(lo, 255);
        (below, total)
    }
}

/// Precomputed tables answering every LIP channel of an image.
#[derive(Clone, Debug)]
pub struct LipTables {
    height: usize,
    global_cum: [u64; 256],
    total: u64,
    thickness: [usize; 4],
    tables: Vec<LineTable>,
    th: f64,
}

pub const LIP_CHANNELS: usize = 18;

impl LipTables {
    pub fn new(im: &GrayImage, s: usize, th: f64) -> Self {
        let mut global_cum = [0u64; 256];
        for &v in im.data() {
            global_cum[v as usize] += 1;
        }
        for v in 1..256 {
            global_cum[v] += global_cum[v - 1];
        }
        let tables = Direction::ALL
            .par_iter()
            .map(|&d| LineTable::new(im, d))
            .collect();
        Self {
            height: im.height(),
            global_cum,
            total: im.len() as u64,
            thickness: band_thickness(s),
            tables,
            th,
        }
    }

    #[inline]
    pub fn global_percentile(&self, v: u8) -> f64 {
        self.global_cum[v as usize] as f64 / self.total as f64
    }

    /// Percentile within the band for `direction` at scale index `k` (0..4).
    #[inline]
    pub fn band_percentile(&self, direction: usize, k: usize, x: usize, y: usize, v: u8) -> f64 {
        let (below, total) = self.tables[direction].query(x, y, self.height, v, self.thickness[k]);
        f64::from(below) / f64::from(total)
    }

    /// The 18 LIP channels for one pixel: global, 4 directions × 4 scales, max.
    #[inline]
    pub fn channels(&self, x: usize, y: usize, v: u8, out: &mut [f64]) {
        out[0] = lip(self.global_percentile(v), self.th);
        let mut best = 0.0f64;
        for d in 0..4 {
            for k in 0..4 {
                let p = self.band_percentile(d, k, x, y, v);
                best = best.max(p);
                out[1 + d * 4 + k] = lip(p, self.th);
            }
        }
        out[17] = lip(best, self.th);
    }
}

/// Band thickness `odd(k·s)` for k in 1, 2, 4, 8.
pub fn band_thickness(s: usize) -> [usize; 4] {
    SCALES.map(|k| odd_window(k * s))
}

/// Whole-image percentile map.
pub fn percentile_image(im: &GrayImage) -> Vec<f64> {
    let tables = LipTables::new(im, 1, TH_PERC);
    im.data().iter().map(|&v| tables.global_percentile(v)).collect()
}

/// All 18 LIP channels as full maps.
pub fn feat_lip(im: &GrayImage, s: usize) -> Vec<Vec<f64>> {
    let tables = LipTables::new(im, s, TH_PERC);
    let (w, h) = (im.width(), im.height());
    let rows: Vec<[f64; LIP_CHANNELS]> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let mut out = [0.0; LIP_CHANNELS];
            tables.channels(i % w, i / w, im.data()[i], &mut out);
            out
        })
        .collect();
    (0..LIP_CHANNELS)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect()
}
