//! Per-pixel feature extraction.
//!
//! [`FeatureExtractor`] builds the per-image artifacts once (integral images, contrast
//! and Laplacian maps, percentile tables, global statistics) and then produces any
//! pixel's 142-channel row in constant time, so rows can be generated in parallel and
//! streamed without materializing the full matrix.

pub mod global;
pub mod local;
pub mod percentile;
pub mod rdi;
pub mod schema;
pub mod stroke;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{histogram, otsu_threshold, GrayImage};
use crate::integral::IntegralPair;

pub use global::{global_features, GlobalFeatures};
pub use local::{
    etni, feat_etni, feat_howe, feat_intensity, feat_local_stats, feat_ltsi, feat_otsu_diff, feat_su, ltsi,
    MinMax,
};
pub use percentile::{feat_lip, lip, region_percentile, Direction, LipTables, Region};
pub use rdi::{feat_rdi, ltp_code, RdiSampler};
pub use schema::{ChannelDesc, Family, FeatureSchema, Normalization, FEATURE_DIM, SCALES};
pub use stroke::{estimate_stroke_width, StrokeWidth};

/// Tunables of the feature extractor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// LTP tolerance in intensity levels.
    pub ltp_tol: f64,
    /// Guard in the contrast denominator.
    pub eps_su: f64,
    /// Sauvola dynamic range `S` used by the LTSI channels.
    pub sauvola_range: f64,
    /// Percentile saturation threshold for LIP.
    pub th_perc: f64,
    /// Fixed stroke width; estimated per image when absent.
    pub stroke_width: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            ltp_tol: rdi::LTP_TOL,
            eps_su: local::EPS_SU,
            sauvola_range: 128.0,
            th_perc: percentile::TH_PERC,
            stroke_width: None,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ltp_tol >= 0.0) {
            return Err(Error::Config(format!("ltp_tol must be >= 0, got {}", self.ltp_tol)));
        }
        if !(self.eps_su > 0.0) {
            return Err(Error::Config(format!("eps_su must be > 0, got {}", self.eps_su)));
        }
        if !(self.sauvola_range > 0.0) {
            return Err(Error::Config(format!(
                "sauvola_range must be > 0, got {}",
                self.sauvola_range
            )));
        }
        if !(self.th_perc > 0.0 && self.th_perc < 1.0) {
            return Err(Error::Config(format!("th_perc must be in (0, 1), got {}", self.th_perc)));
        }
        if self.stroke_width == Some(0) {
            return Err(Error::Config("stroke_width must be >= 1".into()));
        }
        Ok(())
    }
}

/// Feature rows (row-major, `dim` values each) tagged with the schema fingerprint.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    rows: Vec<f32>,
    fingerprint: u64,
}

impl FeatureMatrix {
    pub fn new(dim: usize, rows: Vec<f32>, fingerprint: u64) -> Result<Self> {
        if dim == 0 || rows.len() % dim != 0 {
            return Err(Error::Input(format!(
                "{} values do not form rows of length {dim}",
                rows.len()
            )));
        }
        Ok(Self {
            dim,
            rows,
            fingerprint,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.rows
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.rows
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Column `c` across all rows.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.rows.chunks_exact(self.dim).map(|r| r[c]).collect()
    }
}

struct NormalizedMap {
    raw: Vec<f64>,
    range: MinMax,
}

impl NormalizedMap {
    fn new(raw: Vec<f64>) -> Self {
        let range = MinMax::of(&raw);
        Self { raw, range }
    }

    #[inline]
    fn at(&self, i: usize) -> f64 {
        self.range.apply(self.raw[i])
    }
}

/// Per-image precomputation for O(1) feature rows.
pub struct FeatureExtractor<'a> {
    im: &'a GrayImage,
    config: FeatureConfig,
    stroke: StrokeWidth,
    otsu: f64,
    integral: IntegralPair,
    windows: [usize; 4],
    su: Vec<NormalizedMap>,
    howe: Vec<NormalizedMap>,
    lip: LipTables,
    rdi: RdiSampler,
    global: [f64; global::GLOBAL_CHANNELS],
}

const OFF_INT: usize = 0;
const OFF_OTSU: usize = 1;
const OFF_AVG: usize = 2;
const OFF_STD: usize = 6;
const OFF_SU: usize = 10;
const OFF_HOWE: usize = 14;
const OFF_ETNI: usize = 18;
const OFF_LTSI: usize = 22;
const OFF_LIP: usize = 26;
const OFF_RDI: usize = 44;
const OFF_GLOBAL: usize = 74;

impl<'a> FeatureExtractor<'a> {
    pub fn new(im: &'a GrayImage, config: &FeatureConfig) -> Self {
        let stroke = match config.stroke_width {
            Some(s) => StrokeWidth::new(s, im.width(), im.height()),
            None => estimate_stroke_width(im),
        };
        Self::with_stroke_width(im, config, stroke)
    }

    pub fn with_stroke_width(im: &'a GrayImage, config: &FeatureConfig, stroke: StrokeWidth) -> Self {
        let s = stroke.get();
        let integral = IntegralPair::new(im);
        let su = local::su_windows(s)
            .par_iter()
            .map(|&w| NormalizedMap::new(local::su_raw(im, w, config.eps_su)))
            .collect();
        let howe = local::howe_windows(s)
            .par_iter()
            .map(|&w| NormalizedMap::new(local::howe_raw(im, &integral, w)))
            .collect();
        Self {
            im,
            config: config.clone(),
            stroke,
            otsu: f64::from(otsu_threshold(&histogram(im))),
            windows: local::local_windows(s),
            su,
            howe,
            lip: LipTables::new(im, s, config.th_perc),
            rdi: RdiSampler::new(s, config.ltp_tol),
            global: global_features(im).channels(),
            integral,
        }
    }

    pub fn image(&self) -> &GrayImage {
        self.im
    }

    pub fn stroke_width(&self) -> StrokeWidth {
        self.stroke
    }

    pub fn otsu_threshold(&self) -> f64 {
        self.otsu
    }

    /// Writes the feature row of pixel `(x, y)` into `out` (length 142).
    pub fn row_into(&self, x: usize, y: usize, out: &mut [f32]) {
        debug_assert_eq!(out.len(), FEATURE_DIM);
        let w = self.im.width();
        let i = y * w + x;
        let v = self.im.get(x, y);
        let vf = f64::from(v);
        let mut buf = [0.0f64; FEATURE_DIM];

        buf[OFF_INT] = vf / 255.0;
        buf[OFF_OTSU] = (vf - self.otsu) / 255.0;
        for (k, &win) in self.windows.iter().enumerate() {
            let (mu, sigma) = self.integral.local_stats(x, y, win, win);
            buf[OFF_AVG + k] = mu / 255.0;
            buf[OFF_STD + k] = sigma / 255.0;
            buf[OFF_ETNI + k] = etni(vf, mu, sigma);
            buf[OFF_LTSI + k] = ltsi(vf, mu, sigma, self.config.sauvola_range);
        }
        for k in 0..4 {
            buf[OFF_SU + k] = self.su[k].at(i);
            buf[OFF_HOWE + k] = self.howe[k].at(i);
        }
        self.lip.channels(x, y, v, &mut buf[OFF_LIP..OFF_RDI]);
        self.rdi.channels(self.im, x, y, &mut buf[OFF_RDI..OFF_GLOBAL]);
        buf[OFF_GLOBAL..].copy_from_slice(&self.global);

        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = *b as f32;
        }
    }

    /// Rows for a run of whole image rows `[y0, y1)`.
    pub fn rows_for_lines(&self, y0: usize, y1: usize) -> Vec<f32> {
        let w = self.im.width();
        let mut out = vec![0f32; (y1 - y0) * w * FEATURE_DIM];
        out.par_chunks_mut(w * FEATURE_DIM).enumerate().for_each(|(dy, line)| {
            for (x, row) in line.chunks_exact_mut(FEATURE_DIM).enumerate() {
                self.row_into(x, y0 + dy, row);
            }
        });
        out
    }

    pub fn extract_all(&self) -> FeatureMatrix {
        let rows = self.rows_for_lines(0, self.im.height());
        FeatureMatrix::new(FEATURE_DIM, rows, FeatureSchema::get().fingerprint()).expect("row length")
    }

    /// Rows for pixels given as flat indices `y * W + x`, in the given order.
    pub fn extract_at(&self, pixels: &[usize]) -> FeatureMatrix {
        let w = self.im.width();
        let mut rows = vec![0f32; pixels.len() * FEATURE_DIM];
        rows.par_chunks_mut(FEATURE_DIM)
            .zip(pixels.par_iter())
            .for_each(|(row, &p)| self.row_into(p % w, p / w, row));
        FeatureMatrix::new(FEATURE_DIM, rows, FeatureSchema::get().fingerprint()).expect("row length")
    }
}

/// Feature rows for every pixel in row-major order, default configuration.
pub fn extract_features(im: &GrayImage) -> FeatureMatrix {
    FeatureExtractor::new(im, &FeatureConfig::default()).extract_all()
}

/// Feature rows for the given flat pixel indices, default configuration.
pub fn extract_features_at(im: &GrayImage, pixels: &[usize]) -> Result<FeatureMatrix> {
    if let Some(&bad) = pixels.iter().find(|&&p| p >= im.len()) {
        return Err(Error::Input(format!("pixel index {bad} outside {} pixels", im.len())));
    }
    Ok(FeatureExtractor::new(im, &FeatureConfig::default()).extract_at(pixels))
}
