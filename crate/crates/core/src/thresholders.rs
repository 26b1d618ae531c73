//! Classical global and local binarization: Otsu, Niblack and Sauvola.
//!
//! Every binarizer labels a pixel foreground exactly when its decision function is
//! strictly negative; a zero decision value is background.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{histogram, otsu_threshold, GrayImage, LabelImage};
use crate::integral::IntegralPair;
use crate::window::odd_window;

/// Smallest local window used for the stroke-width-derived defaults.
pub const MIN_LOCAL_WINDOW: usize = 15;

/// Local window side for a stroke width: odd(2s), at least 15.
pub fn window_for_stroke(stroke_width: usize) -> usize {
    odd_window(2 * stroke_width).max(MIN_LOCAL_WINDOW)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiblackParams {
    pub k: f64,
    pub window: usize,
}

impl NiblackParams {
    pub fn new(k: f64, window: usize) -> Result<Self> {
        let p = Self { k, window };
        p.validate()?;
        Ok(p)
    }

    pub fn for_stroke_width(k: f64, stroke_width: usize) -> Self {
        Self {
            k,
            window: window_for_stroke(stroke_width),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k < 0.0) {
            return Err(Error::Config(format!("niblack k must be < 0, got {}", self.k)));
        }
        check_window(self.window)
    }
}

impl Default for NiblackParams {
    fn default() -> Self {
        Self {
            k: -0.2,
            window: MIN_LOCAL_WINDOW,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SauvolaParams {
    pub k: f64,
    /// Dynamic range of the standard deviation, `S`.
    pub dynamic_range: f64,
    pub window: usize,
}

impl SauvolaParams {
    pub fn new(k: f64, dynamic_range: f64, window: usize) -> Result<Self> {
        let p = Self {
            k,
            dynamic_range,
            window,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn for_stroke_width(k: f64, dynamic_range: f64, stroke_width: usize) -> Self {
        Self {
            k,
            dynamic_range,
            window: window_for_stroke(stroke_width),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(Error::Config(format!("sauvola k must be > 0, got {}", self.k)));
        }
        if !(self.dynamic_range > 0.0) {
            return Err(Error::Config(format!(
                "sauvola dynamic range must be > 0, got {}",
                self.dynamic_range
            )));
        }
        check_window(self.window)
    }
}

impl Default for SauvolaParams {
    fn default() -> Self {
        Self {
            k: 0.5,
            dynamic_range: 128.0,
            window: MIN_LOCAL_WINDOW,
        }
    }
}

fn check_window(w: usize) -> Result<()> {
    if w < 3 || w % 2 == 0 {
        return Err(Error::Config(format!("window must be odd and >= 3, got {w}")));
    }
    Ok(())
}

fn binarize_with(im: &GrayImage, decide: impl Fn(usize, usize, f64) -> f64 + Sync) -> LabelImage {
    let (w, h) = (im.width(), im.height());
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = u8::from(decide(x, y, f64::from(im.get(x, y))) < 0.0);
        }
    });
    LabelImage::new(w, h, out).expect("dimensions come from a valid image")
}

/// Global Otsu binarization: foreground iff `I - G_th < 0`.
pub fn binarize_otsu(im: &GrayImage) -> LabelImage {
    let t = f64::from(otsu_threshold(&histogram(im)));
    binarize_with(im, |_, _, v| v - t)
}

/// Niblack: foreground iff `I - μ + k·σ < 0`.
pub fn binarize_niblack(im: &GrayImage, p: &NiblackParams) -> LabelImage {
    let ip = IntegralPair::new(im);
    binarize_with(im, |x, y, v| {
        let (mu, sigma) = ip.local_stats(x, y, p.window, p.window);
        v - mu + p.k * sigma
    })
}

/// Sauvola: foreground iff `I - μ(1 + k(σ/S - 1)) < 0`.
pub fn binarize_sauvola(im: &GrayImage, p: &SauvolaParams) -> LabelImage {
    let ip = IntegralPair::new(im);
    binarize_with(im, |x, y, v| {
        let (mu, sigma) = ip.local_stats(x, y, p.window, p.window);
        v - mu * (1.0 + p.k * (sigma / p.dynamic_range - 1.0))
    })
}
