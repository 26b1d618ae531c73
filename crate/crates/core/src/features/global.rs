//! Whole-image statistics broadcast to every pixel row.

use crate::image::GrayImage;

use super::percentile::percentile_image;

pub const HIST_BINS: usize = 32;
pub const GLOBAL_CHANNELS: usize = 4 + 2 * HIST_BINS;

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalFeatures {
    /// Mean intensity / 255.
    pub int_mean: f64,
    /// Intensity standard deviation / 255.
    pub int_std: f64,
    pub perc_mean: f64,
    pub perc_std: f64,
    pub int_hist: [f64; HIST_BINS],
    pub int_loghist: [f64; HIST_BINS],
    pub perc_hist: [f64; HIST_BINS],
    pub perc_loghist: [f64; HIST_BINS],
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn normalize(counts: &[u64; HIST_BINS]) -> [f64; HIST_BINS] {
    let total: u64 = counts.iter().sum();
    counts.map(|c| c as f64 / total as f64)
}

/// `log2(1 + h_b)` per bin, renormalized to sum 1.
pub fn log_histogram(hist: &[f64; HIST_BINS]) -> [f64; HIST_BINS] {
    let logged = hist.map(|h| (1.0 + h).log2());
    let total: f64 = logged.iter().sum();
    if total > 0.0 {
        logged.map(|v| v / total)
    } else {
        logged
    }
}

/// Bin of a percentile in `(0, 1]`: `(b/32, (b+1)/32]` maps to `b`.
#[inline]
fn perc_bin(p: f64) -> usize {
    ((p * HIST_BINS as f64).ceil() as usize).clamp(1, HIST_BINS) - 1
}

pub fn global_features(im: &GrayImage) -> GlobalFeatures {
    let (int_mean, int_std) = mean_std(im.data().iter().map(|&v| f64::from(v)));
    let perc = percentile_image(im);
    let (perc_mean, perc_std) = mean_std(perc.iter().copied());

    let mut int_counts = [0u64; HIST_BINS];
    for &v in im.data() {
        int_counts[v as usize * HIST_BINS / 256] += 1;
    }
    let mut perc_counts = [0u64; HIST_BINS];
    for &p in &perc {
        perc_counts[perc_bin(p)] += 1;
    }
    let int_hist = normalize(&int_counts);
    let perc_hist = normalize(&perc_counts);
    GlobalFeatures {
        int_mean: int_mean / 255.0,
        int_std: int_std / 255.0,
        perc_mean,
        perc_std,
        int_loghist: log_histogram(&int_hist),
        perc_loghist: log_histogram(&perc_hist),
        int_hist,
        perc_hist,
    }
}

impl GlobalFeatures {
    /// The 68 emitted channels: four moments, then the two log histograms.
    pub fn channels(&self) -> [f64; GLOBAL_CHANNELS] {
        let mut out = [0.0; GLOBAL_CHANNELS];
        out[0] = self.int_mean;
        out[1] = self.int_std;
        out[2] = self.perc_mean;
        out[3] = self.perc_std;
        out[4..4 + HIST_BINS].copy_from_slice(&self.int_loghist);
        out[4 + HIST_BINS..].copy_from_slice(&self.perc_loghist);
        out
    }
}
