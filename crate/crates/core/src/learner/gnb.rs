//! Gaussian naive Bayes, used to decode training images between the two passes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::{check_rows, par_map_rows, DataView, PixelClassifier};

/// Relative variance smoothing: `1e-9 ×` the largest per-feature variance.
pub const VAR_SMOOTHING: f64 = 1e-9;
/// Absolute floor so degenerate data still has a positive variance.
const MIN_VARIANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GnbModel {
    dim: usize,
    priors: [f64; 2],
    means: [Vec<f64>; 2],
    variances: [Vec<f64>; 2],
    epsilon: f64,
}

impl GnbModel {
    pub fn fit(data: DataView<'_>) -> Result<Self> {
        let counts = data.class_counts();
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::Training(format!(
                "naive Bayes needs both classes, got {} background / {} foreground",
                counts[0], counts[1]
            )));
        }
        let dim = data.dim();
        let n = data.len() as f64;

        let mut sums = [vec![0.0f64; dim], vec![0.0f64; dim]];
        let mut all_sum = vec![0.0f64; dim];
        for i in 0..data.len() {
            let c = data.labels()[i] as usize;
            for (f, &v) in data.row(i).iter().enumerate() {
                sums[c][f] += f64::from(v);
                all_sum[f] += f64::from(v);
            }
        }
        let means: [Vec<f64>; 2] =
            std::array::from_fn(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect());
        let all_mean: Vec<f64> = all_sum.iter().map(|s| s / n).collect();

        let mut sq = [vec![0.0f64; dim], vec![0.0f64; dim]];
        let mut all_sq = vec![0.0f64; dim];
        for i in 0..data.len() {
            let c = data.labels()[i] as usize;
            for (f, &v) in data.row(i).iter().enumerate() {
                let d = f64::from(v) - means[c][f];
                sq[c][f] += d * d;
                let g = f64::from(v) - all_mean[f];
                all_sq[f] += g * g;
            }
        }
        let max_var = all_sq.iter().map(|s| s / n).fold(0.0, f64::max);
        let epsilon = (VAR_SMOOTHING * max_var).max(MIN_VARIANCE);
        let variances = std::array::from_fn(|c| sq[c].iter().map(|s| s / counts[c] as f64 + epsilon).collect());
        Ok(Self {
            dim,
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
            means,
            variances,
            epsilon,
        })
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    pub fn means(&self, class: usize) -> &[f64] {
        &self.means[class]
    }

    pub fn variances(&self, class: usize) -> &[f64] {
        &self.variances[class]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `log P(c) + Σ log N(x_f; μ_cf, σ²_cf)` for both classes.
    pub fn joint_log_likelihood(&self, row: &[f32]) -> [f64; 2] {
        std::array::from_fn(|c| {
            let mut acc = self.priors[c].ln();
            for ((&x, &mu), &var) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                let d = f64::from(x) - mu;
                acc -= 0.5 * (2.0 * PI * var).ln() + d * d / (2.0 * var);
            }
            acc
        })
    }

    /// Posterior log-odds of foreground over background.
    pub fn log_odds(&self, row: &[f32]) -> f64 {
        let [bg, fg] = self.joint_log_likelihood(row);
        fg - bg
    }

    /// Foreground only when strictly more likely; ties are background.
    pub fn predict_row(&self, row: &[f32]) -> u8 {
        let [bg, fg] = self.joint_log_likelihood(row);
        u8::from(fg > bg)
    }
}

impl PixelClassifier for GnbModel {
    fn n_features(&self) -> usize {
        self.dim
    }

    fn predict_rows(&self, rows: &[f32]) -> Result<Vec<u8>> {
        check_rows(rows, self.dim)?;
        Ok(par_map_rows(rows, self.dim, |r| self.predict_row(r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::Dataset;

    fn one_dim(points: &[(f32, u8)]) -> Dataset {
        let mut d = Dataset::new(1);
        for &(x, l) in points {
            d.push(&[x], l);
        }
        d
    }

    #[test]
    fn means_and_priors() {
        let mut pts = Vec::new();
        for i in 0..30 {
            pts.push((i as f32 * 0.01, 0));
        }
        for i in 0..70 {
            pts.push((1.0 + i as f32 * 0.01, 1));
        }
        let d = one_dim(&pts);
        let m = GnbModel::fit(d.view()).unwrap();
        assert!((m.priors()[0] - 0.3).abs() < 1e-15);
        assert!((m.priors()[1] - 0.7).abs() < 1e-15);
        let mean0: f64 = pts[..30].iter().map(|p| f64::from(p.0)).sum::<f64>() / 30.0;
        assert!((m.means(0)[0] - mean0).abs() < 1e-12);
        assert!(m.variances(0).iter().all(|&v| v >= m.epsilon()));
    }

    #[test]
    fn single_class_is_rejected() {
        let d = one_dim(&[(0.0, 1), (1.0, 1)]);
        assert!(matches!(GnbModel::fit(d.view()), Err(Error::Training(_))));
    }

    #[test]
    fn tie_goes_to_background() {
        let d = one_dim(&[(-1.0, 0), (-3.0, 0), (1.0, 1), (3.0, 1)]);
        let m = GnbModel::fit(d.view()).unwrap();
        assert_eq!(m.predict_row(&[0.0]), 0);
        assert_eq!(m.predict_row(&[-2.0]), 0);
        assert_eq!(m.predict_row(&[2.0]), 1);
        assert!(m.predict_rows(&[0.0, 1.0, 5.0]).is_ok());
    }

    #[test]
    fn constant_features_stay_finite() {
        let mut d = Dataset::new(2);
        d.push(&[0.5, 0.0], 0);
        d.push(&[0.5, 1.0], 1);
        let m = GnbModel::fit(d.view()).unwrap();
        assert!(m.log_odds(&[0.5, 0.9]).is_finite());
    }
}
