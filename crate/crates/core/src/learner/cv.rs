//! Stratified k-fold cross-validation over forest hyperparameters.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeding::stream_rng;

use super::{DataView, Dataset, ErtModel, ErtParams, PixelClassifier};

pub const FOLDS: usize = 10;

/// `n_trees ∈ {50, 100, 200} × min_samples_split ∈ {2, 8, 32}`.
pub fn default_grid() -> Vec<ErtParams> {
    let mut grid = Vec::new();
    for n_trees in [50, 100, 200] {
        for min_samples_split in [2, 8, 32] {
            grid.push(ErtParams {
                n_trees,
                min_samples_split,
                ..ErtParams::default()
            });
        }
    }
    grid
}

/// Fold index of every sample: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0);
    let mut fold = vec![0usize; labels.len()];
    let mut next = 0;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Binary F1 of label vectors, foreground positive; 1 when neither has a positive.
pub fn f1_score(pred: &[u8], truth: &[u8]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    pub params: ErtParams,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: usize,
    pub results: Vec<CvResult>,
    pub chosen: ErtParams,
}

impl CvReport {
    pub fn best(&self) -> &CvResult {
        self.results
            .iter()
            .find(|r| r.params == self.chosen)
            .expect("chosen params come from the results")
    }
}

/// Evaluates each grid point by stratified 10-fold F1 and keeps the first with the
/// highest mean.
pub fn cross_validate(data: DataView<'_>, grid: &[ErtParams], seed: u64, fingerprint: u64) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let counts = data.class_counts();
    if counts.iter().any(|&c| c < FOLDS) {
        return Err(Error::Input(format!(
            "cross-validation needs >= {FOLDS} samples per class, got {} / {}",
            counts[0], counts[1]
        )));
    }
    let fold = stratified_folds(data.labels(), FOLDS, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..FOLDS)
        .map(|f| {
            let train: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..data.len()).filter(|&i| fold[i] == f).collect();
            (Dataset::subset(data, &train), Dataset::subset(data, &test))
        })
        .collect();

    let mut results = Vec::with_capacity(grid.len());
    for params in grid {
        let mut fold_f1 = Vec::with_capacity(FOLDS);
        for (f, (train, test)) in splits.iter().enumerate() {
            let model = ErtModel::fit(train.view(), params, seed.wrapping_add(f as u64), fingerprint)?;
            let pred = model.predict_rows(&test.rows)?;
            fold_f1.push(f1_score(&pred, &test.labels));
        }
        let mean = fold_f1.iter().sum::<f64>() / FOLDS as f64;
        let var = fold_f1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / FOLDS as f64;
        log::info!(
            "cv n_trees={} min_samples_split={}: mean F1 {:.4}",
            params.n_trees,
            params.min_samples_split,
            mean
        );
        results.push(CvResult {
            params: *params,
            fold_f1,
            mean_f1: mean,
            std_f1: var.sqrt(),
        });
    }
    let chosen = results
        .iter()
        .fold(None::<&CvResult>, |best, r| match best {
            Some(b) if b.mean_f1 >= r.mean_f1 => Some(b),
            _ => Some(r),
        })
        .expect("grid is nonempty")
        .params;
    Ok(CvReport {
        folds: FOLDS,
        results,
        chosen,
    })
}
