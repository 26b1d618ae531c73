//! Classifiers over feature rows: Gaussian naive Bayes, extremely randomized trees,
//! cross-validation and the two-pass training pipeline.

pub mod cv;
pub mod ert;
pub mod gnb;
pub mod pipeline;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureSchema, FEATURE_DIM};
use crate::image::LabelImage;

pub use cv::{cross_validate, default_grid, stratified_folds, CvReport, CvResult};
pub use ert::{path_violations, ErtModel, ErtParams, FamilyImportance, Node, Tree};
pub use gnb::GnbModel;
pub use pipeline::{train_pipeline, ImageSampleStats, TrainConfig, TrainOutcome, TrainingImage};

/// Borrowed row-major feature rows with binary labels.
#[derive(Clone, Copy, Debug)]
pub struct DataView<'a> {
    dim: usize,
    rows: &'a [f32],
    labels: &'a [u8],
}

impl<'a> DataView<'a> {
    pub fn new(dim: usize, rows: &'a [f32], labels: &'a [u8]) -> Result<Self> {
        if dim == 0 || rows.len() != dim * labels.len() {
            return Err(Error::Input(format!(
                "{} feature values do not match {} labels of dimension {dim}",
                rows.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Input("labels must be 0 or 1".into()));
        }
        Ok(Self { dim, rows, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> &'a [f32] {
        self.rows
    }

    pub fn labels(&self) -> &'a [u8] {
        self.labels
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }
}

/// Owned counterpart of [`DataView`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub rows: Vec<f32>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f32], label: u8) {
        assert_eq!(row.len(), self.dim, "row length");
        self.rows.extend_from_slice(row);
        self.labels.push(label);
    }

    pub fn view(&self) -> DataView<'_> {
        DataView::new(self.dim, &self.rows, &self.labels).expect("dataset invariants")
    }

    /// Rows at `indices`, in order.
    pub fn subset(view: DataView<'_>, indices: &[usize]) -> Self {
        let mut out = Self::new(view.dim());
        for &i in indices {
            out.push(view.row(i), view.labels()[i]);
        }
        out
    }
}

/// A binary classifier over feature rows.
pub trait PixelClassifier: Sync {
    fn n_features(&self) -> usize;

    /// Feature schema the classifier was trained under, if it records one.
    fn schema_fingerprint(&self) -> Option<u64> {
        None
    }

    /// Labels for row-major `rows`; `rows.len()` must be a multiple of `n_features`.
    fn predict_rows(&self, rows: &[f32]) -> Result<Vec<u8>>;
}

/// Image rows processed per block when classifying whole images.
const LINES_PER_BLOCK: usize = 32;

/// Classifies every pixel, streaming feature rows block by block.
pub fn predict_image<C: PixelClassifier + ?Sized>(clf: &C, extractor: &FeatureExtractor<'_>) -> Result<LabelImage> {
    if clf.n_features() != FEATURE_DIM {
        return Err(Error::Model(format!(
            "classifier expects {} features, extractor produces {FEATURE_DIM}",
            clf.n_features()
        )));
    }
    if let Some(fp) = clf.schema_fingerprint() {
        let current = FeatureSchema::get().fingerprint();
        if fp != current {
            return Err(Error::SchemaMismatch {
                model: fp,
                features: current,
            });
        }
    }
    let im = extractor.image();
    let (w, h) = (im.width(), im.height());
    let mut labels = Vec::with_capacity(w * h);
    for y0 in (0..h).step_by(LINES_PER_BLOCK) {
        let y1 = (y0 + LINES_PER_BLOCK).min(h);
        let rows = extractor.rows_for_lines(y0, y1);
        labels.extend(clf.predict_rows(&rows)?);
    }
    LabelImage::new(w, h, labels)
}

pub(crate) fn check_rows(rows: &[f32], dim: usize) -> Result<()> {
    if dim == 0 || rows.len() % dim != 0 {
        return Err(Error::Input(format!(
            "{} values are not a whole number of rows of dimension {dim}",
            rows.len()
        )));
    }
    Ok(())
}

pub(crate) fn par_map_rows<T: Send>(rows: &[f32], dim: usize, f: impl Fn(&[f32]) -> T + Sync + Send) -> Vec<T> {
    rows.par_chunks_exact(dim).map(f).collect()
}
