//! Binarization quality: F-measure, PSNR and distance-reciprocal distortion.
//!
//! Foreground is the positive class. DRD uses a 5×5 reciprocal-distance weight matrix
//! and counts non-uniform 8×8 ground-truth blocks; blocks are tiled from the top-left
//! corner and partial blocks at the right and bottom edges count. Neighbors outside the
//! image contribute nothing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::gt_key;
use crate::error::{Error, Result};
use crate::image::{check_dims, LabelImage, Polarity};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 100.0;
pub const DRD_BLOCK: usize = 8;
const DRD_RADIUS: usize = 2;
const DRD_SIDE: usize = 2 * DRD_RADIUS + 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn of(pred: &LabelImage, gt: &LabelImage) -> Result<Self> {
        check_dims(pred, gt)?;
        let mut c = Confusion::default();
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            match (p, g) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// F-measure in percent. Both foregrounds empty scores 100; otherwise an empty
    /// prediction or empty ground truth scores 0.
    pub fn f1_percent(&self) -> f64 {
        if self.tp + self.fp == 0 && self.tp + self.fn_ == 0 {
            return 100.0;
        }
        if self.tp == 0 {
            return 0.0;
        }
        let p = self.tp as f64 / (self.tp + self.fp) as f64;
        let r = self.tp as f64 / (self.tp + self.fn_) as f64;
        100.0 * 2.0 * p * r / (p + r)
    }

    /// `10·log10(1 / MSE)` with MSE the fraction of disagreeing pixels, capped at 100 dB.
    pub fn psnr(&self) -> f64 {
        if self.errors() == 0 {
            return PSNR_CAP;
        }
        let mse = self.errors() as f64 / self.total() as f64;
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

pub fn f1(pred: &LabelImage, gt: &LabelImage) -> Result<f64> {
    Ok(Confusion::of(pred, gt)?.f1_percent())
}

pub fn psnr(pred: &LabelImage, gt: &LabelImage) -> Result<f64> {
    Ok(Confusion::of(pred, gt)?.psnr())
}

/// Normalized 5×5 weights `1/sqrt(i² + j²)`, zero at the center.
pub fn drd_weights() -> [[f64; DRD_SIDE]; DRD_SIDE] {
    let mut w = [[0.0; DRD_SIDE]; DRD_SIDE];
    let mut total = 0.0;
    for (r, row) in w.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (di, dj) = (r as f64 - DRD_RADIUS as f64, c as f64 - DRD_RADIUS as f64);
            if di != 0.0 || dj != 0.0 {
                *v = 1.0 / (di * di + dj * dj).sqrt();
                total += *v;
            }
        }
    }
    for v in w.iter_mut().flatten() {
        *v /= total;
    }
    w
}

/// Number of 8×8 ground-truth blocks holding both labels.
pub fn nubn(gt: &LabelImage) -> usize {
    let (w, h) = (gt.width(), gt.height());
    let mut count = 0;
    for by in (0..h).step_by(DRD_BLOCK) {
        for bx in (0..w).step_by(DRD_BLOCK) {
            let mut seen = [false; 2];
            for y in by..(by + DRD_BLOCK).min(h) {
                for x in bx..(bx + DRD_BLOCK).min(w) {
                    seen[gt.get(x, y) as usize] = true;
                }
            }
            count += usize::from(seen[0] && seen[1]);
        }
    }
    count
}

/// Weighted disagreement of a flipped pixel's predicted value with its ground-truth
/// neighborhood.
fn drd_at(pred: &LabelImage, gt: &LabelImage, x: usize, y: usize, weights: &[[f64; DRD_SIDE]; DRD_SIDE]) -> f64 {
    let p = pred.get(x, y);
    let mut acc = 0.0;
    for (r, row) in weights.iter().enumerate() {
        let Some(yy) = (y + r).checked_sub(DRD_RADIUS).filter(|&v| v < gt.height()) else {
            continue;
        };
        for (c, &wt) in row.iter().enumerate() {
            let Some(xx) = (x + c).checked_sub(DRD_RADIUS).filter(|&v| v < gt.width()) else {
                continue;
            };
            if gt.get(xx, yy) != p {
                acc += wt;
            }
        }
    }
    acc
}

/// Distance-reciprocal distortion. Undefined when the ground truth has no non-uniform block.
pub fn drd(pred: &LabelImage, gt: &LabelImage) -> Result<f64> {
    check_dims(pred, gt)?;
    let blocks = nubn(gt);
    if blocks == 0 {
        return Err(Error::Metric(
            "DRD undefined: ground truth has no non-uniform 8x8 block".into(),
        ));
    }
    let weights = drd_weights();
    let w = gt.width();
    let sum: f64 = (0..gt.height())
        .into_par_iter()
        .map(|y| {
            (0..w)
                .filter(|&x| pred.get(x, y) != gt.get(x, y))
                .map(|x| drd_at(pred, gt, x, y, &weights))
                .fold(0.0, |a, b| a + b)
        })
        .collect::<Vec<f64>>()
        .iter()
        .fold(0.0, |a, b| a + b);
    Ok(sum / blocks as f64)
}

/// Scores of one image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub name: String,
    pub f1: f64,
    pub psnr: f64,
    /// `None` when DRD is undefined for this ground truth.
    pub drd: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl EvalRecord {
    pub fn compute(name: impl Into<String>, pred: &LabelImage, gt: &LabelImage) -> Result<Self> {
        let c = Confusion::of(pred, gt)?;
        let name = name.into();
        let drd = match drd(pred, gt) {
            Ok(v) => Some(v),
            Err(Error::Metric(msg)) => {
                log::warn!("{name}: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            name,
            f1: c.f1_percent(),
            psnr: c.psnr(),
            drd,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        })
    }
}

/// Per-image scores and their unweighted means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub mean_f1: f64,
    pub mean_psnr: f64,
    /// Mean over images where DRD is defined.
    pub mean_drd: Option<f64>,
}

impl EvalReport {
    pub fn from_records(records: Vec<EvalRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Input("no images to evaluate".into()));
        }
        let n = records.len() as f64;
        let drds: Vec<f64> = records.iter().filter_map(|r| r.drd).collect();
        Ok(Self {
            mean_f1: records.iter().map(|r| r.f1).sum::<f64>() / n,
            mean_psnr: records.iter().map(|r| r.psnr).sum::<f64>() / n,
            mean_drd: (!drds.is_empty()).then(|| drds.iter().sum::<f64>() / drds.len() as f64),
            records,
        })
    }

    /// Aligned table with columns name, F1%, PSNR, DRD and a closing mean row.
    pub fn table(&self) -> String {
        let width = self
            .records
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(0)
            .max(4);
        let drd = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |d| format!("{d:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>7}  {:>7}", "name", "F1%", "PSNR", "DRD");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7.2}  {:>7.2}  {:>7}",
                r.name,
                r.f1,
                r.psnr,
                drd(r.drd)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>7.2}  {:>7.2}  {:>7}",
            "mean",
            self.mean_f1,
            self.mean_psnr,
            drd(self.mean_drd)
        );
        out
    }

    /// One tab-separated record per image: name, f1, psnr, drd, tp, fp, fn.
    pub fn tsv(&self) -> String {
        let mut out = String::from("name\tf1\tpsnr\tdrd\ttp\tfp\tfn\n");
        for r in &self.records {
            let drd = r.drd.map_or_else(|| "nan".to_string(), |d| format!("{d:.6}"));
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{drd}\t{}\t{}\t{}",
                r.name, r.f1, r.psnr, r.tp, r.fp, r.fn_
            );
        }
        out
    }
}

pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "bmp", "tif", "tiff"];

/// Image files in `dir` keyed by file stem.
pub fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Pairs predictions with ground truth by file stem and scores every pair.
///
/// Ground-truth stems may carry a `_gt` suffix in any letter case. Files without a
/// partner are listed in the error when nothing pairs up, and logged otherwise.
pub fn evaluate_corpus(pred_dir: &Path, gt_dir: &Path, polarity: Polarity) -> Result<EvalReport> {
    let preds = images_by_stem(pred_dir)?;
    let gts: BTreeMap<String, PathBuf> = images_by_stem(gt_dir)?
        .into_iter()
        .map(|(stem, path)| (gt_key(&stem).to_string(), path))
        .collect();
    let pairs: Vec<(&String, &PathBuf, &PathBuf)> = preds
        .iter()
        .filter_map(|(stem, p)| gts.get(stem).map(|g| (stem, p, g)))
        .collect();
    let unmatched: Vec<String> = preds
        .keys()
        .filter(|s| !gts.contains_key(*s))
        .map(|s| format!("{} (prediction)", s))
        .chain(gts.keys().filter(|s| !preds.contains_key(*s)).map(|s| format!("{s} (ground truth)")))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Input(format!(
            "no prediction/ground-truth pairs; unmatched: {}",
            if unmatched.is_empty() { "none".to_string() } else { unmatched.join(", ") }
        )));
    }
    for u in &unmatched {
        log::warn!("unmatched file {u}");
    }
    let records = pairs
        .par_iter()
        .map(|(stem, p, g)| {
            let pred = LabelImage::load(p, polarity)?;
            let gt = LabelImage::load(g, polarity)?;
            EvalRecord::compute(stem.as_str(), &pred, &gt)
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_records(records)
}
