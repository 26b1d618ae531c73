//! Sixteen-way pixel taxonomy and subclass-balanced sample drawing.
//!
//! Each pixel gets a 4-bit code: bit 0 Otsu foreground, bit 1 Niblack foreground,
//! bit 2 within `s` pixels (Chebyshev) of a ground-truth edge, bit 3 ground-truth
//! foreground. Training draws the same number of pixels from every subclass.

use std::io::{BufReader, Read};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, StrokeWidth};
use crate::fsutil::{self, atomic_write};
use crate::image::{check_dims, GrayImage, LabelImage};
use crate::learner::DataView;
use crate::seeding::stream_rng;
use crate::thresholders::{binarize_niblack, binarize_otsu, NiblackParams};

pub const SUBCLASSES: usize = 16;

pub const BIT_OTSU: u8 = 1;
pub const BIT_NIBLACK: u8 = 2;
pub const BIT_EDGE: u8 = 4;
pub const BIT_GT: u8 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// First-pass draws per image.
    pub first_pass: usize,
    /// Second-pass erroneous draws per image.
    pub second_pass: usize,
    pub niblack_k: f64,
    /// Niblack window for the subclass bits; derived from the stroke width when absent.
    pub niblack_window: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            first_pass: 9600,
            second_pass: 9600,
            niblack_k: -0.2,
            niblack_window: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.first_pass < SUBCLASSES {
            return Err(Error::Config(format!(
                "first_pass must be >= {SUBCLASSES}, got {}",
                self.first_pass
            )));
        }
        if self.second_pass != 0 && self.second_pass < SUBCLASSES {
            return Err(Error::Config(format!(
                "second_pass must be 0 or >= {SUBCLASSES}, got {}",
                self.second_pass
            )));
        }
        self.niblack(StrokeWidth::new(1, 4, 4)).validate()
    }

    pub fn niblack(&self, s: StrokeWidth) -> NiblackParams {
        match self.niblack_window {
            Some(window) => NiblackParams {
                k: self.niblack_k,
                window,
            },
            None => NiblackParams::for_stroke_width(self.niblack_k, s.get()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubclassMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl SubclassMap {
    pub fn new(width: usize, height: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != width * height || codes.iter().any(|&c| c as usize >= SUBCLASSES) {
            return Err(Error::Input("invalid subclass codes".into()));
        }
        Ok(Self {
            width,
            height,
            codes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    pub fn populations(&self) -> [usize; SUBCLASSES] {
        let mut pops = [0; SUBCLASSES];
        for &c in &self.codes {
            pops[c as usize] += 1;
        }
        pops
    }
}

impl crate::image::Dims for SubclassMap {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Ground-truth boundary pixels: any pixel with a 4-neighbour of the opposite label.
pub fn gt_edges(gt: &LabelImage) -> Vec<u8> {
    let (w, h) = (gt.width(), gt.height());
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = gt.get(x, y);
            let differs = (x > 0 && gt.get(x - 1, y) != v)
                || (x + 1 < w && gt.get(x + 1, y) != v)
                || (y > 0 && gt.get(x, y - 1) != v)
                || (y + 1 < h && gt.get(x, y + 1) != v);
            out[y * w + x] = u8::from(differs);
        }
    }
    out
}

pub fn subclass_map(
    im: &GrayImage,
    gt: &LabelImage,
    s: StrokeWidth,
    niblack: &NiblackParams,
) -> Result<SubclassMap> {
    check_dims(im, gt)?;
    let (w, h) = (im.width(), im.height());
    let otsu = binarize_otsu(im);
    let nib = binarize_niblack(im, niblack);
    let side = 2 * s.get() + 1;
    let near_edge = crate::window::window_max(&gt_edges(gt), w, h, side, side);
    let codes = (0..w * h)
        .map(|i| {
            otsu.data()[i] * BIT_OTSU
                | nib.data()[i] * BIT_NIBLACK
                | near_edge[i] * BIT_EDGE
                | gt.data()[i] * BIT_GT
        })
        .collect();
    SubclassMap::new(w, h, codes)
}

/// Water-filling allocation of `n_total` draws over subclass populations.
///
/// Every subclass receives the common quota or its whole population if smaller; the
/// shortfall is spread over the remaining subclasses until the budget or the pixels run
/// out. Leftover single draws go to the lowest codes.
pub fn allocate(populations: &[usize; SUBCLASSES], n_total: usize) -> [usize; SUBCLASSES] {
    let mut alloc = [0usize; SUBCLASSES];
    let mut budget = n_total.min(populations.iter().sum());
    loop {
        let active: Vec<usize> = (0..SUBCLASSES).filter(|&c| alloc[c] < populations[c]).collect();
        if budget == 0 || active.is_empty() {
            break;
        }
        let share = budget / active.len();
        if share == 0 {
            for &c in active.iter().take(budget) {
                alloc[c] += 1;
            }
            break;
        }
        for &c in &active {
            let give = share.min(populations[c] - alloc[c]);
            alloc[c] += give;
            budget -= give;
        }
    }
    alloc
}

/// Balanced draw without replacement from `candidates` (flat pixel indices).
///
/// Output is grouped by subclass code and sorted within each group.
pub fn balanced_sample_from<R: Rng>(
    sm: &SubclassMap,
    candidates: impl Iterator<Item = usize>,
    n_total: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); SUBCLASSES];
    for p in candidates {
        groups[sm.codes[p] as usize].push(p);
    }
    let pops: [usize; SUBCLASSES] = std::array::from_fn(|c| groups[c].len());
    let alloc = allocate(&pops, n_total);
    let mut out = Vec::with_capacity(alloc.iter().sum());
    for (group, &k) in groups.iter().zip(&alloc) {
        let mut picked: Vec<usize> = index::sample(rng, group.len(), k).into_iter().map(|i| group[i]).collect();
        picked.sort_unstable();
        out.extend(picked);
    }
    out
}

pub fn balanced_sample_with<R: Rng>(sm: &SubclassMap, n_total: usize, rng: &mut R) -> Vec<usize> {
    balanced_sample_from(sm, 0..sm.codes.len(), n_total, rng)
}

/// Subclass-balanced pixel draw, deterministic in `seed`.
pub fn balanced_sample(sm: &SubclassMap, n_total: usize, seed: u64) -> Result<Vec<usize>> {
    if n_total < SUBCLASSES {
        return Err(Error::Input(format!("n_total must be >= {SUBCLASSES}, got {n_total}")));
    }
    Ok(balanced_sample_with(sm, n_total, &mut stream_rng(seed, 0)))
}

pub fn mine_errors_with<R: Rng>(
    pred: &LabelImage,
    gt: &LabelImage,
    sm: &SubclassMap,
    n_total: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_dims(pred, gt)?;
    check_dims(sm, gt)?;
    let pool = (0..gt.len()).filter(|&i| pred.data()[i] != gt.data()[i]);
    Ok(balanced_sample_from(sm, pool, n_total, rng))
}

/// Balanced draw restricted to misclassified pixels.
pub fn mine_errors(
    pred: &LabelImage,
    gt: &LabelImage,
    sm: &SubclassMap,
    n_total: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    mine_errors_with(pred, gt, sm, n_total, &mut stream_rng(seed, 0))
}

const SAMPLE_MAGIC: &[u8; 8] = b"DBSAMPL\0";
const SAMPLE_VERSION: u32 = 1;

/// Labelled feature rows with their subclass codes and source images.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    dim: usize,
    fingerprint: u64,
    seed: u64,
    rows: Vec<f32>,
    labels: Vec<u8>,
    subclasses: Vec<u8>,
    image_ids: Vec<u32>,
}

impl SampleSet {
    pub fn empty(dim: usize, fingerprint: u64, seed: u64) -> Self {
        Self {
            dim,
            fingerprint,
            seed,
            rows: Vec::new(),
            labels: Vec::new(),
            subclasses: Vec::new(),
            image_ids: Vec::new(),
        }
    }

    /// Rows drawn from one image; labels are recovered from bit 3 of the codes.
    pub fn from_image(image_id: u32, matrix: FeatureMatrix, pixels: &[usize], sm: &SubclassMap, seed: u64) -> Result<Self> {
        if matrix.n_rows() != pixels.len() {
            return Err(Error::Input("feature rows and pixel list differ in length".into()));
        }
        let subclasses: Vec<u8> = pixels.iter().map(|&p| sm.codes[p]).collect();
        Ok(Self {
            dim: matrix.dim(),
            fingerprint: matrix.fingerprint(),
            seed,
            labels: subclasses.iter().map(|&c| u8::from(c & BIT_GT != 0)).collect(),
            subclasses,
            image_ids: vec![image_id; pixels.len()],
            rows: matrix.into_vec(),
        })
    }

    pub fn append(&mut self, other: SampleSet) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() {
            self.dim = other.dim;
            self.fingerprint = other.fingerprint;
        }
        if other.dim != self.dim || other.fingerprint != self.fingerprint {
            return Err(Error::SchemaMismatch {
                model: self.fingerprint,
                features: other.fingerprint,
            });
        }
        self.rows.extend(other.rows);
        self.labels.extend(other.labels);
        self.subclasses.extend(other.subclasses);
        self.image_ids.extend(other.image_ids);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &[f32] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subclasses(&self) -> &[u8] {
        &self.subclasses
    }

    pub fn image_ids(&self) -> &[u32] {
        &self.image_ids
    }

    pub fn view(&self) -> DataView<'_> {
        DataView::new(self.dim, &self.rows, &self.labels).expect("sample set invariants")
    }

    pub fn subclass_counts(&self) -> [usize; SUBCLASSES] {
        let mut counts = [0; SUBCLASSES];
        for &c in &self.subclasses {
            counts[c as usize] += 1;
        }
        counts
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        atomic_write(path.as_ref(), |w| {
            w.write_all(SAMPLE_MAGIC)?;
            w.write_all(&SAMPLE_VERSION.to_le_bytes())?;
            w.write_all(&self.fingerprint.to_le_bytes())?;
            w.write_all(&(self.dim as u32).to_le_bytes())?;
            w.write_all(&(self.len() as u64).to_le_bytes())?;
            w.write_all(&self.seed.to_le_bytes())?;
            for v in &self.rows {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.labels)?;
            w.write_all(&self.subclasses)?;
            for id in &self.image_ids {
                w.write_all(&id.to_le_bytes())?;
            }
            Ok(())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        Self::read_from(&mut r).map_err(|e| match e {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::Input(format!("truncated sample file {}", path.display()))
            }
            other => other,
        })
    }

    fn read_from(r: &mut impl Read) -> Result<Self> {
        let io = |e| Error::io("<sample stream>", e);
        let magic: [u8; 8] = fsutil::read_exact(r).map_err(io)?;
        if &magic != SAMPLE_MAGIC {
            return Err(Error::Input("not a sample file".into()));
        }
        let version = fsutil::read_u32(r).map_err(io)?;
        if version != SAMPLE_VERSION {
            return Err(Error::Input(format!("unsupported sample file version {version}")));
        }
        let fingerprint = fsutil::read_u64(r).map_err(io)?;
        let dim = fsutil::read_u32(r).map_err(io)? as usize;
        let n = fsutil::read_u64(r).map_err(io)? as usize;
        let seed = fsutil::read_u64(r).map_err(io)?;
        if dim == 0 || n.checked_mul(dim).is_none_or(|v| v > (1 << 34)) {
            return Err(Error::Input("implausible sample file header".into()));
        }
        let mut raw = vec![0u8; n * dim * 4];
        r.read_exact(&mut raw).map_err(io)?;
        let rows = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let mut labels = vec![0u8; n];
        r.read_exact(&mut labels).map_err(io)?;
        let mut subclasses = vec![0u8; n];
        r.read_exact(&mut subclasses).map_err(io)?;
        let mut raw_ids = vec![0u8; n * 4];
        r.read_exact(&mut raw_ids).map_err(io)?;
        let image_ids = raw_ids
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if labels.iter().any(|&l| l > 1) || subclasses.iter().any(|&c| c as usize >= SUBCLASSES) {
            return Err(Error::Input("corrupt labels in sample file".into()));
        }
        Ok(Self {
            dim,
            fingerprint,
            seed,
            rows,
            labels,
            subclasses,
            image_ids,
        })
    }
}
