//! Extremely randomized trees: random candidate features, one random cut each, best
//! Gini decrease kept, every tree grown on the full sample.

use std::io::{BufReader, Read};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Family, FeatureSchema, FeatureMatrix, FEATURE_DIM};
use crate::fsutil::{self, atomic_write};
use crate::seeding::stream_rng;

use super::{check_rows, par_map_rows, DataView, PixelClassifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErtParams {
    pub n_trees: usize,
    /// Candidate features drawn per node; `ceil(sqrt(dim))` when absent.
    pub k_features: Option<usize>,
    pub min_samples_split: usize,
    /// Unlimited when absent.
    pub max_depth: Option<usize>,
}

impl Default for ErtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            k_features: None,
            min_samples_split: 2,
            max_depth: None,
        }
    }
}

impl ErtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if self.k_features == Some(0) {
            return Err(Error::Config("k_features must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config(format!(
                "min_samples_split must be >= 2, got {}",
                self.min_samples_split
            )));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        Ok(())
    }

    pub fn k_for(&self, dim: usize) -> usize {
        self.k_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1))
    }
}

/// Sentinel child index and feature of a leaf.
pub const LEAF: u32 = u32::MAX;
const LEAF_FEATURE: u16 = u16::MAX;

/// One node; rows with `x[feature] < threshold` go left. Every node keeps the class
/// counts of the training rows that reached it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub feature: u16,
    pub threshold: f32,
    pub left: u32,
    pub right: u32,
    pub counts: [u32; 2],
}

impl Node {
    pub fn leaf(counts: [u32; 2]) -> Self {
        Self {
            feature: LEAF_FEATURE,
            threshold: 0.0,
            left: LEAF,
            right: LEAF,
            counts,
        }
    }

    pub fn split(feature: u16, threshold: f32, left: u32, right: u32, counts: [u32; 2]) -> Self {
        Self {
            feature,
            threshold,
            left,
            right,
            counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left == LEAF
    }

    pub fn fg_fraction(&self) -> f64 {
        let total = self.counts[0] + self.counts[1];
        f64::from(self.counts[1]) / f64::from(total)
    }
}

/// A binary tree stored as a node array with the root at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Checks structure: children point forward, features are in range, leaves are nonempty.
    pub fn new(nodes: Vec<Node>, dim: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Model("tree without nodes".into()));
        }
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.is_leaf() {
                if node.right != LEAF || node.counts[0] + node.counts[1] == 0 {
                    return Err(Error::Model(format!("malformed leaf at node {i}")));
                }
                continue;
            }
            let ok = (node.feature as usize) < dim
                && node.threshold.is_finite()
                && (node.left as usize) > i
                && (node.right as usize) > i
                && (node.left as usize) < n
                && (node.right as usize) < n;
            if !ok {
                return Err(Error::Model(format!("malformed split at node {i}")));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f32]) -> usize {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.is_leaf() {
                return i;
            }
            i = if row[node.feature as usize] < node.threshold {
                node.left
            } else {
                node.right
            } as usize;
        }
    }

    /// Node indices from the root to the leaf reached by `row`.
    pub fn path(&self, row: &[f32]) -> Vec<usize> {
        let mut path = vec![0];
        let mut i = 0;
        while !self.nodes[i].is_leaf() {
            let node = &self.nodes[i];
            i = if row[node.feature as usize] < node.threshold {
                node.left
            } else {
                node.right
            } as usize;
            path.push(i);
        }
        path
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.is_leaf() {
                depth[node.left as usize] = depth[i] + 1;
                depth[node.right as usize] = depth[i] + 1;
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

fn gini(counts: [u32; 2]) -> f64 {
    let n = f64::from(counts[0] + counts[1]);
    if n == 0.0 {
        return 0.0;
    }
    let p = f64::from(counts[1]) / n;
    2.0 * p * (1.0 - p)
}

/// Sample-weighted impurity decrease `n·G(node) − n_l·G(left) − n_r·G(right)`.
fn weighted_decrease(parent: [u32; 2], left: [u32; 2]) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let n = |c: [u32; 2]| f64::from(c[0] + c[1]);
    n(parent) * gini(parent) - n(left) * gini(left) - n(right) * gini(right)
}

/// Column-major copy of the training rows.
struct Columns {
    n: usize,
    data: Vec<f32>,
}

impl Columns {
    fn new(view: DataView<'_>) -> Self {
        let (n, dim) = (view.len(), view.dim());
        let mut data = vec![0f32; n * dim];
        for i in 0..n {
            for (f, &v) in view.row(i).iter().enumerate() {
                data[f * n + i] = v;
            }
        }
        Self { n, data }
    }

    #[inline]
    fn col(&self, f: usize) -> &[f32] {
        &self.data[f * self.n..(f + 1) * self.n]
    }
}

/// Uniform cut with `lo < t <= hi`, so both sides of `x < t` are nonempty.
fn draw_cut<R: Rng>(rng: &mut R, lo: f32, hi: f32) -> f32 {
    let u: f64 = rng.random();
    let t = (f64::from(lo) + u * (f64::from(hi) - f64::from(lo))) as f32;
    if t > lo && t <= hi {
        t
    } else {
        hi
    }
}

struct Grower<'a> {
    cols: &'a Columns,
    labels: &'a [u8],
    dim: usize,
    k: usize,
    min_samples_split: usize,
    max_depth: usize,
}

impl Grower<'_> {
    fn counts(&self, idx: &[u32]) -> [u32; 2] {
        let pos = idx.iter().filter(|&&i| self.labels[i as usize] == 1).count() as u32;
        [idx.len() as u32 - pos, pos]
    }

    /// Best (feature, cut) among up to `k` non-constant random candidates.
    fn choose_split<R: Rng>(&self, idx: &[u32], counts: [u32; 2], rng: &mut R) -> Option<(usize, f32)> {
        let mut order: Vec<usize> = (0..self.dim).collect();
        let mut best: Option<(f64, usize, f32)> = None;
        let mut drawn = 0;
        for j in 0..self.dim {
            if drawn == self.k {
                break;
            }
            let r = rng.random_range(j..self.dim);
            order.swap(j, r);
            let f = order[j];
            let col = self.cols.col(f);
            let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
            for &i in idx {
                let v = col[i as usize];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(lo < hi) {
                continue;
            }
            drawn += 1;
            let t = draw_cut(rng, lo, hi);
            let mut left = [0u32; 2];
            for &i in idx {
                if col[i as usize] < t {
                    left[self.labels[i as usize] as usize] += 1;
                }
            }
            let gain = weighted_decrease(counts, left);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, t));
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow<R: Rng>(&self, rng: &mut R) -> Tree {
        let mut idx: Vec<u32> = (0..self.labels.len() as u32).collect();
        let mut nodes = vec![Node::leaf(self.counts(&idx))];
        // (node, start, end, depth)
        let mut stack = vec![(0usize, 0usize, idx.len(), 0usize)];
        while let Some((id, lo, hi, depth)) = stack.pop() {
            let counts = nodes[id].counts;
            let pure = counts[0] == 0 || counts[1] == 0;
            if pure || hi - lo < self.min_samples_split || depth >= self.max_depth {
                continue;
            }
            let Some((f, t)) = self.choose_split(&idx[lo..hi], counts, rng) else {
                continue;
            };
            let col = self.cols.col(f);
            let mut mid = lo;
            for j in lo..hi {
                if col[idx[j] as usize] < t {
                    idx.swap(j, mid);
                    mid += 1;
                }
            }
            let left = nodes.len() as u32;
            nodes.push(Node::leaf(self.counts(&idx[lo..mid])));
            nodes.push(Node::leaf(self.counts(&idx[mid..hi])));
            nodes[id] = Node::split(f as u16, t, left, left + 1, counts);
            stack.push((left as usize + 1, mid, hi, depth + 1));
            stack.push((left as usize, lo, mid, depth + 1));
        }
        Tree { nodes }
    }
}

/// Overall and per-channel importance of one feature family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyImportance {
    pub family: Family,
    /// Sum over member channels.
    pub overall: f64,
    /// `overall` divided by the family's channel count.
    pub dimensional: f64,
}

const MODEL_MAGIC: &[u8; 8] = b"DBFOREST";
const MODEL_VERSION: u32 = 1;
const NODE_BYTES: usize = 2 + 4 + 4 + 4 + 8;

/// Trained forest with the schema fingerprint of its feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ErtModel {
    dim: usize,
    params: ErtParams,
    fingerprint: u64,
    seed: u64,
    trees: Vec<Tree>,
}

impl ErtModel {
    /// Grows `params.n_trees` trees; tree `t` draws from stream `t` of `seed`.
    pub fn fit(data: DataView<'_>, params: &ErtParams, seed: u64, fingerprint: u64) -> Result<Self> {
        params.validate()?;
        if data.is_empty() {
            return Err(Error::Training("no training samples".into()));
        }
        if data.dim() > usize::from(LEAF_FEATURE) {
            return Err(Error::Training(format!("{} features exceed the node format", data.dim())));
        }
        if data.len() >= LEAF as usize {
            return Err(Error::Training(format!("{} samples exceed the node format", data.len())));
        }
        let cols = Columns::new(data);
        let grower = Grower {
            cols: &cols,
            labels: data.labels(),
            dim: data.dim(),
            k: params.k_for(data.dim()),
            min_samples_split: params.min_samples_split,
            max_depth: params.max_depth.unwrap_or(usize::MAX),
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| grower.grow(&mut stream_rng(seed, t as u64)))
            .collect();
        Ok(Self {
            dim: data.dim(),
            params: *params,
            fingerprint,
            seed,
            trees,
        })
    }

    /// Assembles a model from explicit trees.
    pub fn from_trees(dim: usize, params: ErtParams, fingerprint: u64, seed: u64, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Model("forest without trees".into()));
        }
        for tree in &trees {
            Tree::new(tree.nodes.clone(), dim)?;
        }
        Ok(Self {
            dim,
            params: ErtParams {
                n_trees: trees.len(),
                ..params
            },
            fingerprint,
            seed,
            trees,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ErtParams {
        &self.params
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean over trees of the leaf foreground fraction.
    pub fn predict_proba_row(&self, row: &[f32]) -> f64 {
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| t.nodes[t.leaf_index(row)].fg_fraction())
            .sum();
        sum / self.trees.len() as f64
    }

    /// Foreground iff the probability exceeds one half.
    pub fn predict_row(&self, row: &[f32]) -> u8 {
        u8::from(self.predict_proba_row(row) > 0.5)
    }

    pub fn predict_proba(&self, rows: &[f32]) -> Result<Vec<f64>> {
        self.check_dim(rows)?;
        Ok(par_map_rows(rows, self.dim, |r| self.predict_proba_row(r)))
    }

    /// Labels for a feature matrix, refusing rows from a different schema.
    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<Vec<u8>> {
        self.check_schema(m.fingerprint())?;
        self.predict_rows(m.as_slice())
    }

    pub fn check_schema(&self, fingerprint: u64) -> Result<()> {
        if fingerprint != self.fingerprint {
            return Err(Error::SchemaMismatch {
                model: self.fingerprint,
                features: fingerprint,
            });
        }
        Ok(())
    }

    fn check_dim(&self, rows: &[f32]) -> Result<()> {
        check_rows(rows, self.dim)
    }

    /// Mean decrease in Gini impurity per feature, normalized to sum 1.
    ///
    /// A forest without any split has no impurity decrease; it reports uniform importance.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut imp = vec![0.0f64; self.dim];
        for tree in &self.trees {
            for node in tree.nodes.iter().filter(|n| !n.is_leaf()) {
                let left = tree.nodes[node.left as usize].counts;
                imp[node.feature as usize] += weighted_decrease(node.counts, left).max(0.0);
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        } else {
            imp.fill(1.0 / self.dim as f64);
        }
        imp
    }

    /// Importances grouped by feature family; requires the full 142-channel schema.
    pub fn family_importances(&self) -> Result<Vec<FamilyImportance>> {
        if self.dim != FEATURE_DIM {
            return Err(Error::Model(format!(
                "family report needs {FEATURE_DIM} features, model has {}",
                self.dim
            )));
        }
        let imp = self.feature_importances();
        let schema = FeatureSchema::get();
        Ok(Family::ALL
            .iter()
            .map(|&family| {
                let overall: f64 = imp[schema.family_range(family)].iter().sum();
                FamilyImportance {
                    family,
                    overall,
                    dimensional: overall / family.dim() as f64,
                }
            })
            .collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n_nodes: usize = self.trees.iter().map(|t| t.nodes.len()).sum();
        let mut out = Vec::with_capacity(64 + 4 * self.trees.len() + NODE_BYTES * n_nodes);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.trees.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.k_for(self.dim) as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.min_samples_split as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.max_depth.unwrap_or(0) as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for tree in &self.trees {
            out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
            for n in &tree.nodes {
                out.extend_from_slice(&n.feature.to_le_bytes());
                out.extend_from_slice(&n.threshold.to_le_bytes());
                out.extend_from_slice(&n.left.to_le_bytes());
                out.extend_from_slice(&n.right.to_le_bytes());
                out.extend_from_slice(&n.counts[0].to_le_bytes());
                out.extend_from_slice(&n.counts[1].to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut &bytes[..])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_bytes();
        atomic_write(path.as_ref(), |w| w.write_all(&bytes))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file)).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn read_from(r: &mut impl Read) -> Result<Self> {
        let truncated = |_| Error::Model("truncated or unreadable model file".into());
        let magic: [u8; 8] = fsutil::read_exact(r).map_err(truncated)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Model("not a model file".into()));
        }
        let version = fsutil::read_u32(r).map_err(truncated)?;
        if version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {version}")));
        }
        let fingerprint = fsutil::read_u64(r).map_err(truncated)?;
        let dim = fsutil::read_u32(r).map_err(truncated)? as usize;
        let n_trees = fsutil::read_u32(r).map_err(truncated)? as usize;
        let k = fsutil::read_u32(r).map_err(truncated)? as usize;
        let min_samples_split = fsutil::read_u32(r).map_err(truncated)? as usize;
        let max_depth = fsutil::read_u32(r).map_err(truncated)? as usize;
        let seed = fsutil::read_u64(r).map_err(truncated)?;
        if dim == 0 || dim > usize::from(LEAF_FEATURE) || n_trees == 0 {
            return Err(Error::Model("implausible model header".into()));
        }
        let params = ErtParams {
            n_trees,
            k_features: Some(k),
            min_samples_split,
            max_depth: (max_depth > 0).then_some(max_depth),
        };
        params.validate().map_err(|e| Error::Model(e.to_string()))?;

        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes = fsutil::read_u32(r).map_err(truncated)? as usize;
            if n_nodes == 0 || n_nodes >= LEAF as usize {
                return Err(Error::Model("implausible tree size".into()));
            }
            let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
            for _ in 0..n_nodes {
                nodes.push(Node {
                    feature: fsutil::read_u16(r).map_err(truncated)?,
                    threshold: fsutil::read_f32(r).map_err(truncated)?,
                    left: fsutil::read_u32(r).map_err(truncated)?,
                    right: fsutil::read_u32(r).map_err(truncated)?,
                    counts: [
                        fsutil::read_u32(r).map_err(truncated)?,
                        fsutil::read_u32(r).map_err(truncated)?,
                    ],
                });
            }
            trees.push(Tree::new(nodes, dim)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(truncated)? != 0 {
            return Err(Error::Model("trailing bytes after model".into()));
        }
        Ok(Self {
            dim,
            params,
            fingerprint,
            seed,
            trees,
        })
    }
}

impl PixelClassifier for ErtModel {
    fn n_features(&self) -> usize {
        self.dim
    }

    fn schema_fingerprint(&self) -> Option<u64> {
        Some(self.fingerprint)
    }

    fn predict_rows(&self, rows: &[f32]) -> Result<Vec<u8>> {
        self.check_dim(rows)?;
        Ok(par_map_rows(rows, self.dim, |r| self.predict_row(r)))
    }
}

/// Replays every row down every tree and checks that each branch taken agrees with the
/// node's predicate; returns the number of violations.
pub fn path_violations(model: &ErtModel, rows: &[f32]) -> usize {
    let dim = model.dim();
    let mut bad = 0;
    for row in rows.chunks_exact(dim) {
        for tree in model.trees() {
            let path = tree.path(row);
            for pair in path.windows(2) {
                let node = &tree.nodes()[pair[0]];
                let went_left = pair[1] == node.left as usize;
                let went_right = pair[1] == node.right as usize;
                let below = row[node.feature as usize] < node.threshold;
                if !(went_left && below || went_right && !below) {
                    bad += 1;
                }
            }
            if !tree.nodes()[*path.last().expect("path has a root")].is_leaf() {
                bad += 1;
            }
        }
    }
    bad
}
