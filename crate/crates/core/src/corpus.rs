//! Image / ground-truth pairings: a directory pair matched by file stem, or a manifest
//! with one `image<TAB>gt[<TAB>split]` line per entry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, LabelImage, Polarity};
use crate::learner::TrainingImage;
use crate::metrics::images_by_stem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub image: PathBuf,
    pub gt: Option<PathBuf>,
    pub split: Option<String>,
}

impl CorpusEntry {
    pub fn name(&self) -> String {
        self.image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

/// Ground-truth stems may carry a `_gt` suffix in any letter case.
pub(crate) fn gt_key(stem: &str) -> &str {
    let n = stem.len();
    if n > 3 && stem.is_char_boundary(n - 3) && stem[n - 3..].eq_ignore_ascii_case("_gt") {
        &stem[..n - 3]
    } else {
        stem
    }
}

impl CorpusManifest {
    /// Pairs every image in `images` with the file in `gts` sharing its stem. Images
    /// without a partner are kept without ground truth.
    pub fn from_dirs(images: &Path, gts: Option<&Path>) -> Result<Self> {
        let gt_map: BTreeMap<String, PathBuf> = match gts {
            Some(dir) => images_by_stem(dir)?
                .into_iter()
                .map(|(stem, path)| (gt_key(&stem).to_string(), path))
                .collect(),
            None => BTreeMap::new(),
        };
        let entries: Vec<CorpusEntry> = images_by_stem(images)?
            .into_iter()
            .map(|(stem, image)| CorpusEntry {
                gt: gt_map.get(&stem).cloned(),
                image,
                split: None,
            })
            .collect();
        if entries.is_empty() {
            return Err(Error::Input(format!("no images found in {}", images.display())));
        }
        Ok(Self {
            root: images.to_path_buf(),
            entries,
        })
    }

    /// Parses manifest text; relative paths resolve against `root`. Blank lines and
    /// lines starting with `#` are skipped; a `-` ground truth means none.
    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() > 3 || fields[0].is_empty() {
                return Err(Error::Input(format!(
                    "manifest line {}: expected image<TAB>gt[<TAB>split]",
                    lineno + 1
                )));
            }
            let resolve = |p: &str| {
                let p = Path::new(p);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    root.join(p)
                }
            };
            entries.push(CorpusEntry {
                image: resolve(fields[0]),
                gt: fields.get(1).filter(|g| !g.is_empty() && **g != "-").map(|g| resolve(g)),
                split: fields.get(2).filter(|s| !s.is_empty()).map(|s| s.to_string()),
            });
        }
        if entries.is_empty() {
            return Err(Error::Input("manifest lists no images".into()));
        }
        Ok(Self {
            root: root.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, root)
    }

    /// Fails naming the first listed file that does not exist.
    pub fn check_paths(&self) -> Result<()> {
        for e in &self.entries {
            for p in std::iter::once(&e.image).chain(e.gt.as_ref()) {
                if !p.is_file() {
                    return Err(Error::Input(format!("missing file {}", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Entries with the given split tag, or with a tag other than it when `exclude` is set.
    pub fn select(&self, split: Option<&str>, exclude: bool) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|e| match split {
                None => true,
                Some(tag) => (e.split.as_deref() == Some(tag)) != exclude,
            })
            .cloned()
            .collect();
        Self {
            root: self.root.clone(),
            entries,
        }
    }

    /// Loads every entry as a training pair; every entry needs ground truth.
    pub fn training_images(&self, polarity: Polarity) -> Result<Vec<TrainingImage>> {
        self.check_paths()?;
        if let Some(e) = self.entries.iter().find(|e| e.gt.is_none()) {
            return Err(Error::Input(format!(
                "no ground truth for {}",
                e.image.display()
            )));
        }
        self.entries
            .par_iter()
            .map(|e| {
                let gt_path = e.gt.as_ref().expect("checked above");
                let image = GrayImage::load(&e.image)?;
                let gt = LabelImage::load(gt_path, polarity)?;
                TrainingImage::new(e.name(), image, gt).map_err(|err| {
                    Error::Input(format!("{} vs {}: {err}", e.image.display(), gt_path.display()))
                })
            })
            .collect()
    }
}
