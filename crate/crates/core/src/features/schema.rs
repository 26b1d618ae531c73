//! Ordered catalog of the 142 per-pixel feature channels.

use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bump when channel order or semantics change; folded into the fingerprint.
pub const SCHEMA_VERSION: u32 = 1;

pub const FEATURE_DIM: usize = 142;

/// Window / band / radius multipliers of the stroke width.
pub const SCALES: [usize; 4] = [1, 2, 4, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LocalInt,
    OtsuDiff,
    LocalAvg,
    LocalStd,
    Su,
    Howe,
    Etni,
    Ltsi,
    Lip,
    Rdi,
    GlobalStat,
    GlobalHist,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::LocalInt,
        Family::OtsuDiff,
        Family::LocalAvg,
        Family::LocalStd,
        Family::Su,
        Family::Howe,
        Family::Etni,
        Family::Ltsi,
        Family::Lip,
        Family::Rdi,
        Family::GlobalStat,
        Family::GlobalHist,
    ];

    pub fn dim(self) -> usize {
        match self {
            Family::LocalInt | Family::OtsuDiff => 1,
            Family::LocalAvg
            | Family::LocalStd
            | Family::Su
            | Family::Howe
            | Family::Etni
            | Family::Ltsi
            | Family::GlobalStat => 4,
            Family::Lip => 18,
            Family::Rdi => 30,
            Family::GlobalHist => 64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::LocalInt => "local_int",
            Family::OtsuDiff => "otsu_diff",
            Family::LocalAvg => "local_avg",
            Family::LocalStd => "local_std",
            Family::Su => "su",
            Family::Howe => "howe",
            Family::Etni => "etni",
            Family::Ltsi => "ltsi",
            Family::Lip => "lip",
            Family::Rdi => "rdi",
            Family::GlobalStat => "global_stat",
            Family::GlobalHist => "global_hist",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    None,
    Div255,
    MinMax,
}

impl Normalization {
    fn tag(self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::Div255 => "div255",
            Normalization::MinMax => "minmax",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelDesc {
    pub family: Family,
    /// Scale tag such as `1`, `2s` or `n/a`.
    pub scale: String,
    pub normalization: Normalization,
    /// Unique channel name, used on the command line and in reports.
    pub name: String,
}

#[derive(Debug)]
pub struct FeatureSchema {
    entries: Vec<ChannelDesc>,
    fingerprint: u64,
}

fn scale_tag(k: usize) -> String {
    format!("{k}s")
}

pub const LIP_DIRECTIONS: [&str; 4] = ["row", "col", "diag", "anti"];
pub const RDI_COLUMNS: [&str; 6] = ["c0", "cneg", "cpos", "pos_ratio", "neg_ratio", "zero_ratio"];

impl FeatureSchema {
    fn build() -> Self {
        let mut entries = Vec::with_capacity(FEATURE_DIM);
        let mut push = |family: Family, scale: String, normalization: Normalization, name: String| {
            entries.push(ChannelDesc {
                family,
                scale,
                normalization,
                name,
            })
        };
        let na = || "n/a".to_string();

        push(Family::LocalInt, na(), Normalization::Div255, "local_int".into());
        push(Family::OtsuDiff, na(), Normalization::Div255, "otsu_diff".into());
        for k in SCALES {
            push(Family::LocalAvg, scale_tag(k), Normalization::Div255, format!("local_avg_{k}s"));
        }
        for k in SCALES {
            push(Family::LocalStd, scale_tag(k), Normalization::Div255, format!("local_std_{k}s"));
        }
        for (fam, prefix) in [(Family::Su, "su"), (Family::Howe, "howe")] {
            push(fam, "1".into(), Normalization::MinMax, format!("{prefix}_1"));
            for k in &SCALES[..3] {
                push(fam, scale_tag(*k), Normalization::MinMax, format!("{prefix}_{k}s"));
            }
        }
        for (fam, prefix) in [(Family::Etni, "etni"), (Family::Ltsi, "ltsi")] {
            for k in SCALES {
                push(fam, scale_tag(k), Normalization::None, format!("{prefix}_{k}s"));
            }
        }
        push(Family::Lip, "1".into(), Normalization::None, "lip_global".into());
        for dir in LIP_DIRECTIONS {
            for k in SCALES {
                push(Family::Lip, scale_tag(k), Normalization::None, format!("lip_{dir}_{k}s"));
            }
        }
        push(Family::Lip, "max".into(), Normalization::None, "lip_max".into());
        let radii = std::iter::once(("r1".to_string(), "1".to_string()))
            .chain(SCALES.iter().map(|k| (format!("r{k}s"), scale_tag(*k))));
        for (rname, rtag) in radii {
            for col in RDI_COLUMNS {
                push(Family::Rdi, rtag.clone(), Normalization::None, format!("rdi_{rname}_{col}"));
            }
        }
        push(Family::GlobalStat, na(), Normalization::Div255, "global_int_mean".into());
        push(Family::GlobalStat, na(), Normalization::Div255, "global_int_std".into());
        push(Family::GlobalStat, na(), Normalization::None, "global_perc_mean".into());
        push(Family::GlobalStat, na(), Normalization::None, "global_perc_std".into());
        for b in 0..32 {
            push(Family::GlobalHist, na(), Normalization::None, format!("global_int_loghist_{b:02}"));
        }
        for b in 0..32 {
            push(Family::GlobalHist, na(), Normalization::None, format!("global_perc_loghist_{b:02}"));
        }

        let mut hasher = Sha256::new();
        hasher.update(SCHEMA_VERSION.to_le_bytes());
        for e in &entries {
            hasher.update(
                format!("{}|{}|{}|{};", e.family.name(), e.scale, e.normalization.tag(), e.name).as_bytes(),
            );
        }
        let digest = hasher.finalize();
        let mut fp = [0u8; 8];
        fp.copy_from_slice(&digest[..8]);
        Self {
            entries,
            fingerprint: u64::from_le_bytes(fp),
        }
    }

    /// The process-wide schema instance.
    pub fn get() -> &'static FeatureSchema {
        static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
        SCHEMA.get_or_init(FeatureSchema::build)
    }

    pub fn entries(&self) -> &[ChannelDesc] {
        &self.entries
    }

    pub fn total_dim(&self) -> usize {
        self.entries.len()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Index range of a family's channels.
    pub fn family_range(&self, family: Family) -> std::ops::Range<usize> {
        let start = self
            .entries
            .iter()
            .position(|e| e.family == family)
            .expect("every family is present");
        start..start + family.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_follow_the_table() {
        let schema = FeatureSchema::get();
        assert_eq!(schema.total_dim(), FEATURE_DIM);
        let dims: Vec<usize> = Family::ALL.iter().map(|f| f.dim()).collect();
        assert_eq!(dims, vec![1, 1, 4, 4, 4, 4, 4, 4, 18, 30, 4, 64]);
        let mut offset = 0;
        for fam in Family::ALL {
            assert_eq!(schema.family_range(fam), offset..offset + fam.dim());
            assert!(schema.entries()[offset..offset + fam.dim()].iter().all(|e| e.family == fam));
            offset += fam.dim();
        }
    }

    #[test]
    fn names_are_unique() {
        let schema = FeatureSchema::get();
        let mut names: Vec<&str> = schema.names().collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), FEATURE_DIM);
    }

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(FeatureSchema::build().fingerprint(), FeatureSchema::get().fingerprint());
        assert_ne!(FeatureSchema::get().fingerprint(), 0);
    }
}
