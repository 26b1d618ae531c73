//! Run configuration: every tunable with its default, loadable from and writable to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, StrokeWidth};
use crate::learner::{ErtParams, TrainConfig};
use crate::sampler::SamplerConfig;
use crate::thresholders::{NiblackParams, SauvolaParams};

/// Parameters of the classical baselines; the window follows the stroke width when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub niblack_k: f64,
    pub sauvola_k: f64,
    pub sauvola_range: f64,
    pub window: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            niblack_k: -0.2,
            sauvola_k: 0.5,
            sauvola_range: 128.0,
            window: None,
        }
    }
}

impl BaselineConfig {
    pub fn niblack(&self, s: StrokeWidth) -> NiblackParams {
        let mut p = NiblackParams::for_stroke_width(self.niblack_k, s.get());
        if let Some(w) = self.window {
            p.window = w;
        }
        p
    }

    pub fn sauvola(&self, s: StrokeWidth) -> SauvolaParams {
        let mut p = SauvolaParams::for_stroke_width(self.sauvola_k, self.sauvola_range, s.get());
        if let Some(w) = self.window {
            p.window = w;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let s = StrokeWidth::new(1, 4, 4);
        self.niblack(s).validate()?;
        self.sauvola(s).validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; all cores when absent.
    pub threads: Option<usize>,
    /// Select forest hyperparameters by cross-validation.
    pub cv: bool,
    /// Directory for reports written next to the main outputs.
    pub output_dir: PathBuf,
    /// Emit white-on-black label images instead of black text on white.
    pub invert: bool,
    pub features: FeatureConfig,
    pub sampler: SamplerConfig,
    pub forest: ErtParams,
    pub baseline: BaselineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            cv: false,
            output_dir: PathBuf::from("out"),
            invert: false,
            features: FeatureConfig::default(),
            sampler: SamplerConfig::default(),
            forest: ErtParams::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        self.features.validate()?;
        self.sampler.validate()?;
        self.forest.validate()?;
        self.baseline.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = self.to_toml();
        crate::fsutil::atomic_write(path.as_ref(), |w| w.write_all(text.as_bytes()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            features: self.features.clone(),
            sampler: self.sampler.clone(),
            forest: self.forest,
            cv: self.cv,
            cv_grid: Vec::new(),
            seed: self.seed,
        }
    }
}
