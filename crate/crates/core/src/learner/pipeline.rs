//! Two-pass training: balanced samples fit a naive Bayes model, its mistakes on the
//! training images supply a second balanced draw, and the forest learns from both.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureExtractor, FeatureSchema, FEATURE_DIM};
use crate::image::{check_dims, GrayImage, LabelImage};
use crate::sampler::{
    balanced_sample_with, mine_errors_with, subclass_map, SampleSet, SamplerConfig, SubclassMap, SUBCLASSES,
};
use crate::seeding::{derive_seed, stream_rng};

use super::cv::{cross_validate, default_grid, CvReport};
use super::{predict_image, ErtModel, ErtParams, GnbModel};

const DOMAIN_FIRST_PASS: u64 = 1;
const DOMAIN_SECOND_PASS: u64 = 2;
const DOMAIN_FOREST: u64 = 3;
const DOMAIN_CV: u64 = 4;

/// One training page with its ground truth.
#[derive(Clone, Debug)]
pub struct TrainingImage {
    pub name: String,
    pub image: GrayImage,
    pub gt: LabelImage,
}

impl TrainingImage {
    pub fn new(name: impl Into<String>, image: GrayImage, gt: LabelImage) -> Result<Self> {
        check_dims(&image, &gt)?;
        Ok(Self {
            name: name.into(),
            image,
            gt,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub features: FeatureConfig,
    pub sampler: SamplerConfig,
    pub forest: ErtParams,
    /// Select forest hyperparameters by 10-fold cross-validation.
    pub cv: bool,
    /// Grid searched when `cv` is set; the default grid when empty.
    pub cv_grid: Vec<ErtParams>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.sampler.validate()?;
        self.forest.validate()?;
        self.cv_grid.iter().try_for_each(ErtParams::validate)
    }
}

/// Per-image sample counts of both passes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageSampleStats {
    pub name: String,
    pub first_pass: usize,
    pub second_pass: usize,
    /// Pixels the naive Bayes model got wrong.
    pub gnb_errors: usize,
    pub subclass_counts: [usize; SUBCLASSES],
}

pub struct TrainOutcome {
    pub model: ErtModel,
    pub gnb: GnbModel,
    pub samples: SampleSet,
    pub per_image: Vec<ImageSampleStats>,
    pub cv: Option<CvReport>,
}

fn prepare<'a>(t: &'a TrainingImage, config: &TrainConfig) -> Result<(FeatureExtractor<'a>, SubclassMap)> {
    let extractor = FeatureExtractor::new(&t.image, &config.features);
    let niblack = config.sampler.niblack(extractor.stroke_width());
    let sm = subclass_map(&t.image, &t.gt, extractor.stroke_width(), &niblack)?;
    Ok((extractor, sm))
}

/// Pass 1 for one image: a balanced draw over all pixels.
pub fn first_pass_samples(id: u32, t: &TrainingImage, config: &TrainConfig) -> Result<SampleSet> {
    let (extractor, sm) = prepare(t, config)?;
    let seed = derive_seed(config.seed, DOMAIN_FIRST_PASS);
    let pixels = balanced_sample_with(&sm, config.sampler.first_pass, &mut stream_rng(seed, u64::from(id)));
    SampleSet::from_image(id, extractor.extract_at(&pixels), &pixels, &sm, seed)
}

/// Pass 2 for one image: a balanced draw over the pixels `gnb` mislabels.
pub fn second_pass_samples(
    id: u32,
    t: &TrainingImage,
    gnb: &GnbModel,
    config: &TrainConfig,
) -> Result<(SampleSet, usize)> {
    let (extractor, sm) = prepare(t, config)?;
    let pred = predict_image(gnb, &extractor)?;
    let errors = pred.data().iter().zip(t.gt.data()).filter(|(p, g)| p != g).count();
    let seed = derive_seed(config.seed, DOMAIN_SECOND_PASS);
    let pixels = if config.sampler.second_pass == 0 {
        Vec::new()
    } else {
        mine_errors_with(
            &pred,
            &t.gt,
            &sm,
            config.sampler.second_pass,
            &mut stream_rng(seed, u64::from(id)),
        )?
    };
    let set = SampleSet::from_image(id, extractor.extract_at(&pixels), &pixels, &sm, seed)?;
    Ok((set, errors))
}

fn merge(sets: Vec<SampleSet>, seed: u64) -> Result<SampleSet> {
    let mut all = SampleSet::empty(FEATURE_DIM, FeatureSchema::get().fingerprint(), seed);
    for s in sets {
        all.append(s)?;
    }
    Ok(all)
}

/// Runs both passes over `corpus` and fits the final forest on the union of samples.
pub fn train_pipeline(corpus: &[TrainingImage], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Training("empty training corpus".into()));
    }

    let first: Vec<SampleSet> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, t)| first_pass_samples(i as u32, t, config))
        .collect::<Result<_>>()?;
    let first_counts: Vec<usize> = first.iter().map(SampleSet::len).collect();
    let pass1 = merge(first, config.seed)?;
    log::info!("pass 1: {} samples from {} images", pass1.len(), corpus.len());
    let gnb = GnbModel::fit(pass1.view())?;

    let second: Vec<(SampleSet, usize)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, t)| second_pass_samples(i as u32, t, &gnb, config))
        .collect::<Result<_>>()?;
    let mut samples = pass1;
    let mut per_image = Vec::with_capacity(corpus.len());
    for ((t, n1), (set, errors)) in corpus.iter().zip(first_counts).zip(second) {
        per_image.push(ImageSampleStats {
            name: t.name.clone(),
            first_pass: n1,
            second_pass: set.len(),
            gnb_errors: errors,
            subclass_counts: [0; SUBCLASSES],
        });
        samples.append(set)?;
    }
    for (i, stats) in per_image.iter_mut().enumerate() {
        for (&id, &code) in samples.image_ids().iter().zip(samples.subclasses()) {
            if id as usize == i {
                stats.subclass_counts[code as usize] += 1;
            }
        }
    }
    log::info!(
        "pass 2: {} erroneous samples",
        per_image.iter().map(|s| s.second_pass).sum::<usize>()
    );

    let fingerprint = samples.fingerprint();
    let cv = if config.cv {
        let grid = if config.cv_grid.is_empty() {
            default_grid()
        } else {
            config.cv_grid.clone()
        };
        Some(cross_validate(
            samples.view(),
            &grid,
            derive_seed(config.seed, DOMAIN_CV),
            fingerprint,
        )?)
    } else {
        None
    };
    let params = cv.as_ref().map_or(config.forest, |r| r.chosen);
    let model = ErtModel::fit(
        samples.view(),
        &params,
        derive_seed(config.seed, DOMAIN_FOREST),
        fingerprint,
    )?;
    Ok(TrainOutcome {
        model,
        gnb,
        samples,
        per_image,
        cv,
    })
}
