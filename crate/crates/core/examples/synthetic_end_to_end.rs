//! Trains on two synthetic pages with the two-pass pipeline and scores a third.
//!
//! Run with `cargo run --release --example synthetic_end_to_end`.

use std::time::Instant;

use docbin::features::{FeatureConfig, FeatureExtractor};
use docbin::learner::{predict_image, train_pipeline, TrainConfig};
use docbin::metrics::EvalRecord;
use docbin::synth::{synthetic_corpus, PageSpec};
use docbin::thresholders::{binarize_otsu, binarize_sauvola, SauvolaParams};

fn main() -> docbin::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let pages = synthetic_corpus(&PageSpec::default(), 3, 2024)?;
    let (train, test) = pages.split_at(2);

    let config = TrainConfig::default();
    let start = Instant::now();
    let outcome = train_pipeline(train, &config)?;
    println!("trained in {:.1?}", start.elapsed());
    for s in &outcome.per_image {
        println!(
            "  {}: {} first-pass + {} erroneous samples ({} naive Bayes errors)",
            s.name, s.first_pass, s.second_pass, s.gnb_errors
        );
    }

    let page = &test[0];
    let start = Instant::now();
    let extractor = FeatureExtractor::new(&page.image, &FeatureConfig::default());
    let pred = predict_image(&outcome.model, &extractor)?;
    println!("decoded {} in {:.1?}", page.name, start.elapsed());

    let sauvola = SauvolaParams::for_stroke_width(0.5, 128.0, extractor.stroke_width().get());
    for (name, labels) in [
        ("forest", pred),
        ("otsu", binarize_otsu(&page.image)),
        ("sauvola", binarize_sauvola(&page.image, &sauvola)),
    ] {
        let r = EvalRecord::compute(name, &labels, &page.gt)?;
        println!(
            "{name:>8}: F1 {:6.2}  PSNR {:6.2}  DRD {:.3}",
            r.f1,
            r.psnr,
            r.drd.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
