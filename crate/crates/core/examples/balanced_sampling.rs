//! Pixel subclasses and subclass-balanced sampling, including mining the errors of a
//! first-pass classifier.
//!
//! Run with `cargo run --release --example balanced_sampling`.

use docbin::features::{estimate_stroke_width, FeatureConfig, FeatureExtractor};
use docbin::learner::{predict_image, GnbModel};
use docbin::sampler::{balanced_sample, mine_errors, subclass_map, SampleSet, SamplerConfig, SUBCLASSES};
use docbin::synth::{generate_page, PageSpec};

fn main() -> docbin::Result<()> {
    let page = generate_page(&PageSpec::default(), 11);
    let s = estimate_stroke_width(&page.image);
    let config = SamplerConfig::default();
    let sm = subclass_map(&page.image, &page.gt, s, &config.niblack(s))?;

    let picked = balanced_sample(&sm, config.first_pass, 1)?;
    let mut drawn = [0usize; SUBCLASSES];
    picked.iter().for_each(|&p| drawn[sm.codes()[p] as usize] += 1);
    println!("code  gt edge niblack otsu  population  drawn");
    for (c, (pop, n)) in sm.populations().iter().zip(drawn).enumerate() {
        println!(
            "{c:>4}  {:>2} {:>4} {:>7} {:>4}  {pop:>10}  {n:>5}",
            c >> 3 & 1,
            c >> 2 & 1,
            c >> 1 & 1,
            c & 1
        );
    }

    // first pass: features at the drawn pixels, then a naive Bayes decode of the page
    let extractor = FeatureExtractor::new(&page.image, &FeatureConfig::default());
    let first = SampleSet::from_image(0, extractor.extract_at(&picked), &picked, &sm, 1)?;
    let gnb = GnbModel::fit(first.view())?;
    let decoded = predict_image(&gnb, &extractor)?;
    let errors = mine_errors(&decoded, &page.gt, &sm, config.second_pass, 2)?;
    let wrong = decoded.data().iter().zip(page.gt.data()).filter(|(a, b)| a != b).count();
    println!(
        "{} first-pass samples ({:?} background/text); naive Bayes misclassifies {wrong} pixels; {} error samples drawn",
        first.len(),
        first.view().class_counts(),
        errors.len()
    );
    Ok(())
}
