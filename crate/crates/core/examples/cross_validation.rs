//! Stratified 10-fold selection of forest hyperparameters on first-pass samples.
//!
//! Run with `cargo run --release --example cross_validation`.

use docbin::features::FeatureSchema;
use docbin::learner::pipeline::first_pass_samples;
use docbin::learner::{cross_validate, default_grid, TrainConfig};
use docbin::synth::{synthetic_corpus, PageSpec};

fn main() -> docbin::Result<()> {
    let pages = synthetic_corpus(&PageSpec::default(), 2, 31)?;
    let mut config = TrainConfig::default();
    config.sampler.first_pass = 1600;
    let mut samples = first_pass_samples(0, &pages[0], &config)?;
    samples.append(first_pass_samples(1, &pages[1], &config)?)?;
    println!("{} samples, classes {:?}", samples.len(), samples.view().class_counts());

    let report = cross_validate(samples.view(), &default_grid(), 5, FeatureSchema::get().fingerprint())?;
    println!("n_trees  min_split  mean F1  std");
    for r in &report.results {
        println!(
            "{:>7}  {:>9}  {:>7.4}  {:.4}",
            r.params.n_trees, r.params.min_samples_split, r.mean_f1, r.std_f1
        );
    }
    let best = report.best();
    println!(
        "chosen: {} trees, min_samples_split {} (mean F1 {:.4})",
        report.chosen.n_trees, report.chosen.min_samples_split, best.mean_f1
    );
    Ok(())
}
