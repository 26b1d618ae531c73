//! Naive Bayes and extremely randomized trees on a two-feature toy problem, with model
//! persistence, path replay and feature importances.
//!
//! Run with `cargo run --release --example forest_toy`.

use docbin::learner::{path_violations, DataView, ErtModel, ErtParams, GnbModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points in the unit square labelled by a ring; a third feature is pure noise.
fn ring(n: usize, seed: u64) -> (Vec<f32>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, y, z): (f32, f32, f32) = (rng.random(), rng.random(), rng.random());
        let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
        rows.extend([x, y, z]);
        labels.push(u8::from((0.2..0.35).contains(&r)));
    }
    (rows, labels)
}

fn accuracy(pred: impl Iterator<Item = u8>, truth: &[u8]) -> f64 {
    pred.zip(truth).filter(|(p, t)| p == *t).count() as f64 / truth.len() as f64
}

fn main() -> docbin::Result<()> {
    let (train_x, train_y) = ring(4000, 1);
    let (test_x, test_y) = ring(4000, 2);
    let train = DataView::new(3, &train_x, &train_y)?;

    let gnb = GnbModel::fit(train)?;
    let gnb_acc = accuracy(test_x.chunks(3).map(|r| gnb.predict_row(r)), &test_y);

    let params = ErtParams {
        n_trees: 50,
        ..ErtParams::default()
    };
    let forest = ErtModel::fit(train, &params, 42, 0)?;
    let forest_acc = accuracy(test_x.chunks(3).map(|r| forest.predict_row(r)), &test_y);
    println!("test accuracy: naive Bayes {gnb_acc:.4}, forest {forest_acc:.4}");

    let depth = forest.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
    let nodes: usize = forest.trees().iter().map(|t| t.nodes().len()).sum();
    println!("{} trees, {nodes} nodes, max depth {depth}", forest.trees().len());
    println!("importances (x, y, noise): {:.3?}", forest.feature_importances());

    let path = std::env::temp_dir().join("forest_toy.bin");
    forest.save(&path)?;
    let loaded = ErtModel::load(&path)?;
    assert_eq!(loaded.to_bytes(), forest.to_bytes());
    println!(
        "saved and reloaded {} bytes; {} path violations on the test set",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        path_violations(&loaded, &test_x)
    );
    Ok(())
}
