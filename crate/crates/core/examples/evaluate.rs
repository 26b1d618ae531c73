//! F-measure, PSNR and DRD on hand-made and perturbed predictions.
//!
//! Run with `cargo run --release --example evaluate`.

use docbin::metrics::{drd_weights, nubn, EvalRecord, EvalReport};
use docbin::synth::{generate_page, PageSpec};
use docbin::LabelImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> docbin::Result<()> {
    println!("DRD weights:");
    for row in drd_weights() {
        println!("  {:.4?}", row);
    }

    let gt = generate_page(&PageSpec::default(), 5).gt;
    println!("{} non-uniform 8x8 blocks", nubn(&gt));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let flipped = |rate: f64, rng: &mut ChaCha8Rng| LabelImage::from_fn(gt.width(), gt.height(), |x, y| (gt.get(x, y) == 1) != rng.random_bool(rate));
    let eroded = LabelImage::from_fn(gt.width(), gt.height(), |x, y| {
        gt.get(x, y) == 1 && x > 0 && y > 0 && gt.get(x - 1, y) == 1 && gt.get(x, y - 1) == 1
    });
    let records = vec![
        EvalRecord::compute("identical", &gt, &gt)?,
        EvalRecord::compute("flip_0.1%", &flipped(0.001, &mut rng), &gt)?,
        EvalRecord::compute("flip_1%", &flipped(0.01, &mut rng), &gt)?,
        EvalRecord::compute("eroded", &eroded, &gt)?,
        EvalRecord::compute("blank", &LabelImage::zeros(gt.width(), gt.height()), &gt)?,
    ];
    let report = EvalReport::from_records(records)?;
    print!("{}", report.table());
    Ok(())
}
