//! Global and local thresholding baselines on a synthetic degraded page.
//!
//! Run with `cargo run --release --example baselines`.

use docbin::features::estimate_stroke_width;
use docbin::image::{histogram, otsu_threshold};
use docbin::metrics::EvalRecord;
use docbin::synth::{generate_page, PageSpec};
use docbin::thresholders::{binarize_niblack, binarize_otsu, binarize_sauvola, NiblackParams, SauvolaParams};

fn main() -> docbin::Result<()> {
    let page = generate_page(&PageSpec::default(), 7);
    let s = estimate_stroke_width(&page.image).get();
    println!(
        "{}x{} page, estimated stroke width {s}, Otsu threshold {}",
        page.image.width(),
        page.image.height(),
        otsu_threshold(&histogram(&page.image))
    );

    let niblack = NiblackParams::for_stroke_width(-0.2, s);
    let sauvola = SauvolaParams::for_stroke_width(0.5, 128.0, s);
    println!("local window {} px", niblack.window);
    for (name, labels) in [
        ("otsu", binarize_otsu(&page.image)),
        ("niblack", binarize_niblack(&page.image, &niblack)),
        ("sauvola", binarize_sauvola(&page.image, &sauvola)),
    ] {
        let r = EvalRecord::compute(name, &labels, &page.gt)?;
        println!(
            "{name:>8}: F1 {:6.2}  PSNR {:6.2}  DRD {:7.3}  ({} false positives, {} false negatives)",
            r.f1,
            r.psnr,
            r.drd.unwrap_or(f64::NAN),
            r.fp,
            r.fn_
        );
    }
    Ok(())
}
