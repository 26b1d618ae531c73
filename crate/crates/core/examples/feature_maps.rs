//! Extracts the 142 feature channels of a page, summarizes each family and writes a few
//! channels as PNGs.
//!
//! Run with `cargo run --release --example feature_maps -- [out_dir]`.

use docbin::features::{Family, FeatureConfig, FeatureExtractor, FeatureSchema, MinMax};
use docbin::synth::{generate_page, PageSpec};
use docbin::GrayImage;

fn main() -> docbin::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "feature_maps".into());
    std::fs::create_dir_all(&out).map_err(|e| docbin::Error::io(&out, e))?;

    let page = generate_page(&PageSpec::default(), 3);
    let extractor = FeatureExtractor::new(&page.image, &FeatureConfig::default());
    let m = extractor.extract_all();
    let schema = FeatureSchema::get();
    println!(
        "{} pixels x {} channels, stroke width {}, schema fingerprint {:016x}",
        m.n_rows(),
        m.dim(),
        extractor.stroke_width().get(),
        schema.fingerprint()
    );

    // mean value of each family over text and background pixels
    let fg: Vec<usize> = (0..m.n_rows()).filter(|&i| page.gt.data()[i] == 1).collect();
    let bg: Vec<usize> = (0..m.n_rows()).filter(|&i| page.gt.data()[i] == 0).collect();
    let mean = |pixels: &[usize], range: std::ops::Range<usize>| {
        let n = (pixels.len() * range.len()) as f64;
        pixels.iter().flat_map(|&i| m.row(i)[range.clone()].iter()).map(|&v| f64::from(v)).sum::<f64>() / n
    };
    println!("{:<12} {:>3} {:>8} {:>8}", "family", "dim", "text", "paper");
    for f in Family::ALL {
        let r = schema.family_range(f);
        println!("{:<12} {:>3} {:>8.4} {:>8.4}", f.name(), r.len(), mean(&fg, r.clone()), mean(&bg, r));
    }

    for name in ["local_int", "su_1s", "etni_2s", "ltsi_2s", "lip_row_1s", "rdi_r1s_cpos"] {
        let c = schema.index_of(name).expect("known channel");
        let values: Vec<f64> = m.channel(c).iter().map(|&v| f64::from(v)).collect();
        let range = MinMax::of(&values);
        let data = values.iter().map(|&v| (range.apply(v) * 255.0).round() as u8).collect();
        let path = format!("{out}/{name}.png");
        GrayImage::new(page.image.width(), page.image.height(), data)?.save_png(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
