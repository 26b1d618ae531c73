//! Writes a synthetic corpus as PNG pages, ground-truth images and a manifest, ready for
//! the `docbin` command line.
//!
//! Run with `cargo run --release --example make_corpus -- corpus 6`, then for example
//!
//! ```text
//! docbin train --manifest corpus/manifest.tsv --split train --model corpus/forest.bin
//! docbin predict --model corpus/forest.bin --out corpus/pred corpus/img/page_05.png
//! docbin eval --pred corpus/pred --gt corpus/gt
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use docbin::synth::{synthetic_corpus, PageSpec};
use docbin::Polarity;

fn main() -> docbin::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "corpus".into()));
    let n: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(6);
    for sub in ["img", "gt"] {
        let dir = root.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| docbin::Error::io(&dir, e))?;
    }

    let mut manifest = String::from("# image\tground truth\tsplit\n");
    for (i, page) in synthetic_corpus(&PageSpec::default(), n, 1)?.iter().enumerate() {
        let image = format!("img/{}.png", page.name);
        let gt = format!("gt/{}_GT.png", page.name);
        page.image.save_png(root.join(&image))?;
        page.gt.save_png(root.join(&gt), Polarity::TextBlack)?;
        let split = if i + 1 < n { "train" } else { "test" };
        let _ = writeln!(manifest, "{image}\t{gt}\t{split}");
    }
    let path = root.join("manifest.tsv");
    std::fs::write(&path, manifest).map_err(|e| docbin::Error::io(&path, e))?;
    println!("wrote {n} pages and {}", path.display());
    Ok(())
}
