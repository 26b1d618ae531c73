//! Command-line front end: `train`, `predict`, `eval`, `features`, `baseline`, `sample`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 internal error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::corpus::CorpusManifest;
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureSchema, MinMax};
use crate::fsutil::atomic_write;
use crate::image::{GrayImage, LabelImage, Polarity};
use crate::learner::{
    predict_image, train_pipeline, ErtModel, TrainOutcome,
};
use crate::metrics::evaluate_corpus;
use crate::sampler::SUBCLASSES;
use crate::thresholders::{binarize_niblack, binarize_otsu, binarize_sauvola};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "docbin", version, about = "Trainable document image binarization")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-pass training on a corpus with ground truth.
    Train(TrainArgs),
    /// Binarizes images with a trained model.
    Predict(PredictArgs),
    /// Scores predictions against ground truth.
    Eval(EvalArgs),
    /// Writes feature channels of an image as PNGs.
    Features(FeaturesArgs),
    /// Classical thresholding baselines.
    Baseline(BaselineArgs),
    /// Writes first-pass balanced samples of a corpus.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory of page images.
    #[arg(long, conflicts_with = "manifest")]
    pub images: Option<PathBuf>,
    /// Directory of ground-truth images paired by file stem.
    #[arg(long, requires = "images")]
    pub gt: Option<PathBuf>,
    /// Manifest with `image<TAB>gt[<TAB>split]` lines.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Keep only manifest entries with this split tag.
    #[arg(long)]
    pub split: Option<String>,
    /// Keep entries whose tag differs from `--split` instead.
    #[arg(long, requires = "split")]
    pub exclude_split: bool,
}

impl CorpusArgs {
    fn manifest(&self) -> Result<CorpusManifest> {
        let m = match (&self.images, &self.manifest) {
            (Some(dir), None) => CorpusManifest::from_dirs(dir, self.gt.as_deref())?,
            (None, Some(file)) => CorpusManifest::load(file)?,
            _ => return Err(Error::Config("give either --images/--gt or --manifest".into())),
        };
        let m = m.select(self.split.as_deref(), self.exclude_split);
        if m.entries.is_empty() {
            return Err(Error::Input("no corpus entries selected".into()));
        }
        Ok(m)
    }
}

/// Command-line overrides of every run configuration field.
#[derive(Debug, Default, Args)]
pub struct ConfigFlags {
    #[arg(long)]
    pub cv: bool,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Write white text on black instead of black text on white.
    #[arg(long)]
    pub invert: bool,
    #[arg(long)]
    pub ltp_tol: Option<f64>,
    #[arg(long)]
    pub eps_su: Option<f64>,
    #[arg(long)]
    pub sauvola_range: Option<f64>,
    #[arg(long)]
    pub th_perc: Option<f64>,
    #[arg(long)]
    pub stroke_width: Option<usize>,
    #[arg(long)]
    pub first_pass: Option<usize>,
    #[arg(long)]
    pub second_pass: Option<usize>,
    #[arg(long)]
    pub sampler_niblack_k: Option<f64>,
    #[arg(long)]
    pub sampler_niblack_window: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub k_features: Option<usize>,
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub niblack_k: Option<f64>,
    #[arg(long)]
    pub sauvola_k: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
}

impl ConfigFlags {
    fn apply(&self, c: &mut RunConfig) {
        fn set<T: Clone>(dst: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *dst = v.clone();
            }
        }
        fn set_opt<T: Clone>(dst: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                *dst = v.clone();
            }
        }
        c.cv |= self.cv;
        c.invert |= self.invert;
        set(&mut c.output_dir, &self.output_dir);
        set(&mut c.features.ltp_tol, &self.ltp_tol);
        set(&mut c.features.eps_su, &self.eps_su);
        set(&mut c.features.sauvola_range, &self.sauvola_range);
        set(&mut c.features.th_perc, &self.th_perc);
        set_opt(&mut c.features.stroke_width, &self.stroke_width);
        set(&mut c.sampler.first_pass, &self.first_pass);
        set(&mut c.sampler.second_pass, &self.second_pass);
        set(&mut c.sampler.niblack_k, &self.sampler_niblack_k);
        set_opt(&mut c.sampler.niblack_window, &self.sampler_niblack_window);
        set(&mut c.forest.n_trees, &self.n_trees);
        set_opt(&mut c.forest.k_features, &self.k_features);
        set(&mut c.forest.min_samples_split, &self.min_samples_split);
        set_opt(&mut c.forest.max_depth, &self.max_depth);
        set(&mut c.baseline.niblack_k, &self.niblack_k);
        set(&mut c.baseline.sauvola_k, &self.sauvola_k);
        set_opt(&mut c.baseline.window, &self.window);
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory for label PNGs.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Also write tab-separated records here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Label files use white text on black.
    #[arg(long)]
    pub invert: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// `all`, or comma-separated channel or family names.
    #[arg(long, default_value = "all")]
    pub channels: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Otsu,
    Niblack,
    Sauvola,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub image: PathBuf,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output directory for `<name>.samples` files and `summary.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: ConfigFlags,
}

fn effective_config(cli: &Cli, flags: Option<&ConfigFlags>) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = flags {
        f.apply(&mut c);
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if cli.threads.is_some() {
        c.threads = cli.threads;
    }
    c.validate()?;
    Ok(c)
}

fn polarity(invert: bool) -> Polarity {
    if invert {
        Polarity::TextWhite
    } else {
        Polarity::TextBlack
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    atomic_write(path, |w| w.write_all(text.as_bytes()))
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Input(format!("no file name in {}", path.display())))
}

/// Family and per-channel importances as text.
pub fn importance_report(model: &ErtModel) -> Result<String> {
    let mut out = String::from("family\toverall\tdimensional\n");
    for f in model.family_importances()? {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}", f.family, f.overall, f.dimensional);
    }
    out.push_str("\nchannel\timportance\n");
    for (name, v) in FeatureSchema::get().names().zip(model.feature_importances()) {
        let _ = writeln!(out, "{name}\t{v:.6}");
    }
    Ok(out)
}

fn sample_summary(outcome: &TrainOutcome) -> String {
    let mut out = String::from("name\tfirst_pass\tsecond_pass\tgnb_errors\n");
    for s in &outcome.per_image {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", s.name, s.first_pass, s.second_pass, s.gnb_errors);
    }
    out
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = effective_config(cli, Some(&args.flags))?;
    let corpus = args.corpus.manifest()?.training_images(polarity(config.invert))?;
    log::info!("training on {} images", corpus.len());
    let start = Instant::now();
    let outcome = train_pipeline(&corpus, &config.train_config())?;
    log::info!("trained in {:.1?}", start.elapsed());
    if let Some(parent) = args.model.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    outcome.model.save(&args.model)?;

    let dir = &config.output_dir;
    ensure_dir(dir)?;
    write_text(&dir.join("importance.tsv"), &importance_report(&outcome.model)?)?;
    write_text(&dir.join("samples.tsv"), &sample_summary(&outcome))?;
    write_text(&dir.join("config.toml"), &config.to_toml())?;
    if let Some(cv) = &outcome.cv {
        let mut text = String::from("n_trees\tmin_samples_split\tmean_f1\tstd_f1\n");
        for r in &cv.results {
            let _ = writeln!(
                text,
                "{}\t{}\t{:.6}\t{:.6}",
                r.params.n_trees, r.params.min_samples_split, r.mean_f1, r.std_f1
            );
        }
        let _ = writeln!(
            text,
            "# chosen n_trees={} min_samples_split={}",
            cv.chosen.n_trees, cv.chosen.min_samples_split
        );
        write_text(&dir.join("cv.tsv"), &text)?;
    }
    println!(
        "model written to {} ({} samples, {} trees)",
        args.model.display(),
        outcome.samples.len(),
        outcome.model.trees().len()
    );
    Ok(())
}

fn cmd_predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let config = effective_config(cli, Some(&args.flags))?;
    let model = ErtModel::load(&args.model)?;
    model.check_schema(FeatureSchema::get().fingerprint())?;
    ensure_dir(&args.out)?;
    for path in &args.images {
        let start = Instant::now();
        let im = GrayImage::load(path)?;
        let extractor = FeatureExtractor::new(&im, &config.features);
        let labels = predict_image(&model, &extractor)?;
        let out = args.out.join(format!("{}.png", stem(path)?));
        save_labels(&labels, &out, polarity(config.invert))?;
        log::info!(
            "{}: {}x{} in {:.2?}",
            path.display(),
            im.width(),
            im.height(),
            start.elapsed()
        );
    }
    Ok(())
}

fn save_labels(labels: &LabelImage, path: &Path, polarity: Polarity) -> Result<()> {
    let gray = labels.to_gray(polarity);
    let tmp = tempfile::Builder::new()
        .suffix(".png")
        .tempfile_in(path.parent().unwrap_or(Path::new(".")))
        .map_err(|e| Error::io(path, e))?;
    gray.save_png(tmp.path())?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let report = evaluate_corpus(&args.pred, &args.gt, polarity(args.invert))?;
    print!("{}", report.table());
    if let Some(out) = &args.out {
        write_text(out, &report.tsv())?;
    }
    Ok(())
}

/// Channel indices for a selector: `all`, channel names, or family names.
pub fn select_channels(selector: &str) -> Result<Vec<usize>> {
    let schema = FeatureSchema::get();
    if selector.trim() == "all" {
        return Ok((0..schema.total_dim()).collect());
    }
    let mut out = Vec::new();
    for name in selector.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(i) = schema.index_of(name) {
            out.push(i);
        } else if let Some(f) = crate::features::Family::ALL.iter().find(|f| f.name() == name) {
            out.extend(schema.family_range(*f));
        } else {
            let valid: Vec<&str> = schema.names().collect();
            return Err(Error::Config(format!(
                "unknown channel '{name}'; valid names: all, {}",
                valid.join(", ")
            )));
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty channel selection".into()));
    }
    Ok(out)
}

/// 8-bit rendering of one channel: min-max stretched, or `clamp(v, 0, 1)` when constant.
pub fn channel_to_gray(values: &[f32], width: usize, height: usize) -> GrayImage {
    let as_f64: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
    let range = MinMax::of(&as_f64);
    let constant = as_f64.windows(2).all(|w| w[0] == w[1]);
    let data = as_f64
        .iter()
        .map(|&v| {
            let u = if constant { v.clamp(0.0, 1.0) } else { range.apply(v) };
            (u * 255.0).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, data).expect("one value per pixel")
}

fn cmd_features(cli: &Cli, args: &FeaturesArgs) -> Result<()> {
    let config = effective_config(cli, Some(&args.flags))?;
    let channels = select_channels(&args.channels)?;
    let im = GrayImage::load(&args.image)?;
    let matrix = FeatureExtractor::new(&im, &config.features).extract_all();
    ensure_dir(&args.out)?;
    let names: Vec<&str> = FeatureSchema::get().names().collect();
    for c in channels {
        let gray = channel_to_gray(&matrix.channel(c), im.width(), im.height());
        gray.save_png(args.out.join(format!("{:03}_{}.png", c, names[c])))?;
    }
    Ok(())
}

fn cmd_baseline(cli: &Cli, args: &BaselineArgs) -> Result<()> {
    let config = effective_config(cli, Some(&args.flags))?;
    let im = GrayImage::load(&args.image)?;
    let s = match config.features.stroke_width {
        Some(s) => crate::features::StrokeWidth::new(s, im.width(), im.height()),
        None => crate::features::estimate_stroke_width(&im),
    };
    let labels = match args.method {
        Method::Otsu => binarize_otsu(&im),
        Method::Niblack => binarize_niblack(&im, &config.baseline.niblack(s)),
        Method::Sauvola => binarize_sauvola(&im, &config.baseline.sauvola(s)),
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_labels(&labels, &args.out, polarity(config.invert))
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<()> {
    let config = effective_config(cli, Some(&args.flags))?;
    let corpus = args.corpus.manifest()?.training_images(polarity(config.invert))?;
    let train = config.train_config();
    ensure_dir(&args.out)?;
    let mut summary = String::from("name\trows");
    for c in 0..SUBCLASSES {
        let _ = write!(summary, "\tc{c:02}");
    }
    summary.push('\n');
    for (i, t) in corpus.iter().enumerate() {
        let set = crate::learner::pipeline::first_pass_samples(i as u32, t, &train)?;
        set.save(args.out.join(format!("{}.samples", t.name)))?;
        let _ = write!(summary, "{}\t{}", t.name, set.len());
        for n in set.subclass_counts() {
            let _ = write!(summary, "\t{n}");
        }
        summary.push('\n');
    }
    write_text(&args.out.join("summary.tsv"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Io { .. }
        | Error::Format { .. }
        | Error::Input(_)
        | Error::DimensionMismatch { .. }
        | Error::SchemaMismatch { .. }
        | Error::Model(_)
        | Error::Metric(_)
        | Error::Training(_) => EXIT_DATA,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let body = || match &cli.command {
        Command::Train(a) => cmd_train(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Features(a) => cmd_features(cli, a),
        Command::Baseline(a) => cmd_baseline(cli, a),
        Command::Sample(a) => cmd_sample(cli, a),
    };
    match cli.threads {
        Some(0) => Err(Error::Config("threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(body),
        None => body(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => EXIT_INTERNAL,
    }
}
