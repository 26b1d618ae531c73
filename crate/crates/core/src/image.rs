//! Grayscale and label image containers, raster I/O, histograms and Otsu's threshold.

use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Input(format!(
                "buffer of {} bytes does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Applies a per-intensity lookup table.
    pub fn map(&self, lut: impl Fn(u8) -> u8) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| lut(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Decodes a raster file. Color inputs are reduced to BT.601 luma.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self::from_dynamic(&decoded))
    }

    pub fn from_dynamic(img: &image::DynamicImage) -> Self {
        use image::DynamicImage;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let data = match img {
            DynamicImage::ImageLuma8(g) => g.as_raw().clone(),
            DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
                img.to_luma8().into_raw()
            }
            _ => img
                .to_rgb8()
                .pixels()
                .map(|p| luma(p.0[0], p.0[1], p.0[2]))
                .collect(),
        };
        Self {
            width,
            height,
            data,
        }
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        write_gray_png(path.as_ref(), self.width, self.height, &self.data)
    }
}

/// BT.601 luma, rounded to nearest.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// How foreground labels map to gray levels in files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Polarity {
    /// Foreground text is black (0), background white (255). DIBCO ground truth uses this.
    #[default]
    TextBlack,
    /// Foreground is white (255).
    TextWhite,
}

impl Polarity {
    pub fn inverted(self) -> Self {
        match self {
            Polarity::TextBlack => Polarity::TextWhite,
            Polarity::TextWhite => Polarity::TextBlack,
        }
    }
}

/// Binary labels: 1 = foreground text, 0 = background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Input(format!(
                "label buffer of {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::Input(format!("label value {bad} is not 0 or 1")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, fg: bool) {
        self.data[y * self.width + x] = u8::from(fg);
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x) == 1)
    }

    pub fn same_dims<T: Dims>(&self, other: &T) -> Result<()> {
        check_dims(self, other)
    }

    /// Gray rendering under the given polarity.
    pub fn to_gray(&self, polarity: Polarity) -> GrayImage {
        let (fg, bg) = match polarity {
            Polarity::TextBlack => (0u8, 255u8),
            Polarity::TextWhite => (255u8, 0u8),
        };
        GrayImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| if v == 1 { fg } else { bg })
                .collect(),
        }
    }

    /// Thresholds a gray image at mid-level: under `TextBlack`, values below 128 are foreground.
    pub fn from_gray(im: &GrayImage, polarity: Polarity) -> Self {
        let data = im
            .data
            .iter()
            .map(|&v| match polarity {
                Polarity::TextBlack => u8::from(v < 128),
                Polarity::TextWhite => u8::from(v >= 128),
            })
            .collect();
        Self {
            width: im.width,
            height: im.height,
            data,
        }
    }

    pub fn load(path: impl AsRef<Path>, polarity: Polarity) -> Result<Self> {
        Ok(Self::from_gray(&GrayImage::load(path)?, polarity))
    }

    pub fn save_png(&self, path: impl AsRef<Path>, polarity: Polarity) -> Result<()> {
        self.to_gray(polarity).save_png(path)
    }
}

pub trait Dims {
    fn dims(&self) -> (usize, usize);
}

impl Dims for GrayImage {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl Dims for LabelImage {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn check_dims<A: Dims, B: Dims>(a: &A, b: &B) -> Result<()> {
    let (lw, lh) = a.dims();
    let (rw, rh) = b.dims();
    if (lw, lh) != (rw, rh) {
        return Err(Error::DimensionMismatch {
            left_w: lw,
            left_h: lh,
            right_w: rw,
            right_h: rh,
        });
    }
    Ok(())
}

fn write_gray_png(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, data.to_vec())
        .ok_or_else(|| Error::Input("png buffer size mismatch".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

/// 256-bin intensity histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    pub bins: [u64; 256],
    pub total: u64,
}

impl Histogram256 {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Self { bins, total }
    }
}

pub fn histogram(im: &GrayImage) -> Histogram256 {
    let mut bins = [0u64; 256];
    for &v in &im.data {
        bins[v as usize] += 1;
    }
    Histogram256 {
        bins,
        total: im.len() as u64,
    }
}

/// Otsu's global threshold.
///
/// Candidate `t` splits the histogram into `{v < t}` (dark class) and `{v >= t}`, so
/// pixels with `I - t < 0` are exactly the dark class. The returned threshold maximizes
/// the between-class variance; the smallest maximizer wins ties. A histogram with a
/// single occupied bin returns that bin's value.
pub fn otsu_threshold(h: &Histogram256) -> u8 {
    let occupied: Vec<usize> = (0..256).filter(|&v| h.bins[v] > 0).collect();
    match occupied.as_slice() {
        [] => return 0,
        [only] => return *only as u8,
        _ => {}
    }
    let total_n = h.total as i128;
    let total_s: i128 = (0..256).map(|v| v as i128 * h.bins[v] as i128).sum();

    let mut best_t = 0u8;
    let mut best = f64::NEG_INFINITY;
    let (mut n0, mut s0) = (0i128, 0i128);
    for t in 0..256usize {
        if t > 0 {
            n0 += h.bins[t - 1] as i128;
            s0 += (t as i128 - 1) * h.bins[t - 1] as i128;
        }
        let n1 = total_n - n0;
        let s1 = total_s - s0;
        let score = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            // omega0 * omega1 * (mu0 - mu1)^2, up to the constant factor 1/N^2
            let d = (s0 * n1 - s1 * n0) as f64;
            d * d / ((n0 * n1) as f64)
        };
        if score > best {
            best = score;
            best_t = t as u8;
        }
    }
    best_t
}
