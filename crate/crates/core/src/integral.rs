//! Summed-area tables for O(1) windowed mean and standard deviation.

use crate::image::GrayImage;

/// Cumulative sums of `I` and `I²` with a zero guard row and column.
#[derive(Clone, Debug)]
pub struct IntegralPair {
    width: usize,
    height: usize,
    sum: Vec<u64>,
    sqsum: Vec<u64>,
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    #[inline]
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// The `w × h` window centred on `(x, y)`, clipped to a `width × height` image.
///
/// Even sides extend one pixel further right/down than left/up.
#[inline]
pub fn centered_window(x: usize, y: usize, w: usize, h: usize, width: usize, height: usize) -> Rect {
    let (wl, wr) = ((w.max(1) - 1) / 2, w.max(1) / 2);
    let (ht, hb) = ((h.max(1) - 1) / 2, h.max(1) / 2);
    Rect {
        x0: x.saturating_sub(wl),
        y0: y.saturating_sub(ht),
        x1: (x + wr + 1).min(width),
        y1: (y + hb + 1).min(height),
    }
}

impl IntegralPair {
    pub fn new(im: &GrayImage) -> Self {
        let (w, h) = (im.width(), im.height());
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sqsum = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_s = 0u64;
            let mut row_q = 0u64;
            for (x, &v) in im.row(y).iter().enumerate() {
                let v = u64::from(v);
                row_s += v;
                row_q += v * v;
                let idx = (y + 1) * stride + x + 1;
                sum[idx] = sum[idx - stride] + row_s;
                sqsum[idx] = sqsum[idx - stride] + row_q;
            }
        }
        Self {
            width: w,
            height: h,
            sum,
            sqsum,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw table entry: sum over `[0, x) × [0, y)`.
    #[inline]
    pub fn sum_at(&self, x: usize, y: usize) -> u64 {
        self.sum[y * (self.width + 1) + x]
    }

    #[inline]
    fn query(table: &[u64], stride: usize, r: Rect) -> u64 {
        let a = table[r.y1 * stride + r.x1];
        let b = table[r.y0 * stride + r.x1];
        let c = table[r.y1 * stride + r.x0];
        let d = table[r.y0 * stride + r.x0];
        a + d - b - c
    }

    #[inline]
    pub fn rect_sum(&self, r: Rect) -> u64 {
        Self::query(&self.sum, self.width + 1, r)
    }

    #[inline]
    pub fn rect_sqsum(&self, r: Rect) -> u64 {
        Self::query(&self.sqsum, self.width + 1, r)
    }

    /// Mean and standard deviation over the clipped `w × h` window centred on `(x, y)`.
    #[inline]
    pub fn local_stats(&self, x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
        let r = centered_window(x, y, w, h, self.width, self.height);
        let n = r.area() as u128;
        let s = u128::from(self.rect_sum(r));
        let q = u128::from(self.rect_sqsum(r));
        // n·Σq - (Σs)² is exact and never negative
        let nf = n as f64;
        let var = (n * q - s * s) as f64 / (nf * nf);
        (s as f64 / nf, var.sqrt())
    }

    #[inline]
    pub fn local_mean(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        let r = centered_window(x, y, w, h, self.width, self.height);
        self.rect_sum(r) as f64 / r.area() as f64
    }

    #[inline]
    pub fn local_std(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        self.local_stats(x, y, w, h).1
    }
}

pub fn integral(im: &GrayImage) -> IntegralPair {
    IntegralPair::new(im)
}
