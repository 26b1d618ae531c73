//! Window geometry and sliding-window extrema.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::image::GrayImage;

/// Odd window side for a nominal scale: `n` if odd, `n + 1` if even, never below 3.
#[inline]
pub fn odd_window(n: usize) -> usize {
    (n | 1).max(3)
}

/// Per-pixel window minimum and maximum maps.
#[derive(Clone, Debug)]
pub struct MinMaxMaps {
    pub width: usize,
    pub height: usize,
    pub min: Vec<u8>,
    pub max: Vec<u8>,
}

/// Sliding extremum over the clipped window `[i - left, i + right]`.
///
/// `keep_back(back, new)` returns true when `back` should survive the arrival of `new`.
fn sliding_extremum<F>(src: &[u8], dst: &mut [u8], left: usize, right: usize, keep_back: F)
where
    F: Fn(u8, u8) -> bool,
{
    let n = src.len();
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(left + right + 1);
    let mut next = 0usize;
    for i in 0..n {
        let hi = (i + right).min(n - 1);
        while next <= hi {
            let v = src[next];
            while let Some(&b) = dq.back() {
                if keep_back(src[b], v) {
                    break;
                }
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(left);
        while let Some(&f) = dq.front() {
            if f < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        dst[i] = src[*dq.front().expect("window is never empty")];
    }
}

fn separable(
    data: &[u8],
    width: usize,
    height: usize,
    w: usize,
    h: usize,
    keep_back: fn(u8, u8) -> bool,
) -> Vec<u8> {
    let (wl, wr) = ((w.max(1) - 1) / 2, w.max(1) / 2);
    let (ht, hb) = ((h.max(1) - 1) / 2, h.max(1) / 2);

    let mut rows = vec![0u8; width * height];
    rows.par_chunks_mut(width)
        .zip(data.par_chunks(width))
        .for_each(|(dst, src)| sliding_extremum(src, dst, wl, wr, keep_back));

    // columns via a transpose so the inner pass stays contiguous
    let mut t = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            t[x * height + y] = rows[y * width + x];
        }
    }
    let mut tc = vec![0u8; width * height];
    tc.par_chunks_mut(height)
        .zip(t.par_chunks(height))
        .for_each(|(dst, src)| sliding_extremum(src, dst, ht, hb, keep_back));

    let mut out = vec![0u8; width * height];
    for x in 0..width {
        for y in 0..height {
            out[y * width + x] = tc[x * height + y];
        }
    }
    out
}

/// Per-pixel min and max over the clipped `w × h` window, O(W·H) per call.
pub fn window_min_max(im: &GrayImage, w: usize, h: usize) -> MinMaxMaps {
    let (width, height) = (im.width(), im.height());
    MinMaxMaps {
        width,
        height,
        min: separable(im.data(), width, height, w, h, |b, v| b < v),
        max: separable(im.data(), width, height, w, h, |b, v| b > v),
    }
}

/// Window maximum of a raw byte map; used for binary dilation.
pub fn window_max(data: &[u8], width: usize, height: usize, w: usize, h: usize) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    separable(data, width, height, w, h, |b, v| b > v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integral::centered_window;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(im: &GrayImage, w: usize, h: usize) -> (Vec<u8>, Vec<u8>) {
        let mut mn = Vec::new();
        let mut mx = Vec::new();
        for y in 0..im.height() {
            for x in 0..im.width() {
                let r = centered_window(x, y, w, h, im.width(), im.height());
                let mut lo = 255u8;
                let mut hi = 0u8;
                for yy in r.y0..r.y1 {
                    for xx in r.x0..r.x1 {
                        lo = lo.min(im.get(xx, yy));
                        hi = hi.max(im.get(xx, yy));
                    }
                }
                mn.push(lo);
                mx.push(hi);
            }
        }
        (mn, mx)
    }

    #[test]
    fn odd_window_rounding() {
        let sides: Vec<usize> = [1, 2, 4, 8].iter().map(|&k| odd_window(k)).collect();
        assert_eq!(sides, vec![3, 3, 5, 9]);
        assert_eq!(odd_window(15), 15);
        assert_eq!(odd_window(16), 17);
    }

    #[test]
    fn constant_image() {
        let m = window_min_max(&GrayImage::filled(6, 4, 42), 3, 3);
        assert!(m.min.iter().chain(m.max.iter()).all(|&v| v == 42));
    }

    #[test]
    fn single_dark_pixel() {
        let mut im = GrayImage::filled(7, 7, 255);
        im.set(3, 3, 0);
        let m = window_min_max(&im, 3, 3);
        for y in 0..7usize {
            for x in 0..7usize {
                let near = x.abs_diff(3usize) <= 1 && y.abs_diff(3usize) <= 1;
                assert_eq!(m.min[y * 7 + x] == 0, near, "({x},{y})");
                assert_eq!(m.max[y * 7 + x], 255);
            }
        }
    }

    #[test]
    fn random_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (w, h) in [(5, 5), (1, 1), (4, 7), (31, 3)] {
            let width = rng.random_range(1..20);
            let height = rng.random_range(1..20);
            let data: Vec<u8> = (0..width * height).map(|_| rng.random()).collect();
            let im = GrayImage::new(width, height, data).unwrap();
            let m = window_min_max(&im, w, h);
            let (mn, mx) = brute(&im, w, h);
            assert_eq!(m.min, mn);
            assert_eq!(m.max, mx);
        }
    }
}
