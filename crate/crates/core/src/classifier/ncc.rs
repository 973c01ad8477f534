//! Zero-normalized cross-correlation.

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};

/// Zero-normalized cross-correlation of two equally sized images.
///
/// Returns 0 when either image is constant.
pub fn ncc(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::SizeMismatch {
            left_width: a.width() as usize,
            left_height: a.height() as usize,
            right_width: b.width() as usize,
            right_height: b.height() as usize,
        });
    }
    let n = a.as_raw().len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mean = |img: &GrayImage| img.as_raw().iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.as_raw().iter().zip(b.as_raw()) {
        let dx = f64::from(x) - ma;
        let dy = f64::from(y) - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Luma of an RGB image rounded to 8 bits, using the same weights as
/// border detection.
pub fn to_gray(image: &RgbImage) -> GrayImage {
    let data = image
        .as_raw()
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            y.round_ties_even() as u8
        })
        .collect();
    GrayImage::from_raw(image.width(), image.height(), data).expect("one byte per pixel")
}

/// Template with precomputed statistics for sliding-window matching.
#[derive(Clone, Debug)]
pub struct PreparedTemplate {
    width: usize,
    height: usize,
    pixels: Vec<u32>,
    sum: i64,
    /// `N·Σt² − (Σt)²`
    spread: i64,
}

impl PreparedTemplate {
    pub fn new(template: &GrayImage) -> Self {
        let pixels: Vec<u32> = template.as_raw().iter().map(|&v| u32::from(v)).collect();
        let n = pixels.len() as i64;
        let sum: i64 = pixels.iter().map(|&v| i64::from(v)).sum();
        let sq: i64 = pixels.iter().map(|&v| i64::from(v) * i64::from(v)).sum();
        Self {
            width: template.width() as usize,
            height: template.height() as usize,
            pixels,
            sum,
            spread: n * sq - sum * sum,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_constant(&self) -> bool {
        self.spread == 0
    }
}

/// Best match of a template over all placements fully inside an image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestMatch {
    pub score: f64,
    pub x: u32,
    pub y: u32,
}

struct Integral {
    width: usize,
    sum: Vec<i64>,
    sq: Vec<i64>,
}

impl Integral {
    fn new(image: &GrayImage) -> Self {
        let (w, h) = (image.width() as usize, image.height() as usize);
        let stride = w + 1;
        let mut sum = vec![0i64; stride * (h + 1)];
        let mut sq = vec![0i64; stride * (h + 1)];
        let raw = image.as_raw();
        for y in 0..h {
            let (mut row_sum, mut row_sq) = (0i64, 0i64);
            for x in 0..w {
                let v = i64::from(raw[y * w + x]);
                row_sum += v;
                row_sq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row_sum;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + row_sq;
            }
        }
        Self { width: w, sum, sq }
    }

    fn window(&self, table: &[i64], x: usize, y: usize, w: usize, h: usize) -> i64 {
        let stride = self.width + 1;
        table[(y + h) * stride + x + w] - table[y * stride + x + w] - table[(y + h) * stride + x]
            + table[y * stride + x]
    }
}

/// Maximum NCC of `template` over every placement fully inside `image`.
///
/// Constant windows score 0. Returns `None` when the template does not fit.
pub fn best_match(template: &PreparedTemplate, image: &GrayImage) -> Option<BestMatch> {
    let (iw, ih) = (image.width() as usize, image.height() as usize);
    let (tw, th) = (template.width, template.height);
    if tw == 0 || th == 0 || tw > iw || th > ih {
        return None;
    }
    let integral = Integral::new(image);
    let raw = image.as_raw();
    let n = (tw * th) as i64;
    let mut best = BestMatch {
        score: f64::NEG_INFINITY,
        x: 0,
        y: 0,
    };
    for y in 0..=ih - th {
        for x in 0..=iw - tw {
            let s = integral.window(&integral.sum, x, y, tw, th);
            let sq = integral.window(&integral.sq, x, y, tw, th);
            let spread = n * sq - s * s;
            let score = if spread == 0 || template.spread == 0 {
                0.0
            } else {
                let mut dot: u32 = 0;
                for (row, trow) in template.pixels.chunks_exact(tw).enumerate() {
                    let start = (y + row) * iw + x;
                    let window = &raw[start..start + tw];
                    dot += trow
                        .iter()
                        .zip(window)
                        .map(|(&t, &w)| t * u32::from(w))
                        .sum::<u32>();
                }
                let cov = n * i64::from(dot) - template.sum * s;
                (cov as f64 / ((template.spread as f64).sqrt() * (spread as f64).sqrt()))
                    .clamp(-1.0, 1.0)
            };
            if score > best.score {
                best = BestMatch {
                    score,
                    x: x as u32,
                    y: y as u32,
                };
            }
        }
    }
    Some(best)
}
