//! Canonical UI frame geometry: border removal, rescaling and tile crops.

use std::fmt;
use std::str::FromStr;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the canonical UI frame.
pub const NORMALIZED_WIDTH: u32 = 640;
/// Height of the canonical UI frame.
pub const NORMALIZED_HEIGHT: u32 = 521;

/// Smallest accepted raw frame edge.
pub const MIN_FRAME_EDGE: u32 = 16;

/// Tile slot along the bottom of the UI, numbered left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TilePosition {
    T1,
    T2,
    T3,
    T4,
}

impl TilePosition {
    pub const ALL: [TilePosition; 4] = [Self::T1, Self::T2, Self::T3, Self::T4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::T1 => "T1",
            Self::T2 => "T2",
            Self::T3 => "T3",
            Self::T4 => "T4",
        }
    }
}

impl fmt::Display for TilePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TilePosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T1" => Ok(Self::T1),
            "T2" => Ok(Self::T2),
            "T3" => Ok(Self::T3),
            "T4" => Ok(Self::T4),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Axis-aligned rectangle. The origin may be negative for crop windows that
/// reach past the frame edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, width: u32, height: u32) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    /// Exclusive right edge.
    pub fn right(&self) -> i32 {
        self.x + self.width as i32
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> i32 {
        self.y + self.height as i32
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.width, self.height)
    }
}

/// A recorded frame before any normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame(RgbImage);

impl RawFrame {
    pub fn new(image: RgbImage) -> Result<Self> {
        if image.width() < MIN_FRAME_EDGE || image.height() < MIN_FRAME_EDGE {
            return Err(Error::InvalidFrame(format!(
                "{}x{} is smaller than {MIN_FRAME_EDGE}x{MIN_FRAME_EDGE}",
                image.width(),
                image.height()
            )));
        }
        Ok(Self(image))
    }

    /// Builds a frame from a row-major RGB buffer.
    pub fn from_rgb(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "pixel buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        let image = RgbImage::from_raw(width, height, pixels)
            .ok_or_else(|| Error::InvalidFrame("pixel buffer rejected".into()))?;
        Self::new(image)
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn image(&self) -> &RgbImage {
        &self.0
    }

    pub fn into_image(self) -> RgbImage {
        self.0
    }
}

/// A frame in the canonical 640×521 UI coordinate system.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedFrame(RgbImage);

impl NormalizedFrame {
    pub fn new(image: RgbImage) -> Result<Self> {
        if image.dimensions() != (NORMALIZED_WIDTH, NORMALIZED_HEIGHT) {
            return Err(Error::InvalidFrame(format!(
                "normalized frame must be {NORMALIZED_WIDTH}x{NORMALIZED_HEIGHT}, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        Ok(Self(image))
    }

    pub fn image(&self) -> &RgbImage {
        &self.0
    }

    pub fn into_image(self) -> RgbImage {
        self.0
    }
}

/// One tile crop with the slot it was cut from.
#[derive(Clone, Debug, PartialEq)]
pub struct TileCrop {
    pub position: TilePosition,
    pub image: RgbImage,
}

impl TileCrop {
    pub fn new(position: TilePosition, image: RgbImage) -> Self {
        Self { position, image }
    }
}

/// Tile layout and border-detection parameters.
///
/// Tile cores are `tile_core_width` wide and laid side by side from x = 0;
/// each crop adds `margin` pixels on every side to absorb small UI shifts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub tile_core_width: u32,
    pub tile_core_height: u32,
    pub margin: u32,
    /// Distance from the frame bottom to the bottom edge of the tile cores.
    pub bottom_offset: u32,
    /// Pixels with luma strictly below this value count as black.
    pub border_luma_threshold: f64,
    /// Fraction of black pixels at which a border line counts as black.
    pub border_black_fraction: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            tile_core_width: 160,
            tile_core_height: 20,
            margin: 4,
            bottom_offset: 8,
            border_luma_threshold: 8.0,
            border_black_fraction: 0.99,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_core_width == 0 || self.tile_core_height == 0 {
            return Err(Error::InvalidConfig("tile core must be non-empty".into()));
        }
        if self.tile_core_width * 4 > NORMALIZED_WIDTH {
            return Err(Error::InvalidConfig(format!(
                "four tiles of width {} do not fit into {NORMALIZED_WIDTH} px",
                self.tile_core_width
            )));
        }
        if self.bottom_offset + self.tile_core_height > NORMALIZED_HEIGHT {
            return Err(Error::InvalidConfig(
                "tile cores extend above the top of the frame".into(),
            ));
        }
        if !(0.0..=255.0).contains(&self.border_luma_threshold) {
            return Err(Error::InvalidConfig(
                "border_luma_threshold must lie in [0, 255]".into(),
            ));
        }
        if !(self.border_black_fraction > 0.0 && self.border_black_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "border_black_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn crop_width(&self) -> u32 {
        self.tile_core_width + 2 * self.margin
    }

    pub fn crop_height(&self) -> u32 {
        self.tile_core_height + 2 * self.margin
    }

    /// Nominal (unshifted) tile core in normalized frame coordinates.
    pub fn core_rect(&self, position: TilePosition) -> Rect {
        let x = position.index() as u32 * self.tile_core_width;
        let y = NORMALIZED_HEIGHT - self.bottom_offset - self.tile_core_height;
        Rect::new(
            x as i32,
            y as i32,
            self.tile_core_width,
            self.tile_core_height,
        )
    }

    /// Crop window in normalized frame coordinates; may extend past the frame.
    pub fn crop_rect(&self, position: TilePosition) -> Rect {
        let core = self.core_rect(position);
        let m = self.margin as i32;
        Rect::new(
            core.x - m,
            core.y - m,
            self.crop_width(),
            self.crop_height(),
        )
    }
}

fn luma(p: &Rgb<u8>) -> f64 {
    0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
}

/// Finds the region inside any black border.
///
/// Rows are scanned inward from the top and bottom edges, stopping at the
/// first non-black row. Columns are then scanned inward from the left and
/// right edges, judged over the retained rows only.
pub fn detect_content_box(frame: &RawFrame, cfg: &GeometryConfig) -> Result<Rect> {
    let image = frame.image();
    let (width, height) = image.dimensions();
    let threshold = cfg.border_luma_threshold;
    let fraction = cfg.border_black_fraction;

    let is_dark = |x: u32, y: u32| luma(image.get_pixel(x, y)) < threshold;
    let is_black_line = |dark_count: usize, len: usize| dark_count as f64 >= fraction * len as f64;

    let row_black = |y: u32| {
        let count = (0..width).filter(|&x| is_dark(x, y)).count();
        is_black_line(count, width as usize)
    };
    let top = (0..height)
        .find(|&y| !row_black(y))
        .ok_or(Error::AllBlackFrame)?;
    // A non-black row exists, so the reverse scan terminates at or below `top`.
    let bottom = (top..height).rev().find(|&y| !row_black(y)).unwrap_or(top) + 1;

    let rows = bottom - top;
    let col_black = |x: u32| {
        let count = (top..bottom).filter(|&y| is_dark(x, y)).count();
        is_black_line(count, rows as usize)
    };
    let left = (0..width)
        .find(|&x| !col_black(x))
        .ok_or(Error::AllBlackFrame)?;
    let right = (left..width).rev().find(|&x| !col_black(x)).unwrap_or(left) + 1;

    Ok(Rect::new(left as i32, top as i32, right - left, rows))
}

#[derive(Clone, Copy)]
struct Tap {
    lo: u32,
    hi: u32,
    frac: f64,
}

/// Sample positions for resampling `src_len` pixels onto `dst_len` pixels
/// with pixel-center alignment and edge clamping.
fn bilinear_taps(src_offset: u32, src_len: u32, dst_len: u32) -> Vec<Tap> {
    let scale = f64::from(src_len) / f64::from(dst_len);
    let max = f64::from(src_len - 1);
    (0..dst_len)
        .map(|d| {
            let s = ((f64::from(d) + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = s.floor();
            let frac = s - lo;
            let lo = lo as u32;
            let hi = (lo + 1).min(src_len - 1);
            Tap {
                lo: src_offset + lo,
                hi: src_offset + hi,
                frac,
            }
        })
        .collect()
}

/// Bilinear resampling of `region` of `src` to `dst_width`×`dst_height`.
/// Results are quantized with round-half-to-even.
pub(crate) fn resize_bilinear(
    src: &RgbImage,
    region: Rect,
    dst_width: u32,
    dst_height: u32,
) -> RgbImage {
    let window = Rect::new(0, 0, dst_width, dst_height);
    resize_window(src, region, dst_width, dst_height, window)
}

/// The `window` part of [`resize_bilinear`]'s output, computed without the
/// rest. Window pixels outside the output replicate its nearest edge.
fn resize_window(
    src: &RgbImage,
    region: Rect,
    dst_width: u32,
    dst_height: u32,
    window: Rect,
) -> RgbImage {
    debug_assert!(region.x >= 0 && region.y >= 0);
    debug_assert!(region.right() as u32 <= src.width() && region.bottom() as u32 <= src.height());
    let pick = |taps: Vec<Tap>, from: i32, len: u32| -> Vec<Tap> {
        let last = taps.len() as i32 - 1;
        (from..from + len as i32)
            .map(|d| taps[d.clamp(0, last) as usize])
            .collect()
    };
    let xs = pick(
        bilinear_taps(region.x as u32, region.width, dst_width),
        window.x,
        window.width,
    );
    let ys = pick(
        bilinear_taps(region.y as u32, region.height, dst_height),
        window.y,
        window.height,
    );
    let stride = src.width() as usize * 3;
    let raw = src.as_raw();

    let mut out = Vec::with_capacity(xs.len() * ys.len() * 3);
    for ty in &ys {
        let row0 = &raw[ty.lo as usize * stride..][..stride];
        let row1 = &raw[ty.hi as usize * stride..][..stride];
        let wy = ty.frac;
        for tx in &xs {
            let (a, b) = (tx.lo as usize * 3, tx.hi as usize * 3);
            let wx = tx.frac;
            for c in 0..3 {
                let top = f64::from(row0[a + c]) * (1.0 - wx) + f64::from(row0[b + c]) * wx;
                let bot = f64::from(row1[a + c]) * (1.0 - wx) + f64::from(row1[b + c]) * wx;
                let v = top * (1.0 - wy) + bot * wy;
                out.push(v.round_ties_even().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RgbImage::from_raw(window.width, window.height, out).expect("buffer sized for output")
}

/// Removes the black border and rescales the content to 640×521.
///
/// The content is scaled anisotropically when its aspect ratio is not 5:4.
pub fn normalize(frame: &RawFrame, cfg: &GeometryConfig) -> Result<NormalizedFrame> {
    let content = detect_content_box(frame, cfg)?;
    let image = resize_bilinear(frame.image(), content, NORMALIZED_WIDTH, NORMALIZED_HEIGHT);
    NormalizedFrame::new(image)
}

/// Cuts the four tile crops, T1 to T4. Pixels outside the frame are filled
/// by replicating the nearest edge pixel.
pub fn crop_tiles(frame: &NormalizedFrame, cfg: &GeometryConfig) -> [TileCrop; 4] {
    TilePosition::ALL
        .map(|position| TileCrop::new(position, crop_rect(frame.image(), cfg.crop_rect(position))))
}

/// Same crops as [`normalize`] followed by [`crop_tiles`], but resamples
/// only the crop windows instead of the whole frame.
pub fn extract_tiles(frame: &RawFrame, cfg: &GeometryConfig) -> Result<[TileCrop; 4]> {
    let content = detect_content_box(frame, cfg)?;
    Ok(TilePosition::ALL.map(|position| {
        let image = resize_window(
            frame.image(),
            content,
            NORMALIZED_WIDTH,
            NORMALIZED_HEIGHT,
            cfg.crop_rect(position),
        );
        TileCrop::new(position, image)
    }))
}

fn crop_rect(src: &RgbImage, rect: Rect) -> RgbImage {
    let (w, h) = (src.width() as i32, src.height() as i32);
    let raw = src.as_raw();
    let mut out = Vec::with_capacity(rect.width as usize * rect.height as usize * 3);
    for cy in rect.y..rect.bottom() {
        let sy = cy.clamp(0, h - 1) as usize;
        let row = &raw[sy * w as usize * 3..][..w as usize * 3];
        let inside_lo = rect.x.max(0);
        let inside_hi = rect.right().min(w);
        for cx in rect.x..inside_lo {
            let sx = cx.clamp(0, w - 1) as usize * 3;
            out.extend_from_slice(&row[sx..sx + 3]);
        }
        if inside_lo < inside_hi {
            out.extend_from_slice(&row[inside_lo as usize * 3..inside_hi as usize * 3]);
        }
        for cx in inside_hi.max(rect.x)..rect.right() {
            let sx = cx.clamp(0, w - 1) as usize * 3;
            out.extend_from_slice(&row[sx..sx + 3]);
        }
    }
    RgbImage::from_raw(rect.width, rect.height, out).expect("buffer sized for crop")
}
