//! Template-matching backend.
//!
//! A tile counts as a camera tile when any template correlates with some
//! window of the tile above `ncc_threshold`. The camera tile is active when
//! the mean color of its interior is light blue.
//!
//! This backend needs no trained model. It is exact on frames produced by
//! [`crate::synth`], which renders from the same icon, and doubles as a
//! bootstrap classifier for real footage once templates are cut from it.

use image::{GrayImage, Luma, RgbImage};

use super::ncc::{best_match, to_gray, PreparedTemplate};
use super::{BackendDescriptor, ClassifierBackend, TileScores};
use crate::error::{Error, Result};
use crate::geometry::TileCrop;

pub const CAMERA_ICON_WIDTH: u32 = 32;
pub const CAMERA_ICON_HEIGHT: u32 = 16;

/// The built-in endoscope icon: a video-camera glyph, white on black.
pub fn camera_icon() -> GrayImage {
    let on = |x: i32, y: i32| -> bool {
        // body outline, 2 px stroke
        let in_body = (1..=21).contains(&x) && (2..=13).contains(&y);
        let body_inner = (3..=19).contains(&x) && (4..=11).contains(&y);
        // lens
        let (dx, dy) = (f64::from(x) - 11.0, f64::from(y) - 7.5);
        let lens = dx * dx + dy * dy <= 9.0;
        // viewfinder cone opening to the right
        let cone = (23..=30).contains(&x) && (y - 8).abs() <= 2 + (x - 23) * 4 / 7;
        (in_body && !body_inner) || lens || cone
    };
    GrayImage::from_fn(CAMERA_ICON_WIDTH, CAMERA_ICON_HEIGHT, |x, y| {
        Luma([if on(x as i32, y as i32) { 255 } else { 0 }])
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateBackendConfig {
    pub templates: Vec<GrayImage>,
    /// Minimum NCC for a tile to count as a camera tile, in [−1, 1].
    pub ncc_threshold: f64,
    /// Inclusive hue interval in degrees.
    pub highlight_hue_range: [f64; 2],
    pub highlight_min_saturation: f64,
    pub highlight_min_value: f64,
    /// Pixels excluded on every side of the crop before averaging color, so
    /// only the tile core contributes.
    pub color_inset: u32,
}

impl Default for TemplateBackendConfig {
    fn default() -> Self {
        Self {
            templates: vec![camera_icon()],
            ncc_threshold: 0.7,
            highlight_hue_range: [190.0, 230.0],
            highlight_min_saturation: 0.25,
            highlight_min_value: 0.5,
            color_inset: 4,
        }
    }
}

impl TemplateBackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one template is required".into(),
            ));
        }
        for (i, t) in self.templates.iter().enumerate() {
            if t.width() == 0 || t.height() == 0 {
                return Err(Error::InvalidConfig(format!("template {i} is empty")));
            }
            if PreparedTemplate::new(t).is_constant() {
                return Err(Error::InvalidConfig(format!(
                    "template {i} has zero variance"
                )));
            }
        }
        if !(-1.0..=1.0).contains(&self.ncc_threshold) {
            return Err(Error::InvalidConfig(
                "ncc_threshold must lie in [-1, 1]".into(),
            ));
        }
        let [lo, hi] = self.highlight_hue_range;
        if !(0.0..=360.0).contains(&lo) || !(0.0..=360.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidConfig(format!("bad hue range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Hue (degrees), saturation and value (both in [0, 1]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hsv {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

impl Hsv {
    pub fn from_rgb(r: f64, g: f64, b: f64) -> Self {
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let hue = if delta == 0.0 {
            0.0
        } else if max == r {
            60.0 * ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        Self {
            hue,
            saturation: if max == 0.0 { 0.0 } else { delta / max },
            value: max / 255.0,
        }
    }
}

/// Mean color of `image` with `inset` pixels trimmed from every side.
pub fn mean_color(image: &RgbImage, inset: u32) -> Hsv {
    let (w, h) = image.dimensions();
    let (x0, x1, y0, y1) = if 2 * inset < w && 2 * inset < h {
        (inset, w - inset, inset, h - inset)
    } else {
        (0, w, 0, h)
    };
    let mut sum = [0u64; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = image.get_pixel(x, y);
            for c in 0..3 {
                sum[c] += u64::from(p[c]);
            }
        }
    }
    let n = f64::from((x1 - x0) * (y1 - y0)).max(1.0);
    Hsv::from_rgb(sum[0] as f64 / n, sum[1] as f64 / n, sum[2] as f64 / n)
}

/// Intermediate measurements behind a template decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemplateEvidence {
    /// Best NCC over all templates and placements.
    pub camera_score: f64,
    pub color: Hsv,
    pub is_camera: bool,
    pub highlighted: bool,
}

impl TemplateEvidence {
    pub fn scores(&self) -> TileScores {
        let s = if self.is_camera { 1.0 } else { 0.0 };
        let h = if self.highlighted { 1.0 } else { 0.0 };
        TileScores::new([1.0 - s, s * (1.0 - h), s * h]).expect("finite by construction")
    }
}

#[derive(Clone, Debug)]
pub struct TemplateBackend {
    config: TemplateBackendConfig,
    prepared: Vec<PreparedTemplate>,
}

impl TemplateBackend {
    pub fn new(config: TemplateBackendConfig) -> Result<Self> {
        config.validate()?;
        let prepared = config.templates.iter().map(PreparedTemplate::new).collect();
        Ok(Self { config, prepared })
    }

    pub fn config(&self) -> &TemplateBackendConfig {
        &self.config
    }

    pub fn evidence(&self, tile: &TileCrop) -> Result<TemplateEvidence> {
        let gray = to_gray(&tile.image);
        let mut camera_score = f64::NEG_INFINITY;
        for template in &self.prepared {
            let m = best_match(template, &gray).ok_or(Error::SizeMismatch {
                left_width: template.width(),
                left_height: template.height(),
                right_width: gray.width() as usize,
                right_height: gray.height() as usize,
            })?;
            camera_score = camera_score.max(m.score);
        }
        let cfg = &self.config;
        let color = mean_color(&tile.image, cfg.color_inset);
        let [lo, hi] = cfg.highlight_hue_range;
        let highlighted = (lo..=hi).contains(&color.hue)
            && color.saturation >= cfg.highlight_min_saturation
            && color.value >= cfg.highlight_min_value;
        Ok(TemplateEvidence {
            camera_score,
            color,
            is_camera: camera_score >= cfg.ncc_threshold,
            highlighted,
        })
    }
}

impl ClassifierBackend for TemplateBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "template".into(),
            version: format!(
                "{}+{}tpl@{:.3}",
                env!("CARGO_PKG_VERSION"),
                self.prepared.len(),
                self.config.ncc_threshold
            ),
        }
    }

    fn classify(&self, tile: &TileCrop) -> Result<TileScores> {
        Ok(self.evidence(tile)?.scores())
    }
}

/// One-shot template classification; prefer a [`TemplateBackend`] for
/// repeated calls.
pub fn template_classify(cfg: &TemplateBackendConfig, tile: &TileCrop) -> Result<TileScores> {
    TemplateBackend::new(cfg.clone())?.classify(tile)
}
