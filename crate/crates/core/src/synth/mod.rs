//! Deterministic Xi-UI-like frames with known ground truth.
//!
//! Frames are rendered in the canonical 640×521 coordinate system using the
//! same [`GeometryConfig`] as the pipeline, then padded with a black border and
//! rescaled. All randomness comes from ChaCha8 (`rand_chacha`) seeded per
//! frame, so a seed reproduces a frame bit for bit on every platform.

mod font;

use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::template::{camera_icon, CAMERA_ICON_HEIGHT, CAMERA_ICON_WIDTH};
use crate::classifier::TileClass;
use crate::error::{Error, Result};
use crate::evaluation::{write_annotations, CameraAnnotation, FrameAnnotation};
use crate::geometry::{
    resize_bilinear, GeometryConfig, RawFrame, Rect, TilePosition, NORMALIZED_HEIGHT,
    NORMALIZED_WIDTH,
};

pub use font::{text_pixels, text_width};

/// Tile fill blended over the background.
const TILE_COLOR: [f64; 3] = [20.0, 20.0, 24.0];
const TILE_OPACITY: f64 = 0.7;
/// Light-blue highlight of controlled arms.
pub const HIGHLIGHT_COLOR: [f64; 3] = [110.0, 200.0, 255.0];
const HIGHLIGHT_OPACITY: f64 = 0.75;
const GLYPH_COLOR: Rgb<u8> = Rgb([235, 235, 235]);

const INSTRUMENTS: [&str; 8] = [
    "CADIERE FORCEPS",
    "MONOPOLAR SCISSORS",
    "LARGE NEEDLE DRIVER",
    "FENESTRATED BIPOLAR",
    "PROGRASP FORCEPS",
    "VESSEL SEALER",
    "TIP-UP GRASPER",
    "CLIP APPLIER",
];

const SOLID_PALETTE: [[u8; 3]; 6] = [
    [170, 60, 50],
    [200, 120, 110],
    [120, 80, 40],
    [90, 90, 90],
    [230, 200, 170],
    [60, 30, 30],
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    /// Tissue-colored per-pixel noise.
    Noise,
    Solid([u8; 3]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub frame_index: u64,
    pub camera: Option<CameraAnnotation>,
    /// Global UI displacement in normalized pixels.
    pub ui_shift: (i32, i32),
    /// Black padding added on every side, in normalized pixels.
    pub border: u32,
    pub output_scale: f64,
    pub background: Background,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            frame_index: 0,
            camera: None,
            ui_shift: (0, 0),
            border: 0,
            output_scale: 1.0,
            background: Background::Noise,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self, geometry: &GeometryConfig) -> Result<()> {
        let m = geometry.margin as i32;
        let (dx, dy) = self.ui_shift;
        if dx.abs() > m || dy.abs() > m {
            return Err(Error::InvalidSpec(format!(
                "ui_shift ({dx}, {dy}) exceeds the {m} px margin"
            )));
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "bad output_scale {}",
                self.output_scale
            )));
        }
        let (w, h) = self.output_size();
        if w < crate::geometry::MIN_FRAME_EDGE || h < crate::geometry::MIN_FRAME_EDGE {
            return Err(Error::InvalidSpec(format!("output {w}x{h} is too small")));
        }
        if geometry.tile_core_width < CAMERA_ICON_WIDTH + 8
            || geometry.tile_core_height < CAMERA_ICON_HEIGHT + 2
        {
            return Err(Error::InvalidSpec(
                "tile core too small for the camera icon".into(),
            ));
        }
        if let Background::Solid(c) = self.background {
            let luma = 0.299 * f64::from(c[0]) + 0.587 * f64::from(c[1]) + 0.114 * f64::from(c[2]);
            if luma <= geometry.border_luma_threshold * 2.0 {
                return Err(Error::InvalidSpec(format!(
                    "background {c:?} is too dark to separate from the border"
                )));
            }
        }
        Ok(())
    }

    pub fn output_size(&self) -> (u32, u32) {
        let w = f64::from(NORMALIZED_WIDTH + 2 * self.border) * self.output_scale;
        let h = f64::from(NORMALIZED_HEIGHT + 2 * self.border) * self.output_scale;
        (w.round() as u32, h.round() as u32)
    }

    /// Ground truth per tile, without rendering.
    pub fn tile_truth(&self) -> [TileClass; 4] {
        self.annotation().tile_truth()
    }

    pub fn annotation(&self) -> FrameAnnotation {
        FrameAnnotation {
            frame_index: self.frame_index,
            camera: self.camera,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthFrame {
    pub frame: RawFrame,
    pub truth: FrameAnnotation,
    pub tile_truth: [TileClass; 4],
    /// Rendered tile cores in normalized coordinates.
    pub tile_rects: [Rect; 4],
}

fn blend(px: &mut Rgb<u8>, color: [f64; 3], opacity: f64) {
    for c in 0..3 {
        let v = f64::from(px[c]) * (1.0 - opacity) + color[c] * opacity;
        px[c] = v.round_ties_even() as u8;
    }
}

fn for_each_in(canvas: &mut RgbImage, rect: Rect, mut f: impl FnMut(&mut Rgb<u8>)) {
    let (w, h) = (canvas.width() as i32, canvas.height() as i32);
    for y in rect.y.max(0)..rect.bottom().min(h) {
        for x in rect.x.max(0)..rect.right().min(w) {
            f(canvas.get_pixel_mut(x as u32, y as u32));
        }
    }
}

fn put(canvas: &mut RgbImage, x: i32, y: i32, px: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < canvas.width() && (y as u32) < canvas.height() {
        canvas.put_pixel(x as u32, y as u32, px);
    }
}

/// Renders the normalized UI frame (no border, no scaling).
pub fn render_normalized(
    spec: &SynthSpec,
    geometry: &GeometryConfig,
) -> Result<(RgbImage, [Rect; 4])> {
    spec.validate(geometry)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut canvas = match spec.background {
        Background::Solid(c) => RgbImage::from_pixel(NORMALIZED_WIDTH, NORMALIZED_HEIGHT, Rgb(c)),
        Background::Noise => {
            let base: [i32; 3] = [150, 60, 55];
            RgbImage::from_fn(NORMALIZED_WIDTH, NORMALIZED_HEIGHT, |_, _| {
                Rgb(base.map(|b| (b + rng.random_range(-60..=60)).clamp(0, 255) as u8))
            })
        }
    };

    let (dx, dy) = spec.ui_shift;
    let rects = TilePosition::ALL.map(|p| geometry.core_rect(p).translate(dx, dy));
    let camera_position = spec.camera.map(|c| c.position);
    let camera_active = spec.camera.is_some_and(|c| c.active);

    // While the camera is not being moved, up to two instrument arms show as
    // controlled (highlighted).
    let mut highlighted = [false; 4];
    if !camera_active {
        let candidates: Vec<usize> = (0..4)
            .filter(|&i| Some(TilePosition::ALL[i]) != camera_position)
            .collect();
        let count = rng.random_range(0..=2usize);
        for _ in 0..count {
            highlighted[candidates[rng.random_range(0..candidates.len())]] = true;
        }
    } else if let Some(p) = camera_position {
        highlighted[p.index()] = true;
    }

    let icon = camera_icon();
    for (i, rect) in rects.iter().enumerate() {
        for_each_in(&mut canvas, *rect, |px| blend(px, TILE_COLOR, TILE_OPACITY));
        if highlighted[i] {
            for_each_in(&mut canvas, *rect, |px| {
                blend(px, HIGHLIGHT_COLOR, HIGHLIGHT_OPACITY)
            });
        }
        if camera_position == Some(TilePosition::ALL[i]) {
            let slack = rect.width - CAMERA_ICON_WIDTH - 8;
            let ox = rect.x + 4 + rng.random_range(0..=slack) as i32;
            let oy = rect.y + ((rect.height - CAMERA_ICON_HEIGHT) / 2) as i32;
            for (x, y, v) in icon.enumerate_pixels() {
                if v[0] > 0 {
                    put(&mut canvas, ox + x as i32, oy + y as i32, GLYPH_COLOR);
                }
            }
        } else {
            let name = INSTRUMENTS[rng.random_range(0..INSTRUMENTS.len())];
            let label = format!("{} {}", i + 1, name);
            let ox = rect.x + 6;
            let oy = rect.y + ((rect.height - font::GLYPH_HEIGHT) / 2) as i32;
            for (x, y) in text_pixels(&label) {
                if x + 6 < rect.width {
                    put(&mut canvas, ox + x as i32, oy + y as i32, GLYPH_COLOR);
                }
            }
        }
    }
    Ok((canvas, rects))
}

/// Renders a full recorded-looking frame with its ground truth.
pub fn render(spec: &SynthSpec, geometry: &GeometryConfig) -> Result<SynthFrame> {
    let (canvas, tile_rects) = render_normalized(spec, geometry)?;
    let padded = if spec.border > 0 {
        let b = spec.border;
        let mut padded = RgbImage::new(NORMALIZED_WIDTH + 2 * b, NORMALIZED_HEIGHT + 2 * b);
        image::imageops::replace(&mut padded, &canvas, i64::from(b), i64::from(b));
        padded
    } else {
        canvas
    };
    let (w, h) = spec.output_size();
    let scaled = if (w, h) == padded.dimensions() {
        padded
    } else {
        let full = Rect::new(0, 0, padded.width(), padded.height());
        resize_bilinear(&padded, full, w, h)
    };
    let truth = spec.annotation();
    Ok(SynthFrame {
        frame: RawFrame::new(scaled)?,
        truth,
        tile_truth: truth.tile_truth(),
        tile_rects,
    })
}

/// Relative weights of the nine frame categories.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMix {
    entries: Vec<(Option<CameraAnnotation>, f64)>,
}

impl Default for ClassMix {
    fn default() -> Self {
        use TilePosition::*;
        let cam = |position, active| Some(CameraAnnotation { position, active });
        Self {
            entries: vec![
                (None, 0.30),
                (cam(T1, false), 0.04),
                (cam(T2, false), 0.22),
                (cam(T3, false), 0.22),
                (cam(T4, false), 0.04),
                (cam(T1, true), 0.02),
                (cam(T2, true), 0.07),
                (cam(T3, true), 0.07),
                (cam(T4, true), 0.02),
            ],
        }
    }
}

impl ClassMix {
    /// Parses `KEY=WEIGHT[,KEY=WEIGHT...]` where KEY is `NONE` or
    /// `<T1..T4>_<INACTIVE|ACTIVE>`; weights need not sum to one.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, weight) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("mix entry {item:?} lacks '='")))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad weight in {item:?}")))?;
            let category = match key.trim() {
                "NONE" => None,
                key => {
                    let (pos, act) = key
                        .split_once('_')
                        .ok_or_else(|| Error::InvalidConfig(format!("bad mix key {key:?}")))?;
                    let active = match act {
                        "ACTIVE" => true,
                        "INACTIVE" => false,
                        _ => return Err(Error::InvalidConfig(format!("bad mix key {key:?}"))),
                    };
                    Some(CameraAnnotation {
                        position: pos.parse()?,
                        active,
                    })
                }
            };
            entries.push((category, weight));
        }
        Self::new(entries)
    }

    pub fn new(entries: Vec<(Option<CameraAnnotation>, f64)>) -> Result<Self> {
        if entries.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(
                "mix weights must be finite and non-negative".into(),
            ));
        }
        if entries.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidConfig("mix weights sum to zero".into()));
        }
        Ok(Self { entries })
    }

    /// Normalized probabilities of each listed category.
    pub fn probabilities(&self) -> Vec<(Option<CameraAnnotation>, f64)> {
        let total: f64 = self.entries.iter().map(|(_, w)| w).sum();
        self.entries.iter().map(|&(c, w)| (c, w / total)).collect()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Option<CameraAnnotation> {
        let total: f64 = self.entries.iter().map(|(_, w)| w).sum();
        let mut u = rng.random::<f64>() * total;
        for &(category, w) in &self.entries {
            if u < w {
                return category;
            }
            u -= w;
        }
        // rounding fallback: last category with weight
        self.entries
            .iter()
            .rev()
            .find(|(_, w)| *w > 0.0)
            .and_then(|e| e.0)
    }
}

/// How frames of a corpus vary.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusOptions {
    pub mix: ClassMix,
    /// Inclusive range of frames sharing one camera state; `(1, 1)` samples
    /// every frame independently.
    pub run_length: (usize, usize),
    /// Inclusive range of black border widths.
    pub border: (u32, u32),
    pub scales: Vec<f64>,
    pub max_shift: i32,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            mix: ClassMix::default(),
            run_length: (1, 1),
            border: (0, 16),
            scales: vec![1.0],
            max_shift: 4,
        }
    }
}

/// Frame specs for a reproducible corpus. Rendering happens on demand.
pub fn corpus_specs(n: usize, seed: u64, opts: &CorpusOptions) -> Result<Vec<SynthSpec>> {
    if n == 0 {
        return Err(Error::InvalidSpec(
            "corpus must contain at least one frame".into(),
        ));
    }
    let (min_run, max_run) = opts.run_length;
    if min_run == 0 || min_run > max_run {
        return Err(Error::InvalidSpec(format!(
            "bad run length range {:?}",
            opts.run_length
        )));
    }
    if opts.scales.is_empty() || opts.border.0 > opts.border.1 || opts.max_shift < 0 {
        return Err(Error::InvalidSpec("bad corpus options".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(n);
    while specs.len() < n {
        let camera = opts.mix.sample(&mut rng);
        let run = rng.random_range(min_run..=max_run);
        for _ in 0..run.min(n - specs.len()) {
            let background = if rng.random_bool(0.5) {
                Background::Noise
            } else {
                Background::Solid(SOLID_PALETTE[rng.random_range(0..SOLID_PALETTE.len())])
            };
            let s = opts.max_shift;
            specs.push(SynthSpec {
                seed: rng.random(),
                frame_index: specs.len() as u64,
                camera,
                ui_shift: (rng.random_range(-s..=s), rng.random_range(-s..=s)),
                border: rng.random_range(opts.border.0..=opts.border.1),
                output_scale: opts.scales[rng.random_range(0..opts.scales.len())],
                background,
            });
        }
    }
    Ok(specs)
}

/// Renders `specs` into `dir/frames/frame_NNNNNN.png` and writes
/// `dir/annotations.csv` and the camera icon to `dir/templates/camera.png`.
pub fn write_corpus(dir: &Path, specs: &[SynthSpec], geometry: &GeometryConfig) -> Result<()> {
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let templates_dir = dir.join("templates");
    std::fs::create_dir_all(&templates_dir).map_err(|e| Error::io(&templates_dir, e))?;
    let icon_path = templates_dir.join("camera.png");
    camera_icon()
        .save(&icon_path)
        .map_err(|source| Error::Image {
            path: icon_path,
            source,
        })?;

    specs.par_iter().try_for_each(|spec| {
        let frame = render(spec, geometry)?;
        let path = frames_dir.join(format!("frame_{:06}.png", spec.frame_index));
        save_png_fast(frame.frame.image(), &path)
    })?;

    let csv_path = dir.join("annotations.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let annotations: Vec<FrameAnnotation> = specs.iter().map(SynthSpec::annotation).collect();
    write_annotations(std::io::BufWriter::new(file), &annotations)
}

/// Corpora are large and short-lived, so favor encoding speed over size.
fn save_png_fast(image: &RgbImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new_with_quality(
        std::io::BufWriter::new(file),
        CompressionType::Fast,
        FilterType::Sub,
    );
    image
        .write_with_encoder(encoder)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{fuse, FrameClass};

    fn cam(position: TilePosition, active: bool) -> Option<CameraAnnotation> {
        Some(CameraAnnotation { position, active })
    }

    #[test]
    fn instrument_labels_fit_their_tile() {
        let width = GeometryConfig::default().tile_core_width;
        for name in INSTRUMENTS {
            assert!(
                font::text_width(&format!("4 {name}")) + 12 <= width,
                "{name}"
            );
        }
    }

    #[test]
    fn no_camera_spec_truth() {
        let frame = render(&SynthSpec::default(), &GeometryConfig::default()).unwrap();
        assert_eq!(frame.tile_truth, [TileClass::NoCamera; 4]);
        assert_eq!(frame.truth.camera, None);
        assert_eq!((frame.frame.width(), frame.frame.height()), (640, 521));
    }

    #[test]
    fn same_seed_same_pixels() {
        let spec = SynthSpec {
            seed: 99,
            camera: cam(TilePosition::T3, true),
            ui_shift: (2, -3),
            border: 5,
            output_scale: 1.5,
            ..Default::default()
        };
        let geometry = GeometryConfig::default();
        let a = render(&spec, &geometry).unwrap();
        let b = render(&spec, &geometry).unwrap();
        assert_eq!(a.frame, b.frame);
        let other = render(&SynthSpec { seed: 100, ..spec }, &geometry).unwrap();
        assert_ne!(a.frame, other.frame);
    }

    #[test]
    fn output_size_follows_border_and_scale() {
        let spec = SynthSpec {
            border: 12,
            output_scale: 2.0,
            background: Background::Solid([90, 90, 90]),
            ..Default::default()
        };
        assert_eq!(spec.output_size(), (1328, 1090));
        let frame = render(&spec, &GeometryConfig::default()).unwrap();
        assert_eq!(frame.frame.image().dimensions(), (1328, 1090));
    }

    #[test]
    fn invalid_specs_rejected() {
        let geometry = GeometryConfig::default();
        let too_far = SynthSpec {
            ui_shift: (5, 0),
            ..Default::default()
        };
        assert!(matches!(
            render(&too_far, &geometry),
            Err(Error::InvalidSpec(_))
        ));
        let bad_scale = SynthSpec {
            output_scale: 0.0,
            ..Default::default()
        };
        assert!(render(&bad_scale, &geometry).is_err());
        let dark = SynthSpec {
            background: Background::Solid([5, 5, 5]),
            ..Default::default()
        };
        assert!(render(&dark, &geometry).is_err());
    }

    #[test]
    fn truth_is_consistent_with_fusion() {
        let specs = corpus_specs(200, 3, &CorpusOptions::default()).unwrap();
        for spec in specs {
            let fused = fuse(&spec.tile_truth());
            let ann = spec.annotation();
            assert_eq!(fused.position, ann.camera.map(|c| c.position));
            let expected = match ann.camera {
                None => FrameClass::NoCamera,
                Some(c) if c.active => FrameClass::OneActiveCamera,
                Some(_) => FrameClass::OneInactiveCamera,
            };
            assert_eq!(fused.class, expected);
        }
    }

    #[test]
    fn single_category_mix() {
        let opts = CorpusOptions {
            mix: ClassMix::parse("T2_INACTIVE=1").unwrap(),
            ..Default::default()
        };
        let specs = corpus_specs(100, 1, &opts).unwrap();
        assert!(specs
            .iter()
            .all(|s| s.camera == cam(TilePosition::T2, false)));
        let mut buf = Vec::new();
        let anns: Vec<_> = specs.iter().map(SynthSpec::annotation).collect();
        write_annotations(&mut buf, &anns).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines()
                .skip(1)
                .filter(|l| l.ends_with(",T2,INACTIVE"))
                .count(),
            100
        );
    }

    #[test]
    fn mix_parse_errors() {
        assert!(ClassMix::parse("T5_ACTIVE=1").is_err());
        assert!(ClassMix::parse("NONE").is_err());
        assert!(ClassMix::parse("NONE=-1").is_err());
        assert!(ClassMix::parse("NONE=0").is_err());
        assert!(ClassMix::parse("T1_MAYBE=1").is_err());
        let mix = ClassMix::parse("NONE=1, T4_ACTIVE=3").unwrap();
        let p = mix.probabilities();
        assert_eq!(p[1], (cam(TilePosition::T4, true), 0.75));
    }

    #[test]
    fn runs_share_camera_state() {
        let opts = CorpusOptions {
            run_length: (10, 10),
            ..Default::default()
        };
        let specs = corpus_specs(95, 11, &opts).unwrap();
        assert_eq!(specs.len(), 95);
        for chunk in specs.chunks(10) {
            assert!(chunk.iter().all(|s| s.camera == chunk[0].camera));
        }
        assert!(specs
            .iter()
            .enumerate()
            .all(|(i, s)| s.frame_index == i as u64));
    }

    #[test]
    fn corpus_specs_are_reproducible() {
        let opts = CorpusOptions::default();
        assert_eq!(
            corpus_specs(50, 8, &opts).unwrap(),
            corpus_specs(50, 8, &opts).unwrap()
        );
        assert!(corpus_specs(0, 8, &opts).is_err());
    }
}
