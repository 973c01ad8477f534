//! End-to-end extraction, evaluation and fixture commands.
//!
//! Extraction reads frames in index order, classifies them on a pool of
//! `workers` threads (in bounded chunks, so memory stays flat on long
//! recordings), then smooths and segments the activation signal
//! sequentially. Worker count only changes speed, never results.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[cfg(feature = "onnx")]
use crate::classifier::model::{ModelBackend, ModelBackendConfig};
use crate::classifier::template::{TemplateBackend, TemplateBackendConfig};
use crate::classifier::{decide, BackendDescriptor, ClassifierBackend, TileClass, TileScores};
use crate::error::{Error, Result};
use crate::evaluation::{
    align, binary_metrics_from_bits, class_f1, confusion, load_annotations, tile_macro_f1,
    ConfusionMatrix, FrameAnnotation, FrameLabel, MetricReport, Scope,
};
use crate::fusion::{FrameClass, FrameResult};
use crate::geometry::{extract_tiles, GeometryConfig, RawFrame, TilePosition};
use crate::synth::{corpus_specs, write_corpus, CorpusOptions};
use crate::temporal::{binarize, segments, smooth, ActivationSegment, SmoothingConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXTRACTION_FILE: &str = "extraction.json";
pub const FRAMES_CSV_FILE: &str = "frames.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const TILE_CONFUSION_FILE: &str = "confusion_tile.csv";
pub const FRAME_CONFUSION_FILE: &str = "confusion_frame.csv";

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "bmp", "ppm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Template,
    Model,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "template" => Ok(Self::Template),
            "model" => Ok(Self::Model),
            other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
        }
    }
}

/// Template backend settings as written in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateSettings {
    /// Grayscale icon images; empty selects the built-in camera icon.
    pub templates: Vec<PathBuf>,
    pub ncc_threshold: f64,
    pub highlight_hue_range: [f64; 2],
    pub highlight_min_saturation: f64,
    pub highlight_min_value: f64,
    pub color_inset: u32,
}

impl Default for TemplateSettings {
    fn default() -> Self {
        let d = TemplateBackendConfig::default();
        Self {
            templates: Vec::new(),
            ncc_threshold: d.ncc_threshold,
            highlight_hue_range: d.highlight_hue_range,
            highlight_min_saturation: d.highlight_min_saturation,
            highlight_min_value: d.highlight_min_value,
            color_inset: d.color_inset,
        }
    }
}

impl TemplateSettings {
    pub fn load(&self) -> Result<TemplateBackendConfig> {
        let mut cfg = TemplateBackendConfig {
            ncc_threshold: self.ncc_threshold,
            highlight_hue_range: self.highlight_hue_range,
            highlight_min_saturation: self.highlight_min_saturation,
            highlight_min_value: self.highlight_min_value,
            color_inset: self.color_inset,
            ..Default::default()
        };
        if !self.templates.is_empty() {
            cfg.templates = self
                .templates
                .iter()
                .map(|p| {
                    image::open(p)
                        .map(|img| img.to_luma8())
                        .map_err(|source| Error::Image {
                            path: p.clone(),
                            source,
                        })
                })
                .collect::<Result<_>>()?;
        }
        Ok(cfg)
    }
}

/// Everything `extract` needs, loaded from one TOML document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendKind,
    pub workers: usize,
    pub emit_scores: bool,
    pub emit_csv: bool,
    pub geometry: GeometryConfig,
    pub template: TemplateSettings,
    #[cfg(feature = "onnx")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBackendConfig>,
    pub smoothing: SmoothingConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Template,
            workers: 1,
            emit_scores: false,
            emit_csv: false,
            geometry: GeometryConfig::default(),
            template: TemplateSettings::default(),
            #[cfg(feature = "onnx")]
            model: None,
            smoothing: SmoothingConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |span| text[..span.start].lines().count().max(1) as u64),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for t in &mut cfg.template.templates {
            *t = base.join(&*t);
        }
        #[cfg(feature = "onnx")]
        if let Some(model) = &mut cfg.model {
            model.model_path = base.join(&model.model_path);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.geometry.validate()?;
        self.smoothing.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn build_backend(&self) -> Result<Box<dyn ClassifierBackend>> {
        match self.backend {
            BackendKind::Template => Ok(Box::new(TemplateBackend::new(self.template.load()?)?)),
            #[cfg(feature = "onnx")]
            BackendKind::Model => {
                let model = self.model.clone().ok_or_else(|| {
                    Error::InvalidConfig("backend = \"model\" needs a [model] section".into())
                })?;
                Ok(Box::new(ModelBackend::load(model)?))
            }
            #[cfg(not(feature = "onnx"))]
            BackendKind::Model => Err(Error::InvalidConfig(
                "built without the `onnx` feature".into(),
            )),
        }
    }
}

/// Geometry + classifier + fusion for single frames.
pub struct Pipeline {
    geometry: GeometryConfig,
    backend: Box<dyn ClassifierBackend>,
    keep_scores: bool,
}

impl Pipeline {
    pub fn new(geometry: GeometryConfig, backend: Box<dyn ClassifierBackend>) -> Result<Self> {
        geometry.validate()?;
        Ok(Self {
            geometry,
            backend,
            keep_scores: false,
        })
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let mut pipeline = Self::new(cfg.geometry.clone(), cfg.build_backend()?)?;
        pipeline.keep_scores = cfg.emit_scores;
        Ok(pipeline)
    }

    pub fn with_scores(mut self, keep: bool) -> Self {
        self.keep_scores = keep;
        self
    }

    pub fn backend(&self) -> &dyn ClassifierBackend {
        self.backend.as_ref()
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geometry
    }

    pub fn process_frame(&self, frame_index: u64, frame: &RawFrame) -> Result<FrameResult> {
        let tiles = extract_tiles(frame, &self.geometry)?;
        let scores = self.backend.classify_frame(&tiles)?;
        let classes = scores.each_ref().map(decide);
        Ok(FrameResult::from_tiles(
            frame_index,
            classes,
            self.keep_scores.then_some(scores),
        ))
    }

    /// Like [`process_frame`](Self::process_frame), but a frame that cannot
    /// be used becomes a flagged `NoCamera` result. Backend failures are
    /// still fatal.
    pub fn process_image(&self, frame_index: u64, image: RgbImage) -> Result<FrameResult> {
        let frame = match RawFrame::new(image) {
            Ok(f) => f,
            Err(e) => return Ok(FrameResult::failed(frame_index, e.to_string())),
        };
        match self.process_frame(frame_index, &frame) {
            Err(e @ (Error::InvalidFrame(_) | Error::AllBlackFrame)) => {
                Ok(FrameResult::failed(frame_index, e.to_string()))
            }
            other => other,
        }
    }

    fn process_path(&self, frame_index: u64, path: &Path) -> Result<FrameResult> {
        match image::open(path) {
            Ok(img) => self.process_image(frame_index, img.to_rgb8()),
            Err(e) => Ok(FrameResult::failed(
                frame_index,
                format!("{}: {e}", path.display()),
            )),
        }
    }
}

/// One frame of `extraction.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub i: u64,
    pub class: FrameClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<TilePosition>,
    pub tiles: [TileClass; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<[TileScores; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&FrameResult> for FrameRecord {
    fn from(r: &FrameResult) -> Self {
        Self {
            i: r.frame_index,
            class: r.frame_class,
            pos: r.camera_position,
            tiles: r.tile_classes,
            scores: r.tile_scores,
            error: r.error.clone(),
        }
    }
}

impl From<&FrameRecord> for FrameResult {
    fn from(r: &FrameRecord) -> Self {
        FrameResult {
            frame_index: r.i,
            frame_class: r.class,
            camera_position: r.pos,
            tile_classes: r.tiles,
            tile_scores: r.scores,
            error: r.error.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    #[serde(rename = "NO_CAMERA")]
    pub no_camera: u64,
    #[serde(rename = "ONE_INACTIVE")]
    pub one_inactive: u64,
    #[serde(rename = "ONE_ACTIVE")]
    pub one_active: u64,
    #[serde(rename = "TOO_MANY")]
    pub too_many: u64,
}

impl ClassCounts {
    pub fn add(&mut self, class: FrameClass) {
        match class {
            FrameClass::NoCamera => self.no_camera += 1,
            FrameClass::OneInactiveCamera => self.one_inactive += 1,
            FrameClass::OneActiveCamera => self.one_active += 1,
            FrameClass::TooManyCameras => self.too_many += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub seconds: f64,
    pub fps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: u64,
    pub class_counts: ClassCounts,
    /// Fraction of frames classified as one active camera, before smoothing.
    pub active_ratio: f64,
    pub smoothed_active_ratio: f64,
    pub segments: u64,
    pub error_frames: u64,
    /// Wall-clock measurement; the only field that varies between runs.
    pub throughput: Throughput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOutput {
    pub schema: u32,
    pub backend: BackendDescriptor,
    pub frames: Vec<FrameRecord>,
    pub segments: Vec<ActivationSegment>,
    pub summary: Summary,
}

impl ExtractionOutput {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let out: ExtractionOutput = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        if out.schema != SCHEMA_VERSION {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("unsupported schema {}", out.schema),
            });
        }
        Ok(out)
    }

    pub fn results(&self) -> Vec<FrameResult> {
        self.frames.iter().map(FrameResult::from).collect()
    }

    /// Smoothed activation per frame index, reconstructed from segments.
    pub fn smoothed_bits(&self) -> Vec<(u64, bool)> {
        self.frames
            .iter()
            .map(|f| {
                let active = self
                    .segments
                    .iter()
                    .any(|s| (s.start_frame..s.end_frame).contains(&f.i));
                (f.i, active)
            })
            .collect()
    }
}

/// Assembles smoothed segments and the summary from ordered frame results.
///
/// Segment bounds are frame indices: a run covering records `a..b` becomes
/// `[index(a), index(b-1) + 1)`.
pub fn summarize(
    results: &[FrameResult],
    smoothing: &SmoothingConfig,
    backend: BackendDescriptor,
    seconds: f64,
) -> ExtractionOutput {
    let raw: Vec<bool> = results.iter().map(binarize).collect();
    let smoothed = smooth(&raw, smoothing);
    let segs: Vec<ActivationSegment> = segments(&smoothed, smoothing)
        .into_iter()
        .map(|s| ActivationSegment {
            start_frame: results[s.start_frame as usize].frame_index,
            end_frame: results[s.end_frame as usize - 1].frame_index + 1,
        })
        .collect();

    let mut class_counts = ClassCounts::default();
    for r in results {
        class_counts.add(r.frame_class);
    }
    let n = results.len() as u64;
    let ratio = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let summary = Summary {
        frames: n,
        class_counts,
        active_ratio: ratio(raw.iter().filter(|&&b| b).count()),
        smoothed_active_ratio: ratio(smoothed.iter().filter(|&&b| b).count()),
        segments: segs.len() as u64,
        error_frames: results.iter().filter(|r| r.error.is_some()).count() as u64,
        throughput: Throughput {
            seconds,
            fps: if seconds > 0.0 {
                n as f64 / seconds
            } else {
                0.0
            },
        },
    };
    ExtractionOutput {
        schema: SCHEMA_VERSION,
        backend,
        frames: results.iter().map(FrameRecord::from).collect(),
        segments: segs,
        summary,
    }
}

fn trailing_number(stem: &str) -> Option<u64> {
    let digits: String = stem
        .chars()
        .rev()
        .take_while(char::is_ascii_digit)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Lists input frames as `(frame_index, path)` sorted by index.
///
/// `input` is either a directory of image files whose stems end in the frame
/// number (`frame_000042.png`), or a CSV list file with header
/// `frame_index,path` (paths relative to the list file).
pub fn discover_frames(input: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut frames = Vec::new();
    if input.is_dir() {
        let entries = fs::read_dir(input).map_err(|e| Error::io(input, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(input, e))?.path();
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if !is_image {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let index = trailing_number(stem).ok_or_else(|| {
                Error::InvalidConfig(format!("{} has no frame number", path.display()))
            })?;
            frames.push((index, path));
        }
    } else {
        let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
        let base = input.parent().unwrap_or(Path::new("."));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "frame_index,path" => {}
            _ => {
                return Err(Error::Parse {
                    path: input.to_path_buf(),
                    line: 1,
                    message: "expected header frame_index,path".into(),
                })
            }
        }
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: input.to_path_buf(),
                line: n as u64 + 1,
                message,
            };
            let (index, path) = line
                .split_once(',')
                .ok_or_else(|| parse_err(format!("malformed entry {line:?}")))?;
            let index = index
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad frame_index {index:?}")))?;
            frames.push((index, base.join(path.trim())));
        }
    }
    frames.sort();
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidConfig(format!(
            "frame index {} appears twice ({} and {})",
            w[0].0,
            w[0].1.display(),
            w[1].1.display()
        )));
    }
    Ok(frames)
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn write_frames_csv(path: &Path, frames: &[FrameRecord]) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "frame_index,class,position,t1,t2,t3,t4,error")?;
        for f in frames {
            let t = f.tiles.map(TileClass::as_str);
            let err = f.error.as_deref().unwrap_or("").replace(['\n', ','], " ");
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                f.i,
                f.class,
                f.pos.map_or("NONE", TilePosition::as_str),
                t[0],
                t[1],
                t[2],
                t[3],
                err
            )?;
        }
        Ok(())
    })
}

/// Runs the full pipeline over `input` and writes `extraction.json` (and
/// `frames.csv` when enabled) into `out`.
pub fn run_extract(input: &Path, cfg: &PipelineConfig, out: &Path) -> Result<ExtractionOutput> {
    cfg.validate()?;
    let pipeline = Pipeline::from_config(cfg)?;
    let frames = discover_frames(input)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let chunk = 32 * cfg.workers;
    let start = Instant::now();
    let mut results = Vec::with_capacity(frames.len());
    for batch in frames.chunks(chunk) {
        let done: Vec<FrameResult> = pool.install(|| {
            batch
                .par_iter()
                .map(|(index, path)| pipeline.process_path(*index, path))
                .collect::<Result<_>>()
        })?;
        results.extend(done);
    }
    let seconds = start.elapsed().as_secs_f64();

    let output = summarize(
        &results,
        &cfg.smoothing,
        pipeline.backend().descriptor(),
        seconds,
    );
    write_json(&out.join(EXTRACTION_FILE), &output)?;
    if cfg.emit_csv {
        write_frames_csv(&out.join(FRAMES_CSV_FILE), &output.frames)?;
    }
    log::info!(
        "{} frames, {} segments, {:.1} fps",
        output.summary.frames,
        output.summary.segments,
        output.summary.throughput.fps
    );
    Ok(output)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Restrict tile and frame confusion matrices to frames with a camera tile.
    pub exclude_no_ui: bool,
    /// Score the binary metrics on the smoothed segments instead of raw
    /// per-frame classes.
    pub smoothed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileReport {
    pub tiles: u64,
    pub macro_f1: f64,
    /// Per-class F1, `None` for classes absent from both sides.
    pub per_class_f1: BTreeMap<String, Option<f64>>,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub smoothed: bool,
    pub exclude_no_ui: bool,
    pub tile: Option<TileReport>,
    pub frame_accuracy: f64,
    pub frame_confusion: ConfusionMatrix,
    pub binary_including_no_ui: MetricReport,
    pub binary_excluding_no_ui: MetricReport,
}

/// Scores an extraction against annotations.
pub fn evaluate(
    output: &ExtractionOutput,
    truth: &[FrameAnnotation],
    opts: EvalOptions,
) -> Result<EvalReport> {
    let results = output.results();
    let pairs = align(&results, |r| r.frame_index, truth)?;
    let scored: Vec<_> = pairs
        .iter()
        .filter(|(_, t)| !(opts.exclude_no_ui && t.camera.is_none()))
        .collect();

    let pred_labels: Vec<FrameLabel> = scored
        .iter()
        .map(|(r, _)| FrameLabel::from_result(r))
        .collect();
    let true_labels: Vec<FrameLabel> = scored.iter().map(|(_, t)| t.label()).collect();
    let frame_confusion = confusion(&pred_labels, &true_labels, &FrameLabel::all())?;
    let correct = pred_labels
        .iter()
        .zip(&true_labels)
        .filter(|(p, t)| p == t)
        .count();
    let frame_accuracy = if scored.is_empty() {
        0.0
    } else {
        correct as f64 / scored.len() as f64
    };

    let tile = if scored.is_empty() {
        None
    } else {
        let pred: Vec<TileClass> = scored.iter().flat_map(|(r, _)| r.tile_classes).collect();
        let truth: Vec<TileClass> = scored.iter().flat_map(|(_, t)| t.tile_truth()).collect();
        Some(TileReport {
            tiles: pred.len() as u64,
            macro_f1: tile_macro_f1(&pred, &truth)?,
            per_class_f1: TileClass::ALL
                .iter()
                .map(|c| (c.as_str().to_string(), class_f1(&pred, &truth, c)))
                .collect(),
            confusion: confusion(&pred, &truth, &TileClass::ALL)?,
        })
    };

    let bits: Vec<(u64, bool)> = if opts.smoothed {
        output.smoothed_bits()
    } else {
        results
            .iter()
            .map(|r| (r.frame_index, binarize(r)))
            .collect()
    };
    Ok(EvalReport {
        smoothed: opts.smoothed,
        exclude_no_ui: opts.exclude_no_ui,
        tile,
        frame_accuracy,
        frame_confusion,
        binary_including_no_ui: binary_metrics_from_bits(&bits, truth, Scope::IncludingNoUi)?,
        binary_excluding_no_ui: binary_metrics_from_bits(&bits, truth, Scope::ExcludingNoUi)?,
    })
}

/// Loads both files, scores them and writes `metrics.json` plus the tile and
/// frame confusion CSVs into `out`.
pub fn run_eval(pred: &Path, truth: &Path, out: &Path, opts: EvalOptions) -> Result<EvalReport> {
    let output = ExtractionOutput::load(pred)?;
    let annotations = load_annotations(truth)?;
    let report = evaluate(&output, &annotations, opts)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join(METRICS_FILE), &report)?;
    if let Some(tile) = &report.tile {
        write_file(&out.join(TILE_CONFUSION_FILE), |w| {
            tile.confusion.write_csv(w)
        })?;
    }
    write_file(&out.join(FRAME_CONFUSION_FILE), |w| {
        report.frame_confusion.write_csv(w)
    })?;
    Ok(report)
}

/// Renders a synthetic corpus into `out` together with a `pipeline.toml`
/// that points the template backend at the rendered icon.
pub fn run_synth(
    n: usize,
    seed: u64,
    out: &Path,
    opts: &CorpusOptions,
) -> Result<Vec<FrameAnnotation>> {
    let geometry = GeometryConfig::default();
    let specs = corpus_specs(n, seed, opts)?;
    write_corpus(out, &specs, &geometry)?;
    let cfg = PipelineConfig {
        template: TemplateSettings {
            templates: vec![PathBuf::from("templates/camera.png")],
            ..Default::default()
        },
        ..Default::default()
    };
    let path = out.join("pipeline.toml");
    fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(specs.iter().map(|s| s.annotation()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::TileClass::{ActiveCamera as A, InactiveCamera as I, NoCamera as N};

    fn results(classes: &[[TileClass; 4]], start: u64) -> Vec<FrameResult> {
        classes
            .iter()
            .enumerate()
            .map(|(i, t)| FrameResult::from_tiles(start + i as u64, *t, None))
            .collect()
    }

    fn descriptor() -> BackendDescriptor {
        BackendDescriptor {
            name: "test".into(),
            version: "0".into(),
        }
    }

    #[test]
    fn segments_use_frame_indices() {
        let on = [N, A, N, N];
        let off = [N, I, N, N];
        let rs = results(&[off, on, on, on, off, off], 100);
        let cfg = SmoothingConfig {
            window: 1,
            min_segment_frames: 1,
        };
        let out = summarize(&rs, &cfg, descriptor(), 1.0);
        assert_eq!(
            out.segments,
            vec![ActivationSegment {
                start_frame: 101,
                end_frame: 104
            }]
        );
        assert_eq!(out.summary.class_counts.one_active, 3);
        assert_eq!(out.summary.class_counts.one_inactive, 3);
        assert!((out.summary.active_ratio - 0.5).abs() < 1e-12);
        assert_eq!(out.summary.throughput.fps, 6.0);
    }

    #[test]
    fn empty_summary() {
        let out = summarize(&[], &SmoothingConfig::default(), descriptor(), 0.0);
        assert_eq!(out.summary.frames, 0);
        assert!(out.frames.is_empty() && out.segments.is_empty());
        assert_eq!(out.summary.active_ratio, 0.0);
    }

    #[test]
    fn json_record_shape() {
        let rs = results(&[[N, A, N, N], [N; 4]], 0);
        let out = summarize(&rs, &SmoothingConfig::default(), descriptor(), 1.0);
        let json = serde_json::to_value(&out).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(
            json["frames"][0],
            serde_json::json!({"i": 0, "class": "ONE_ACTIVE", "pos": "T2", "tiles": ["NO", "ACTIVE", "NO", "NO"]})
        );
        assert_eq!(json["frames"][1]["class"], "NO_CAMERA");
        assert!(json["frames"][1].get("pos").is_none());
        let back: ExtractionOutput = serde_json::from_value(json).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn trailing_numbers() {
        assert_eq!(trailing_number("frame_000042"), Some(42));
        assert_eq!(trailing_number("17"), Some(17));
        assert_eq!(trailing_number("frame"), None);
        assert_eq!(trailing_number("v2_frame_9"), Some(9));
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg: PipelineConfig = toml::from_str(
            r#"
            workers = 3
            [geometry]
            bottom_offset = 10
            [smoothing]
            window = 7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.backend, BackendKind::Template);
        assert_eq!(cfg.geometry.bottom_offset, 10);
        assert_eq!(cfg.geometry.margin, 4);
        assert_eq!(cfg.smoothing.window, 7);
        assert!(toml::from_str::<PipelineConfig>("wokers = 3").is_err());
        let round: PipelineConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn model_backend_requires_section() {
        let cfg = PipelineConfig {
            backend: BackendKind::Model,
            ..Default::default()
        };
        assert!(matches!(cfg.build_backend(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn evaluate_counts_too_many_as_inactive_binary() {
        let rs = results(&[[A, A, N, N], [N, A, N, N]], 0);
        let out = summarize(
            &rs,
            &SmoothingConfig {
                window: 1,
                min_segment_frames: 1,
            },
            descriptor(),
            1.0,
        );
        let truth = vec![
            FrameAnnotation::camera(0, TilePosition::T1, true),
            FrameAnnotation::camera(1, TilePosition::T2, true),
        ];
        let report = evaluate(&out, &truth, EvalOptions::default()).unwrap();
        assert_eq!(report.binary_including_no_ui.counts.fn_, 1);
        assert_eq!(report.binary_including_no_ui.counts.tp, 1);
        let too_many_col = report
            .frame_confusion
            .labels
            .iter()
            .position(|l| l == "TOO_MANY")
            .unwrap();
        let active_t1_row = report
            .frame_confusion
            .labels
            .iter()
            .position(|l| l == "ACTIVE_T1")
            .unwrap();
        assert_eq!(
            report.frame_confusion.counts[active_t1_row][too_many_col],
            1
        );
        assert_eq!(report.frame_accuracy, 0.5);
    }
}
