//! Scoring predictions against frame-wise annotations.
//!
//! Three views are computed:
//! - tile level: macro F1 over the three tile classes, unweighted, plus the
//!   3×3 confusion matrix;
//! - frame level: confusion over no camera, inactive T1–T4, active T1–T4 and
//!   (predictions only) too many cameras;
//! - binary: active camera versus everything else, optionally restricted to
//!   frames that have a camera tile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::TileClass;
use crate::error::{Error, Result};
use crate::fusion::{FrameClass, FrameResult};
use crate::geometry::TilePosition;

pub const ANNOTATION_HEADER: [&str; 3] = ["frame_index", "camera_position", "activation"];

/// Camera tile state in one annotated frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CameraAnnotation {
    pub position: TilePosition,
    pub active: bool,
}

/// Ground truth for one frame. `camera` is `None` when no camera tile is
/// visible (no UI, or no endoscope arm).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub frame_index: u64,
    pub camera: Option<CameraAnnotation>,
}

impl FrameAnnotation {
    pub fn none(frame_index: u64) -> Self {
        Self {
            frame_index,
            camera: None,
        }
    }

    pub fn camera(frame_index: u64, position: TilePosition, active: bool) -> Self {
        Self {
            frame_index,
            camera: Some(CameraAnnotation { position, active }),
        }
    }

    pub fn is_active(&self) -> bool {
        self.camera.is_some_and(|c| c.active)
    }

    /// Per-tile truth: the camera tile gets its state, the others NoCamera.
    pub fn tile_truth(&self) -> [TileClass; 4] {
        let mut tiles = [TileClass::NoCamera; 4];
        if let Some(c) = self.camera {
            tiles[c.position.index()] = if c.active {
                TileClass::ActiveCamera
            } else {
                TileClass::InactiveCamera
            };
        }
        tiles
    }

    pub fn label(&self) -> FrameLabel {
        match self.camera {
            None => FrameLabel::NoCamera,
            Some(CameraAnnotation {
                position,
                active: false,
            }) => FrameLabel::Inactive(position),
            Some(CameraAnnotation {
                position,
                active: true,
            }) => FrameLabel::Active(position),
        }
    }

    fn csv_fields(&self) -> [String; 3] {
        let (pos, act) = match self.camera {
            None => ("NONE", "NONE"),
            Some(c) => (
                c.position.as_str(),
                if c.active { "ACTIVE" } else { "INACTIVE" },
            ),
        };
        [
            self.frame_index.to_string(),
            pos.to_string(),
            act.to_string(),
        ]
    }
}

/// Frame-level confusion label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameLabel {
    NoCamera,
    Inactive(TilePosition),
    Active(TilePosition),
    TooMany,
}

impl FrameLabel {
    /// The ten annotation classes followed by `TooMany`.
    pub fn all() -> Vec<FrameLabel> {
        let mut labels = vec![FrameLabel::NoCamera];
        labels.extend(TilePosition::ALL.map(FrameLabel::Inactive));
        labels.extend(TilePosition::ALL.map(FrameLabel::Active));
        labels.push(FrameLabel::TooMany);
        labels
    }

    pub fn from_result(result: &FrameResult) -> FrameLabel {
        match (result.frame_class, result.camera_position) {
            (FrameClass::OneInactiveCamera, Some(p)) => FrameLabel::Inactive(p),
            (FrameClass::OneActiveCamera, Some(p)) => FrameLabel::Active(p),
            (FrameClass::TooManyCameras, _) => FrameLabel::TooMany,
            _ => FrameLabel::NoCamera,
        }
    }
}

impl fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameLabel::NoCamera => f.write_str("NO_CAMERA"),
            FrameLabel::Inactive(p) => write!(f, "INACTIVE_{p}"),
            FrameLabel::Active(p) => write!(f, "ACTIVE_{p}"),
            FrameLabel::TooMany => f.write_str("TOO_MANY"),
        }
    }
}

/// Rows are ground truth, columns are predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Percentages normalized over each true-label row; empty rows are zero.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if n == 0 {
                            0.0
                        } else {
                            100.0 * c as f64 / n as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// CSV with a `truth\pred` corner cell, one row per true label.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "truth\\pred,{}", self.labels.join(","))?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(out, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Tallies `(truth, pred)` pairs over `labels`.
pub fn confusion<T>(pred: &[T], truth: &[T], labels: &[T]) -> Result<ConfusionMatrix>
where
    T: PartialEq + fmt::Display,
{
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let slot = |item: &T| {
        labels
            .iter()
            .position(|l| l == item)
            .ok_or_else(|| Error::UnknownLabel(item.to_string()))
    };
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (p, t) in pred.iter().zip(truth) {
        counts[slot(t)?][slot(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.iter().map(ToString::to_string).collect(),
        counts,
    })
}

/// F1 for one class of a multi-class problem, `None` when the class occurs
/// in neither list.
pub fn class_f1<T: PartialEq>(pred: &[T], truth: &[T], class: &T) -> Option<f64> {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (p, t) in pred.iter().zip(truth) {
        match (p == class, t == class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return None;
    }
    Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

/// Unweighted mean of per-class F1 over the tile classes that occur in
/// either list.
pub fn tile_macro_f1(pred: &[TileClass], truth: &[TileClass]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scores: Vec<f64> = TileClass::ALL
        .iter()
        .filter_map(|c| class_f1(pred, truth, c))
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Every annotated frame.
    IncludingNoUi,
    /// Only frames whose annotation has a camera tile.
    ExcludingNoUi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Binary active-camera metrics.
///
/// Precision (recall) is 1 when nothing was predicted (nothing was
/// positive), so a perfect predictor scores 1 everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scope: Scope,
    pub frames: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: BinaryCounts,
}

impl MetricReport {
    pub fn from_counts(scope: Scope, counts: BinaryCounts) -> Self {
        let ratio = |num: u64, den: u64, empty: f64| {
            if den == 0 {
                empty
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(counts.tp, counts.tp + counts.fp, 1.0);
        let recall = ratio(counts.tp, counts.tp + counts.fn_, 1.0);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            scope,
            frames: counts.total(),
            accuracy: ratio(counts.tp + counts.tn, counts.total(), 0.0),
            precision,
            recall,
            f1,
            counts,
        }
    }
}

/// Pairs every annotation with its prediction by frame index.
pub fn align<'a, P>(
    pred: &'a [P],
    index_of: impl Fn(&P) -> u64,
    truth: &'a [FrameAnnotation],
) -> Result<Vec<(&'a P, &'a FrameAnnotation)>> {
    let by_index: BTreeMap<u64, &P> = pred.iter().map(|p| (index_of(p), p)).collect();
    let truth_indices: BTreeSet<u64> = truth.iter().map(|t| t.frame_index).collect();
    let missing_in_pred: Vec<u64> = truth_indices
        .iter()
        .filter(|i| !by_index.contains_key(i))
        .copied()
        .collect();
    let missing_in_truth: Vec<u64> = by_index
        .keys()
        .filter(|i| !truth_indices.contains(i))
        .copied()
        .collect();
    if !missing_in_pred.is_empty() || !missing_in_truth.is_empty() {
        return Err(Error::Alignment {
            missing_in_pred,
            missing_in_truth,
        });
    }
    Ok(truth
        .iter()
        .map(|t| (by_index[&t.frame_index], t))
        .collect())
}

/// Binary metrics from `(frame_index, predicted_active)` pairs.
pub fn binary_metrics_from_bits(
    pred: &[(u64, bool)],
    truth: &[FrameAnnotation],
    scope: Scope,
) -> Result<MetricReport> {
    let mut counts = BinaryCounts::default();
    for (&(_, predicted), t) in align(pred, |p| p.0, truth)? {
        if scope == Scope::ExcludingNoUi && t.camera.is_none() {
            continue;
        }
        counts.add(predicted, t.is_active());
    }
    Ok(MetricReport::from_counts(scope, counts))
}

/// Binary active-camera metrics for fused frame predictions.
pub fn binary_frame_metrics(
    pred: &[FrameResult],
    truth: &[FrameAnnotation],
    scope: Scope,
) -> Result<MetricReport> {
    let bits: Vec<(u64, bool)> = pred
        .iter()
        .map(|r| (r.frame_index, crate::temporal::binarize(r)))
        .collect();
    binary_metrics_from_bits(&bits, truth, scope)
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads the canonical annotation CSV.
pub fn load_annotations(path: &Path) -> Result<Vec<FrameAnnotation>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(file, path)
}

/// Parses annotation CSV from any reader; `path` is only used in errors.
pub fn read_annotations(reader: impl std::io::Read, path: &Path) -> Result<Vec<FrameAnnotation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    if headers.iter().ne(ANNOTATION_HEADER) {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header {:?}, found {:?}",
                ANNOTATION_HEADER.join(","),
                headers
            ),
        ));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let index: u64 = record[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad frame_index {:?}", &record[0])))?;
        let camera = match (&record[1], &record[2]) {
            ("NONE", "NONE") => None,
            ("NONE", act) | (_, act @ "NONE") => {
                return Err(parse_error(
                    path,
                    line,
                    format!(
                        "camera_position {:?} inconsistent with activation {act:?}",
                        &record[1]
                    ),
                ))
            }
            (pos, act) => {
                let position = pos
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("bad camera_position {pos:?}")))?;
                let active = match act {
                    "ACTIVE" => true,
                    "INACTIVE" => false,
                    other => {
                        return Err(parse_error(path, line, format!("bad activation {other:?}")))
                    }
                };
                Some(CameraAnnotation { position, active })
            }
        };
        if !seen.insert(index) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate frame_index {index}"),
            ));
        }
        out.push(FrameAnnotation {
            frame_index: index,
            camera,
        });
    }
    Ok(out)
}

/// Writes annotations in the canonical CSV format (UTF-8, LF).
pub fn write_annotations(out: impl Write, annotations: &[FrameAnnotation]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::io("<annotations>", std::io::Error::other(e));
    wtr.write_record(ANNOTATION_HEADER).map_err(io)?;
    for a in annotations {
        wtr.write_record(a.csv_fields()).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<annotations>", e))?;
    Ok(())
}
