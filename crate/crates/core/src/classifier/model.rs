//! ONNX model backend.
//!
//! The model contract: one input named `tiles` of shape N×3×28×168 (float,
//! channel-first, `(x/255 − mean)/std` per channel) and one output named
//! `scores` of shape N×3 ordered as [`TileClass::ALL`](super::TileClass::ALL).

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tract_onnx::prelude::*;

use super::{BackendDescriptor, ClassifierBackend, TileScores};
use crate::error::{Error, Result};
use crate::geometry::TileCrop;

pub const INPUT_NAME: &str = "tiles";
pub const OUTPUT_NAME: &str = "scores";
pub const INPUT_CHANNELS: usize = 3;
pub const INPUT_HEIGHT: usize = 28;
pub const INPUT_WIDTH: usize = 168;

pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBackendConfig {
    pub model_path: PathBuf,
    #[serde(default = "default_mean")]
    pub mean: [f32; 3],
    #[serde(default = "default_std")]
    pub std: [f32; 3],
}

fn default_mean() -> [f32; 3] {
    IMAGENET_MEAN
}

fn default_std() -> [f32; 3] {
    IMAGENET_STD
}

impl ModelBackendConfig {
    pub fn new(model_path: impl Into<PathBuf>) -> Self {
        Self {
            model_path: model_path.into(),
            mean: IMAGENET_MEAN,
            std: IMAGENET_STD,
        }
    }
}

type Plan = Arc<TypedRunnableModel>;

pub struct ModelBackend {
    config: ModelBackendConfig,
    plan: Plan,
}

impl std::fmt::Debug for ModelBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelBackend")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn failure(context: &str, err: impl std::fmt::Display) -> Error {
    Error::BackendFailure(format!("{context}: {err}"))
}

impl ModelBackend {
    pub fn load(config: ModelBackendConfig) -> Result<Self> {
        if config.std.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(Error::InvalidConfig("std must be positive".into()));
        }
        let path = &config.model_path;
        let context = path.display().to_string();
        let model = tract_onnx::onnx()
            .model_for_path(path)
            .map_err(|e| failure(&context, e))?;

        let inputs = model.input_outlets().map_err(|e| failure(&context, e))?;
        let outputs = model.output_outlets().map_err(|e| failure(&context, e))?;
        if inputs.len() != 1 || outputs.len() != 1 {
            return Err(failure(
                &context,
                format!(
                    "expected 1 input and 1 output, found {} and {}",
                    inputs.len(),
                    outputs.len()
                ),
            ));
        }
        let input_name = &model.node(inputs[0].node).name;
        if input_name != INPUT_NAME {
            return Err(failure(
                &context,
                format!("input is named {input_name:?}, expected {INPUT_NAME:?}"),
            ));
        }
        let output_name = model
            .outlet_label(outputs[0])
            .unwrap_or(&model.node(outputs[0].node).name);
        if output_name != OUTPUT_NAME {
            return Err(failure(
                &context,
                format!("output is named {output_name:?}, expected {OUTPUT_NAME:?}"),
            ));
        }

        let plan = model
            .with_input_fact(
                0,
                f32::fact([1, INPUT_CHANNELS, INPUT_HEIGHT, INPUT_WIDTH]).into(),
            )
            .and_then(|m| m.into_optimized())
            .map_err(|e| failure(&context, e))?;
        let out_shape = plan
            .output_fact(0)
            .map_err(|e| failure(&context, e))?
            .shape
            .as_concrete()
            .map(|s| s.to_vec());
        if out_shape.as_deref() != Some(&[1, 3][..]) {
            return Err(failure(
                &context,
                format!("output shape {out_shape:?}, expected [1, 3]"),
            ));
        }
        let plan = plan.into_runnable().map_err(|e| failure(&context, e))?;
        Ok(Self { config, plan })
    }

    pub fn config(&self) -> &ModelBackendConfig {
        &self.config
    }

    /// Channel-first normalized tensor for one tile.
    pub fn input_tensor(&self, tile: &TileCrop) -> Result<Tensor> {
        let (w, h) = tile.image.dimensions();
        if (w as usize, h as usize) != (INPUT_WIDTH, INPUT_HEIGHT) {
            return Err(Error::BackendFailure(format!(
                "tile is {w}x{h}, model expects {INPUT_WIDTH}x{INPUT_HEIGHT}"
            )));
        }
        let (mean, std) = (self.config.mean, self.config.std);
        let array = tract_ndarray::Array4::from_shape_fn(
            (1, INPUT_CHANNELS, INPUT_HEIGHT, INPUT_WIDTH),
            |(_, c, y, x)| {
                let v = f32::from(tile.image.get_pixel(x as u32, y as u32)[c]);
                (v / 255.0 - mean[c]) / std[c]
            },
        );
        Ok(array.into_tensor())
    }
}

impl ClassifierBackend for ModelBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "onnx".into(),
            version: self
                .config
                .model_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }

    fn classify(&self, tile: &TileCrop) -> Result<TileScores> {
        let input = self.input_tensor(tile)?;
        let outputs = self
            .plan
            .run(tvec!(input.into()))
            .map_err(|e| failure("inference", e))?;
        let view = outputs[0]
            .to_plain_array_view::<f32>()
            .map_err(|e| failure("inference output", e))?;
        let values: Vec<f64> = view.iter().map(|&v| f64::from(v)).collect();
        let scores: [f64; 3] = values.try_into().map_err(|v: Vec<f64>| {
            Error::BackendFailure(format!("model emitted {} scores", v.len()))
        })?;
        TileScores::new(scores)
    }
}
