//! Camera tile detection for Da Vinci Xi video overlays.
//!
//! The Xi UI draws four arm-status tiles along the bottom of the endoscopic
//! image. One of them may belong to the endoscope arm, and it turns light blue
//! while the surgeon holds the camera pedal. This crate locates that tile and
//! its activation state frame by frame:
//!
//! 1. [`geometry`] strips black borders, rescales to the canonical 640×521
//!    frame and cuts four 168×28 tile crops.
//! 2. [`classifier`] scores each crop as no camera, inactive or active camera,
//!    using either the NCC template backend or an ONNX model.
//! 3. [`fusion`] combines the four tile decisions into a frame class and the
//!    camera position.
//! 4. [`temporal`] smooths the binary activation signal and emits segments.
//! 5. [`evaluation`] scores predictions against frame-wise annotations.
//!
//! [`synth`] renders deterministic UI-like frames with known ground truth and
//! [`pipeline`] ties everything together for the `camtile` CLI.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod synth;
pub mod temporal;

pub use classifier::{decide, ClassifierBackend, TileClass, TileScores};
pub use error::{Error, Result};
pub use fusion::{fuse, FrameClass, FrameResult};
pub use geometry::{
    crop_tiles, detect_content_box, extract_tiles, normalize, GeometryConfig, NormalizedFrame,
    RawFrame, Rect, TileCrop, TilePosition,
};
pub use temporal::{binarize, segments, smooth, ActivationSegment, SmoothingConfig};
