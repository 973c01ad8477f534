//! Frame-level fusion of the four tile decisions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{TileClass, TileScores};
use crate::error::{Error, Result};
use crate::geometry::TilePosition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameClass {
    #[serde(rename = "NO_CAMERA")]
    NoCamera,
    #[serde(rename = "ONE_INACTIVE")]
    OneInactiveCamera,
    #[serde(rename = "ONE_ACTIVE")]
    OneActiveCamera,
    #[serde(rename = "TOO_MANY")]
    TooManyCameras,
}

impl FrameClass {
    pub const ALL: [FrameClass; 4] = [
        Self::NoCamera,
        Self::OneInactiveCamera,
        Self::OneActiveCamera,
        Self::TooManyCameras,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoCamera => "NO_CAMERA",
            Self::OneInactiveCamera => "ONE_INACTIVE",
            Self::OneActiveCamera => "ONE_ACTIVE",
            Self::TooManyCameras => "TOO_MANY",
        }
    }
}

impl fmt::Display for FrameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Fused outcome for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fused {
    pub class: FrameClass,
    /// Present iff exactly one tile shows a camera.
    pub position: Option<TilePosition>,
}

/// Combines tile classes (T1..T4) into a frame class.
///
/// One camera tile yields its state and position; two or more camera tiles,
/// regardless of their activation, yield `TooManyCameras`.
pub fn fuse(tiles: &[TileClass; 4]) -> Fused {
    let mut cameras = tiles
        .iter()
        .zip(TilePosition::ALL)
        .filter(|(class, _)| class.is_camera());
    match (cameras.next(), cameras.next()) {
        (None, _) => Fused {
            class: FrameClass::NoCamera,
            position: None,
        },
        (Some((&class, position)), None) => Fused {
            class: if class == TileClass::ActiveCamera {
                FrameClass::OneActiveCamera
            } else {
                FrameClass::OneInactiveCamera
            },
            position: Some(position),
        },
        (Some(_), Some(_)) => Fused {
            class: FrameClass::TooManyCameras,
            position: None,
        },
    }
}

/// Per-frame pipeline result.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub frame_index: u64,
    pub frame_class: FrameClass,
    pub camera_position: Option<TilePosition>,
    pub tile_classes: [TileClass; 4],
    pub tile_scores: Option<[TileScores; 4]>,
    /// Set when the frame could not be decoded or classified; such frames
    /// are reported as `NoCamera`.
    pub error: Option<String>,
}

impl FrameResult {
    pub fn from_tiles(
        frame_index: u64,
        tile_classes: [TileClass; 4],
        tile_scores: Option<[TileScores; 4]>,
    ) -> Self {
        let fused = fuse(&tile_classes);
        Self {
            frame_index,
            frame_class: fused.class,
            camera_position: fused.position,
            tile_classes,
            tile_scores,
            error: None,
        }
    }

    pub fn failed(frame_index: u64, error: impl Into<String>) -> Self {
        Self {
            error: Some(error.into()),
            ..Self::from_tiles(frame_index, [TileClass::NoCamera; 4], None)
        }
    }
}
