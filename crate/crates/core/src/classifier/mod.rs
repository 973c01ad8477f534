//! Per-tile classification into no camera, inactive camera or active camera.

#[cfg(feature = "onnx")]
pub mod model;
pub mod ncc;
pub mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TileCrop;

#[cfg(feature = "onnx")]
pub use model::{ModelBackend, ModelBackendConfig};
pub use ncc::ncc;
pub use template::{template_classify, TemplateBackend, TemplateBackendConfig};

/// Decision for a single tile. The declaration order is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TileClass {
    #[serde(rename = "NO")]
    NoCamera,
    #[serde(rename = "INACTIVE")]
    InactiveCamera,
    #[serde(rename = "ACTIVE")]
    ActiveCamera,
}

impl TileClass {
    pub const ALL: [TileClass; 3] = [Self::NoCamera, Self::InactiveCamera, Self::ActiveCamera];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_camera(self) -> bool {
        self != Self::NoCamera
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoCamera => "NO",
            Self::InactiveCamera => "INACTIVE",
            Self::ActiveCamera => "ACTIVE",
        }
    }
}

impl fmt::Display for TileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TileClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NO" => Ok(Self::NoCamera),
            "INACTIVE" => Ok(Self::InactiveCamera),
            "ACTIVE" => Ok(Self::ActiveCamera),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Raw, uncalibrated class scores ordered as [`TileClass::ALL`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct TileScores([f64; 3]);

impl TileScores {
    pub fn new(scores: [f64; 3]) -> Result<Self> {
        if scores.iter().all(|s| s.is_finite()) {
            Ok(Self(scores))
        } else {
            Err(Error::BackendFailure(format!(
                "non-finite scores {scores:?}"
            )))
        }
    }

    pub fn values(&self) -> [f64; 3] {
        self.0
    }

    pub fn get(&self, class: TileClass) -> f64 {
        self.0[class.index()]
    }
}

impl TryFrom<[f64; 3]> for TileScores {
    type Error = Error;

    fn try_from(value: [f64; 3]) -> Result<Self> {
        Self::new(value)
    }
}

impl From<TileScores> for [f64; 3] {
    fn from(value: TileScores) -> Self {
        value.0
    }
}

/// Argmax over the scores; ties go to the earliest class in declaration order.
pub fn decide(scores: &TileScores) -> TileClass {
    let mut best = TileClass::NoCamera;
    for class in TileClass::ALL {
        if scores.get(class) > scores.get(best) {
            best = class;
        }
    }
    best
}

/// Identifies a loaded backend in extraction outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub version: String,
}

/// A loaded tile classifier.
///
/// Implementations are read-only after construction so one instance can be
/// shared by all worker threads.
pub trait ClassifierBackend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;

    fn classify(&self, tile: &TileCrop) -> Result<TileScores>;

    fn classify_frame(&self, tiles: &[TileCrop; 4]) -> Result<[TileScores; 4]> {
        let mut out = [TileScores([0.0; 3]); 4];
        for (slot, tile) in out.iter_mut().zip(tiles) {
            *slot = self.classify(tile)?;
        }
        Ok(out)
    }
}

/// Runs `backend` on one tile, re-checking the finiteness contract.
pub fn classify_tile(backend: &dyn ClassifierBackend, tile: &TileCrop) -> Result<TileScores> {
    let scores = backend.classify(tile)?;
    TileScores::new(scores.values())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn scores(v: [f64; 3]) -> TileScores {
        TileScores::new(v).unwrap()
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(decide(&scores([0.1, 0.9, 0.2])), TileClass::InactiveCamera);
        assert_eq!(decide(&scores([0.5, 0.5, 0.5])), TileClass::NoCamera);
        assert_eq!(decide(&scores([-3.2, -0.1, 4.7])), TileClass::ActiveCamera);
        assert_eq!(decide(&scores([0.0, 2.0, 2.0])), TileClass::InactiveCamera);
    }

    #[test]
    fn non_finite_scores_rejected() {
        assert!(TileScores::new([f64::NAN, 0.0, 0.0]).is_err());
        assert!(TileScores::new([0.0, f64::INFINITY, 0.0]).is_err());
        assert!(serde_json::from_str::<TileScores>("[1.0, 2.0, 3.0]").is_ok());
    }

    #[test]
    fn class_strings_round_trip() {
        for class in TileClass::ALL {
            assert_eq!(class.as_str().parse::<TileClass>().unwrap(), class);
            let json = serde_json::to_string(&class).unwrap();
            assert_eq!(json, format!("\"{}\"", class.as_str()));
        }
        assert!("MAYBE".parse::<TileClass>().is_err());
    }

    proptest! {
        #[test]
        fn decide_picks_a_maximum(v in prop::array::uniform3(-10.0f64..10.0)) {
            let class = decide(&scores(v));
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(v[class.index()], max);
            // no earlier class attains the maximum
            prop_assert!(v[..class.index()].iter().all(|&s| s < max));
        }

        #[test]
        fn swapping_equal_maxima_is_stable(a in -5.0f64..5.0, b in -5.0f64..5.0, slot in 0usize..3) {
            let hi = a.max(b) + 1.0;
            let mut v = [a, b, a.min(b)];
            v[slot] = hi;
            let other = (slot + 1) % 3;
            v[other] = hi;
            let mut swapped = v;
            swapped.swap(slot, other);
            prop_assert_eq!(decide(&scores(v)), decide(&scores(swapped)));
        }
    }
}
