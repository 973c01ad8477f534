//! Temporal smoothing of the binary activation signal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{FrameClass, FrameResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    /// Majority-vote window length, odd.
    pub window: usize,
    /// Shorter active runs are dropped from the segment list.
    pub min_segment_frames: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            window: 5,
            min_segment_frames: 1,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "smoothing window must be odd and positive, got {}",
                self.window
            )));
        }
        if self.min_segment_frames == 0 {
            return Err(Error::InvalidConfig(
                "min_segment_frames must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Half-open interval `[start_frame, end_frame)` of active frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationSegment {
    #[serde(rename = "start")]
    pub start_frame: u64,
    #[serde(rename = "end")]
    pub end_frame: u64,
}

impl ActivationSegment {
    pub fn frame_count(&self) -> u64 {
        self.end_frame - self.start_frame
    }
}

/// `true` only for a single active camera.
pub fn binarize(result: &FrameResult) -> bool {
    result.frame_class == FrameClass::OneActiveCamera
}

/// Sliding majority vote. Near the ends the window shrinks symmetrically to
/// the frames available, so it always has odd length.
pub fn smooth(signal: &[bool], cfg: &SmoothingConfig) -> Vec<bool> {
    let n = signal.len();
    let half = cfg.window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &bit in signal {
        prefix.push(prefix.last().unwrap() + usize::from(bit));
    }
    (0..n)
        .map(|i| {
            let r = half.min(i).min(n - 1 - i);
            let ones = prefix[i + r + 1] - prefix[i - r];
            2 * ones > 2 * r + 1
        })
        .collect()
}

/// Maximal runs of `true` at least `min_segment_frames` long, as positions
/// in `signal`.
pub fn segments(signal: &[bool], cfg: &SmoothingConfig) -> Vec<ActivationSegment> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &bit) in signal.iter().chain(std::iter::once(&false)).enumerate() {
        match (bit, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= cfg.min_segment_frames {
                    out.push(ActivationSegment {
                        start_frame: s as u64,
                        end_frame: i as u64,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}
