#![cfg(feature = "onnx")]

use std::path::PathBuf;

use camtile_core::classifier::model::{
    ModelBackend, ModelBackendConfig, IMAGENET_MEAN, IMAGENET_STD,
};
use camtile_core::{ClassifierBackend, Error, TileCrop, TilePosition};
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Must match make_models.py.
const WEIGHTS: [[f64; 3]; 3] = [[0.5, -0.2, 0.1], [-0.3, 0.8, 0.2], [0.1, 0.1, 0.9]];
const BIAS: [f64; 3] = [0.05, -0.1, 0.0];

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/models")
        .join(name)
}

fn load(name: &str) -> Result<ModelBackend, Error> {
    ModelBackend::load(ModelBackendConfig::new(fixture(name)))
}

fn random_tile(rng: &mut ChaCha8Rng) -> TileCrop {
    let image = RgbImage::from_fn(168, 28, |_, _| Rgb(rng.random()));
    TileCrop::new(TilePosition::T1, image)
}

/// The fixture network is a linear map of per-channel means, so the expected
/// scores follow from plain arithmetic on the pixels.
fn expected_scores(tile: &RgbImage) -> [f64; 3] {
    let n = (tile.width() * tile.height()) as f64;
    let mut means = [0.0f64; 3];
    for p in tile.pixels() {
        for c in 0..3 {
            means[c] += (p[c] as f64 / 255.0 - IMAGENET_MEAN[c] as f64) / IMAGENET_STD[c] as f64;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    std::array::from_fn(|k| BIAS[k] + (0..3).map(|c| WEIGHTS[k][c] * means[c]).sum::<f64>())
}

#[test]
fn scores_match_independent_computation() {
    let backend = load("tiny_tile_classifier.onnx").unwrap();
    assert_eq!(backend.descriptor().name, "onnx");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let tile = random_tile(&mut rng);
        let got = backend.classify(&tile).unwrap();
        let want = expected_scores(&tile.image);
        for (k, (g, w)) in got.values().iter().zip(want).enumerate() {
            assert!((g - w).abs() < 1e-4, "score {k}: {g} vs {w}");
        }
    }
}

#[test]
fn deterministic_and_finite_on_zero_tile() {
    let backend = load("tiny_tile_classifier.onnx").unwrap();
    let tile = TileCrop::new(TilePosition::T3, RgbImage::new(168, 28));
    let a = backend.classify(&tile).unwrap();
    let b = backend.classify(&tile).unwrap();
    assert_eq!(a, b);
    assert!(a.values().iter().all(|v| v.is_finite()));
    let want = expected_scores(&tile.image);
    assert!((a.values()[2] - want[2]).abs() < 1e-4);
}

#[test]
fn frame_batch_matches_single_tiles() {
    let backend = load("tiny_tile_classifier.onnx").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tiles: [TileCrop; 4] = std::array::from_fn(|i| {
        let mut t = random_tile(&mut rng);
        t.position = TilePosition::ALL[i];
        t
    });
    let batch = backend.classify_frame(&tiles).unwrap();
    for (tile, scores) in tiles.iter().zip(batch) {
        assert_eq!(backend.classify(tile).unwrap(), scores);
    }
}

#[test]
fn rejects_wrong_io_names() {
    let err = load("wrong_io_names.onnx").unwrap_err();
    assert!(matches!(err, Error::BackendFailure(_)), "{err}");
    assert!(err.to_string().contains("tiles"), "{err}");
}

#[test]
fn rejects_wrong_output_width() {
    let err = load("two_outputs.onnx").unwrap_err();
    assert!(matches!(err, Error::BackendFailure(_)), "{err}");
}

#[test]
fn missing_file_is_a_backend_failure() {
    let err = load("does_not_exist.onnx").unwrap_err();
    assert!(matches!(err, Error::BackendFailure(_)), "{err}");
}

#[test]
fn wrong_tile_size_is_rejected() {
    let backend = load("tiny_tile_classifier.onnx").unwrap();
    let tile = TileCrop::new(TilePosition::T1, RgbImage::new(160, 20));
    assert!(backend.classify(&tile).is_err());
}
