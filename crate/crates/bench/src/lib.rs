//! Shared fixtures for the criterion benchmarks in `benches/`.

use neuralpt_core::geometry::Ray;
use neuralpt_core::integrator::camera_ray;
use neuralpt_core::nif::{ColourMatrix, NifConfig, NifWeights};
use neuralpt_core::scene::Scene;
use neuralpt_core::RngKey;

/// One jittered camera ray per pixel of a `side x side` image.
pub fn camera_rays(scene: &Scene, side: u32) -> Vec<Ray> {
    let key = RngKey::new(0, 0, 0, 1);
    (0..side * side)
        .map(|i| {
            let jitter = (key.uniform(2 * i), key.uniform(2 * i + 1));
            camera_ray(&scene.camera, side, side, (i % side, i / side), jitter)
        })
        .collect()
}

pub fn uv_rows(n: u32) -> Vec<[f32; 2]> {
    let key = RngKey::new(1, 0, 0, 2);
    (0..n).map(|i| [key.uniform(2 * i), key.uniform(2 * i + 1)]).collect()
}

pub fn nif(hidden: u32, layers: u32) -> NifWeights<f32> {
    NifWeights::init_he_uniform(NifConfig::new(hidden, layers, ColourMatrix::YuvToRgb), 3).expect("valid shape")
}
