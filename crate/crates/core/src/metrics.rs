//! PSNR variants in tone-compressed space and AOV precision comparison.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{intersect_sphere, intersect_triangle, triangle_normal, Ray};
use crate::image::HdrImage;
use crate::integrator::CameraFrame;
use crate::math::Vector3;
use crate::nif::rgb_to_yuv;
use crate::scene::{PrimRef, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsnrReport {
    pub psnr_rgb: f64,
    pub psnr_luma: f64,
    pub psnr_chroma: f64,
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s / a.len() as f64
}

/// `10 log10(peak² / mse)`; infinite for a zero error.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// PSNR of `test` against `reference` after `ln(1 + x)` compression. Luma
/// and chroma use BT.601 YUV of the compressed values, with U and V pooled
/// into one error. All three use the same peak: the largest compressed
/// reference channel value.
pub fn psnr(reference: &HdrImage, test: &HdrImage) -> Result<PsnrReport> {
    reference.check_same_size(test)?;
    let n = reference.pixels().len();
    let compress = |img: &HdrImage| -> Vec<[f64; 3]> {
        img.pixels()
            .iter()
            .map(|p| p.to_array().map(|c| (c.max(0.0) as f64).ln_1p()))
            .collect()
    };
    let (r, t) = (compress(reference), compress(test));
    let peak = r.iter().flatten().fold(0.0f64, |m, &c| m.max(c.abs()));
    let (mut e_rgb, mut e_y, mut e_uv) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in r.iter().zip(&t) {
        for c in 0..3 {
            e_rgb += (a[c] - b[c]).powi(2);
        }
        let (ya, yb) = (rgb_to_yuv(*a), rgb_to_yuv(*b));
        e_y += (ya[0] - yb[0]).powi(2);
        e_uv += (ya[1] - yb[1]).powi(2) + (ya[2] - yb[2]).powi(2);
    }
    let n = n as f64;
    Ok(PsnrReport {
        psnr_rgb: psnr_from_mse(e_rgb / (3.0 * n), peak),
        psnr_luma: psnr_from_mse(e_y / n, peak),
        psnr_chroma: psnr_from_mse(e_uv / (2.0 * n), peak),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AovKernel {
    /// Production path: `f32` camera rays through the compact BVH.
    F32Bvh,
    /// Oracle: `f64` camera rays against every primitive.
    F64BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AovReport {
    /// Worst per-axis MSE of unit normals over pixels where both kernels hit
    /// the same primitive.
    pub normal_mse: f64,
    pub hit_point_mse: f64,
    pub pixels: usize,
    /// Pixels where both kernels hit the same primitive.
    pub compared: usize,
    /// Pixels where the kernels disagree on hit/miss or on the primitive.
    pub outliers: usize,
}

impl AovReport {
    pub fn outlier_fraction(&self) -> f64 {
        self.outliers as f64 / self.pixels as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct Aov {
    prim: PrimRef,
    point: [f64; 3],
    normal: [f64; 3],
}

fn primary_aov_f32(scene: &Scene, frame: &CameraFrame<f32>, x: u32, y: u32) -> Option<Aov> {
    let ray = frame.ray(x, y, 0.5, 0.5);
    scene.intersect(&ray).map(|h| Aov {
        prim: h.prim,
        point: h.point.cast::<f64>().to_array(),
        normal: h.normal.cast::<f64>().to_array(),
    })
}

fn primary_aov_f64(scene: &Scene, frame: &CameraFrame<f64>, x: u32, y: u32) -> Option<Aov> {
    let ray: Ray<f64> = frame.ray(x, y, 0.5, 0.5);
    let mut best: Option<(f64, PrimRef, Vector3<f64>, Vector3<f64>)> = None;
    for (i, t) in scene.triangles.iter().enumerate() {
        let [p0, p1, p2] = t.v.map(|v| scene.vertices[v as usize].cast::<f64>());
        let t_max = best.map_or(f64::INFINITY, |b| b.0);
        if let Some(h) = intersect_triangle(&ray.with_range(0.0, t_max), p0, p1, p2) {
            if best.is_none_or(|b| h.t < b.0) {
                let point = p0 * h.b0 + p1 * h.b1 + p2 * h.b2;
                best = Some((h.t, PrimRef::Triangle(i as u32), point, triangle_normal(p0, p1, p2)));
            }
        }
    }
    for (i, s) in scene.spheres.iter().enumerate() {
        let t_max = best.map_or(f64::INFINITY, |b| b.0);
        let c = s.centre.cast::<f64>();
        if let Some(t) = intersect_sphere(&ray.with_range(0.0, t_max), c, s.radius as f64) {
            if best.is_none_or(|b| t < b.0) {
                let point = ray.at(t);
                best = Some((t, PrimRef::Sphere(i as u32), point, ((point - c) / s.radius as f64).normalized()));
            }
        }
    }
    best.map(|(_, prim, point, normal)| Aov {
        prim,
        point: point.to_array(),
        normal: normal.to_array(),
    })
}

fn primary_aovs(scene: &Scene, width: u32, height: u32, kernel: AovKernel) -> Vec<Option<Aov>> {
    use rayon::prelude::*;
    (0..width * height)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % width, i / width);
            match kernel {
                AovKernel::F32Bvh => primary_aov_f32(scene, &CameraFrame::new(&scene.camera, width, height), x, y),
                AovKernel::F64BruteForce => {
                    primary_aov_f64(scene, &CameraFrame::new(&scene.camera, width, height), x, y)
                }
            }
        })
        .collect()
}

/// Casts one primary ray per pixel centre with both kernels and compares
/// hit points and normals.
pub fn compare_aov(scene: &Scene, width: u32, height: u32, test: AovKernel, reference: AovKernel) -> AovReport {
    let a = primary_aovs(scene, width, height, test);
    let b = if test == reference {
        a.clone()
    } else {
        primary_aovs(scene, width, height, reference)
    };
    let mut se_n = [0.0f64; 3];
    let mut se_p = [0.0f64; 3];
    let (mut compared, mut outliers) = (0usize, 0usize);
    for (x, y) in a.iter().zip(&b) {
        match (x, y) {
            (None, None) => {}
            (Some(p), Some(q)) if p.prim == q.prim => {
                compared += 1;
                for c in 0..3 {
                    se_n[c] += (p.normal[c] - q.normal[c]).powi(2);
                    se_p[c] += (p.point[c] - q.point[c]).powi(2);
                }
            }
            _ => outliers += 1,
        }
    }
    let worst = |se: [f64; 3]| {
        if compared == 0 {
            0.0
        } else {
            se.into_iter().fold(0.0f64, f64::max) / compared as f64
        }
    };
    AovReport {
        normal_mse: worst(se_n),
        hit_point_mse: worst(se_p),
        pixels: a.len(),
        compared,
        outliers,
    }
}
