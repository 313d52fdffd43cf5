use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{trace_bounce, BounceSettings, PathState, PathStatus};
use super::sampling::{dir_to_equirect, CameraFrame};
use crate::error::{Error, Result};
use crate::image::HdrImage;
use crate::math::Rgb;
use crate::nif::{nif_forward, NifWeights};
use crate::rng::RngKey;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub spp: u32,
    pub max_depth: u32,
    pub roulette_start_depth: u32,
    /// Escaped-path directions per environment query.
    pub env_batch_chunk: u32,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            spp: 16,
            max_depth: 10,
            roulette_start_depth: 3,
            env_batch_chunk: 4096,
            seed: 0,
            workers: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.spp == 0 || self.max_depth == 0 || self.env_batch_chunk == 0 {
            return Err(Error::Config(
                "width, height, spp, max_depth and env_batch_chunk must be positive".into(),
            ));
        }
        if self.roulette_start_depth > self.max_depth {
            return Err(Error::Config(format!(
                "roulette_start_depth {} exceeds max_depth {}",
                self.roulette_start_depth, self.max_depth
            )));
        }
        if self.width as u64 * self.height as u64 * self.spp as u64 > u32::MAX as u64 {
            return Err(Error::Config("width x height x spp exceeds 2^32 paths".into()));
        }
        Ok(())
    }
}

/// Radiance arriving from infinity, looked up by equirectangular `(u, v)`.
#[derive(Debug, Clone)]
pub enum Environment {
    Constant(Rgb),
    Image(HdrImage),
    Nif(NifWeights<f32>),
}

impl Environment {
    /// Evaluates a batch of lookups; the value for a row depends only on
    /// that row.
    pub fn eval(&self, uv: &[[f32; 2]]) -> Result<Vec<Rgb>> {
        match self {
            Environment::Constant(c) => Ok(vec![*c; uv.len()]),
            Environment::Image(img) => Ok(uv.iter().map(|p| img.bilinear(p[0], p[1])).collect()),
            Environment::Nif(w) => nif_forward(w, uv, uv.len().max(1)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Environment::Constant(_) => "constant",
            Environment::Image(_) => "image",
            Environment::Nif(_) => "nif",
        }
    }
}

/// Paths traced between two rounds of environment queries.
const WAVE_PATHS: usize = 1 << 18;

/// Key of sample `sample` of pixel `pixel`; the camera jitter uses draws 0
/// and 1 of bounce 0.
pub fn path_key(pixel: u64, sample: u32, seed: u64) -> RngKey {
    RngKey::new(pixel, sample, 0, seed)
}

/// Traces one path to escape or termination.
pub fn trace_path(scene: &Scene, frame: &CameraFrame, settings: &BounceSettings, px: u32, py: u32, sample: u32, seed: u64) -> PathState {
    let pixel = py as u64 * frame.width as u64 + px as u64;
    let key = path_key(pixel, sample, seed);
    let ray = frame.ray(px, py, key.uniform(0), key.uniform(1));
    let mut state = PathState::new(ray, key);
    while state.status == PathStatus::Alive {
        state = trace_bounce(state, scene, settings);
    }
    state
}

/// Renders `scene` under `env`. Paths are traced in waves of whole image
/// rows; after each wave the escaped directions are looked up in batches
/// of `env_batch_chunk`. Pixel values are means over `spp` accumulated in
/// `f64` in sample order, so the output is independent of the worker
/// count and the batch size.
pub fn render(scene: &Scene, config: &RenderConfig, env: &Environment) -> Result<HdrImage> {
    config.validate()?;
    if let Environment::Nif(w) = env {
        w.shape_audit()?;
    }
    let run = || render_inner(scene, config, env);
    if config.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers as usize)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(run)
    }
}

struct Escaped {
    slot: u32,
    throughput: Rgb,
    uv: [f32; 2],
}

fn render_inner(scene: &Scene, config: &RenderConfig, env: &Environment) -> Result<HdrImage> {
    let (w, h, spp) = (config.width, config.height, config.spp as usize);
    let frame = CameraFrame::new(&scene.camera, w, h);
    let settings = BounceSettings {
        max_depth: config.max_depth,
        roulette_start_depth: config.roulette_start_depth,
        ray_epsilon: scene.ray_epsilon(),
    };
    let rows_per_wave = (WAVE_PATHS / (w as usize * spp)).max(1);
    let mut pixels = Vec::with_capacity(w as usize * h as usize);

    for y0 in (0..h).step_by(rows_per_wave) {
        let y1 = (y0 + rows_per_wave as u32).min(h);
        let count = (y1 - y0) as usize * w as usize;
        // per path radiance, slot = local pixel * spp + sample
        let traced: Vec<(Vec<Rgb>, Vec<Escaped>)> = (0..count)
            .into_par_iter()
            .map(|i| {
                let (px, py) = (i as u32 % w, y0 + i as u32 / w);
                let mut radiance = Vec::with_capacity(spp);
                let mut escaped = Vec::new();
                for s in 0..spp as u32 {
                    let st = trace_path(scene, &frame, &settings, px, py, s, config.seed);
                    radiance.push(st.radiance);
                    if st.status == PathStatus::Escaped {
                        let (u, v) = dir_to_equirect(st.ray.dir);
                        escaped.push(Escaped {
                            slot: (i * spp) as u32 + s,
                            throughput: st.throughput,
                            uv: [u, v],
                        });
                    }
                }
                (radiance, escaped)
            })
            .collect();
        let mut radiance: Vec<Rgb> = Vec::with_capacity(count * spp);
        let mut escaped: Vec<Escaped> = Vec::new();
        for (r, e) in traced {
            radiance.extend(r);
            escaped.extend(e);
        }

        let uv: Vec<[f32; 2]> = escaped.iter().map(|e| e.uv).collect();
        let chunk = config.env_batch_chunk as usize;
        let env_values: Vec<Vec<Rgb>> = uv.par_chunks(chunk).map(|c| env.eval(c)).collect::<Result<_>>()?;
        for (e, l) in escaped.iter().zip(env_values.into_iter().flatten()) {
            let r = &mut radiance[e.slot as usize];
            *r += e.throughput * l;
        }

        for p in radiance.chunks_exact(spp) {
            let mut sum = [0.0f64; 3];
            for s in p {
                sum[0] += s.r as f64;
                sum[1] += s.g as f64;
                sum[2] += s.b as f64;
            }
            let n = spp as f64;
            pixels.push(Rgb::new((sum[0] / n) as f32, (sum[1] / n) as f32, (sum[2] / n) as f32));
        }
    }
    HdrImage::from_pixels(w, h, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{builtin_scene, BuiltinScene, Camera};

    #[test]
    fn furnace_is_exact() {
        let scene = Scene::empty(Camera::default());
        let c = Rgb::new(0.5, 0.123_456_7, 3.0);
        let cfg = RenderConfig {
            width: 9,
            height: 7,
            spp: 5,
            ..RenderConfig::default()
        };
        let img = render(&scene, &cfg, &Environment::Constant(c)).unwrap();
        assert!(img.pixels().iter().all(|p| *p == c));
    }

    #[test]
    fn rejects_bad_config() {
        let scene = Scene::empty(Camera::default());
        let bad = RenderConfig {
            roulette_start_depth: 11,
            ..RenderConfig::default()
        };
        assert!(matches!(render(&scene, &bad, &Environment::Constant(Rgb::WHITE)), Err(Error::Config(_))));
    }

    #[test]
    fn small_box_render_is_finite_and_lit() {
        let scene = builtin_scene(BuiltinScene::Box);
        let cfg = RenderConfig {
            width: 16,
            height: 16,
            spp: 4,
            ..RenderConfig::default()
        };
        let img = render(&scene, &cfg, &Environment::Constant(Rgb::BLACK)).unwrap();
        assert!(img.pixels().iter().all(|p| p.is_finite() && p.r >= 0.0 && p.g >= 0.0 && p.b >= 0.0));
        assert!(img.mean()[0] > 0.0);
    }

    #[test]
    fn chunk_and_worker_count_do_not_change_pixels() {
        let scene = builtin_scene(BuiltinScene::Spheres);
        let env = Environment::Image(HdrImage::from_fn(16, 8, |x, y| Rgb::new(x as f32, y as f32, 1.0)).unwrap());
        let base = RenderConfig {
            width: 12,
            height: 10,
            spp: 3,
            env_batch_chunk: 1,
            ..RenderConfig::default()
        };
        let a = render(&scene, &base, &env).unwrap();
        let b = render(
            &scene,
            &RenderConfig {
                env_batch_chunk: 1000,
                workers: 2,
                ..base
            },
            &env,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
