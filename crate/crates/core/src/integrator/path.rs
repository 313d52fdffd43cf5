use super::sampling::{cosine_hemisphere, reflect};
use crate::geometry::Ray;
use crate::math::{Rgb, Vec3};
use crate::rng::RngKey;
use crate::scene::{MaterialKind, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Alive,
    Escaped,
    Terminated,
}

/// Per-path record carried through the bounce loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub ray: Ray,
    pub throughput: Rgb,
    pub radiance: Rgb,
    pub depth: u32,
    pub status: PathStatus,
    /// Key of the path; bounce `d` draws from `key.with_bounce(d + 1)`.
    pub key: RngKey,
}

impl PathState {
    pub fn new(ray: Ray, key: RngKey) -> Self {
        Self {
            ray,
            throughput: Rgb::WHITE,
            radiance: Rgb::BLACK,
            depth: 0,
            status: PathStatus::Alive,
            key,
        }
    }
}

/// Draw indices within one bounce.
pub(crate) const DRAW_DIR_U: u32 = 0;
pub(crate) const DRAW_DIR_V: u32 = 1;
pub(crate) const DRAW_FRESNEL: u32 = 2;
pub(crate) const DRAW_ROULETTE: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceSettings {
    pub max_depth: u32,
    pub roulette_start_depth: u32,
    pub ray_epsilon: f32,
}

/// Throughput-proportional Russian roulette with survival probability
/// `min(1, max(throughput))`, applied from `start_depth` on.
pub fn roulette(mut state: PathState, start_depth: u32, u: f32) -> PathState {
    if state.status != PathStatus::Alive || state.depth < start_depth {
        return state;
    }
    let p = state.throughput.max_component().min(1.0);
    if u < p {
        if p < 1.0 {
            state.throughput = state.throughput / p;
        }
    } else {
        state.status = PathStatus::Terminated;
    }
    state
}

/// Schlick's approximation of unpolarised Fresnel reflectance.
pub fn schlick(cos: f32, ior: f32) -> f32 {
    let r0 = ((1.0 - ior) / (1.0 + ior)).powi(2);
    r0 + (1.0 - r0) * (1.0 - cos).powi(5)
}

/// Reflected or refracted direction at a dielectric boundary; `u` picks
/// between them with the Fresnel reflectance as probability.
pub fn dielectric_scatter(d: Vec3, n: Vec3, ior: f32, u: f32) -> Vec3 {
    let entering = d.dot(n) < 0.0;
    let (nn, eta) = if entering { (n, 1.0 / ior) } else { (-n, ior) };
    let cos_i = -d.dot(nn);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t >= 1.0 {
        return reflect(d, nn);
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let f = schlick(if entering { cos_i } else { cos_t }, ior);
    if u < f {
        reflect(d, nn)
    } else {
        (d * eta + nn * (eta * cos_i - cos_t)).normalized()
    }
}

/// Advances an alive path by one intersection: escape, emission, or a
/// scattering event, then the depth cap and roulette.
pub fn trace_bounce(mut state: PathState, scene: &Scene, settings: &BounceSettings) -> PathState {
    if state.status != PathStatus::Alive {
        return state;
    }
    let key = state.key.with_bounce(state.depth + 1);
    state.depth += 1;
    let Some(hit) = scene.intersect(&state.ray) else {
        state.status = PathStatus::Escaped;
        return state;
    };
    let d = state.ray.dir;
    let m = scene.materials[hit.material as usize];
    let front = d.dot(hit.normal) < 0.0;
    let new_dir = match m.kind {
        MaterialKind::Emissive => {
            if front {
                state.radiance += state.throughput * m.emission;
            }
            state.status = PathStatus::Terminated;
            return state;
        }
        MaterialKind::Diffuse => {
            let n = if front { hit.normal } else { -hit.normal };
            state.throughput *= m.albedo;
            cosine_hemisphere(n, key.uniform(DRAW_DIR_U), key.uniform(DRAW_DIR_V))
        }
        MaterialKind::Mirror => {
            state.throughput *= m.albedo;
            reflect(d, hit.normal)
        }
        MaterialKind::Dielectric => dielectric_scatter(d, hit.normal, m.ior, key.uniform(DRAW_FRESNEL)),
    };
    state.ray = Ray::new(hit.point, new_dir).with_range(settings.ray_epsilon, f32::INFINITY);
    if state.depth >= settings.max_depth {
        state.status = PathStatus::Terminated;
        return state;
    }
    if state.throughput.is_black() {
        state.status = PathStatus::Terminated;
        return state;
    }
    roulette(state, settings.roulette_start_depth, key.uniform(DRAW_ROULETTE))
}
