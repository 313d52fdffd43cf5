//! Path tracer: camera rays, equirectangular mapping, BSDF sampling,
//! roulette and rendering with batched environment queries.

mod path;
mod render;
mod sampling;

pub use path::{dielectric_scatter, roulette, schlick, trace_bounce, BounceSettings, PathState, PathStatus};
pub use render::{path_key, render, trace_path, Environment, RenderConfig};
pub use sampling::{
    camera_ray, cosine_hemisphere, dir_to_equirect, equirect_to_dir, reflect, uniform_sphere, CameraFrame,
};
