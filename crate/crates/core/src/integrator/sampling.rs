use std::f64::consts::PI;

use crate::geometry::Ray;
use crate::math::{orthonormal_basis, Real, Vec3, Vector3};
use crate::scene::Camera;

/// Pinhole camera frame with precomputed screen axes.
#[derive(Debug, Clone, Copy)]
pub struct CameraFrame<T: Real = f32> {
    pub origin: Vector3<T>,
    pub forward: Vector3<T>,
    /// Screen-right axis scaled by `tan(fov / 2) * aspect`.
    pub right: Vector3<T>,
    /// Screen-up axis scaled by `tan(fov / 2)`.
    pub up: Vector3<T>,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraFrame<T> {
    pub fn new(camera: &Camera, width: u32, height: u32) -> Self {
        let origin: Vector3<T> = camera.position.cast();
        let forward = (camera.look_at.cast::<T>() - origin).normalized();
        let right = forward.cross(camera.up.cast()).normalized();
        let up = right.cross(forward);
        let tan_half = T::lit((camera.vfov_deg as f64).to_radians() * 0.5).tan();
        let aspect = T::lit(width as f64 / height as f64);
        Self {
            origin,
            forward,
            right: right * (tan_half * aspect),
            up: up * tan_half,
            width,
            height,
        }
    }

    /// Ray through raster position `(px + jx, py + jy)`; row 0 is the top.
    pub fn ray(&self, px: u32, py: u32, jx: T, jy: T) -> Ray<T> {
        let two = T::lit(2.0);
        let sx = (T::lit(px as f64) + jx) / T::lit(self.width as f64) * two - T::one();
        let sy = T::one() - (T::lit(py as f64) + jy) / T::lit(self.height as f64) * two;
        let d = (self.forward + self.right * sx + self.up * sy).normalized();
        Ray::new(self.origin, d)
    }
}

pub fn camera_ray(camera: &Camera, width: u32, height: u32, pixel: (u32, u32), jitter: (f32, f32)) -> Ray {
    CameraFrame::<f32>::new(camera, width, height).ray(pixel.0, pixel.1, jitter.0, jitter.1)
}

/// `u = 0.5 + atan2(x, -z) / 2π` wrapped into `[0, 1)`, `v = acos(y) / π`.
/// At the poles `u` is 0.5. `d` need not be exactly unit length.
pub fn dir_to_equirect(d: Vec3) -> (f32, f32) {
    let (x, y, z) = (d.x as f64, d.y as f64, d.z as f64);
    let u = if x == 0.0 && z == 0.0 {
        0.5
    } else {
        let u = 0.5 + x.atan2(-z) / (2.0 * PI);
        if u >= 1.0 {
            u - 1.0
        } else {
            u
        }
    };
    let v = x.hypot(z).atan2(y) / PI;
    // keep both in [0, 1) after narrowing
    let narrow = |t: f64| (t as f32).min(1.0f32.next_down());
    (narrow(u), narrow(v))
}

pub fn equirect_to_dir(u: f32, v: f32) -> Vec3 {
    let phi = 2.0 * PI * (u as f64 - 0.5);
    let theta = PI * v as f64;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new((st * sp) as f32, ct as f32, (-st * cp) as f32)
}

/// Uniform direction on the unit sphere.
pub fn uniform_sphere(u: f32, v: f32) -> Vec3 {
    let z = 1.0 - 2.0 * u;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f32::consts::PI * v;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Cosine-weighted direction in the hemisphere around unit `n`.
pub fn cosine_hemisphere(n: Vec3, u: f32, v: f32) -> Vec3 {
    let r = u.sqrt();
    let phi = 2.0 * std::f32::consts::PI * v;
    let (s, c) = phi.sin_cos();
    let z = (1.0 - u).max(0.0).sqrt();
    let (t, b) = orthonormal_basis(n);
    (t * (r * c) + b * (r * s) + n * z).normalized()
}

pub fn reflect(d: Vec3, n: Vec3) -> Vec3 {
    d - n * (2.0 * d.dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera {
        Camera {
            position: Vec3::new(1.0, 2.0, 3.0),
            look_at: Vec3::new(1.0, 2.0, -7.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vfov_deg: 40.0,
        }
    }

    #[test]
    fn centre_ray_is_the_forward_axis() {
        let r = camera_ray(&cam(), 65, 33, (32, 16), (0.5, 0.5));
        assert_eq!(r.dir, Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(r.origin, Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn corner_rays_are_symmetric() {
        let (w, h) = (64, 48);
        let a = camera_ray(&cam(), w, h, (0, 0), (0.0, 0.0)).dir;
        let b = camera_ray(&cam(), w, h, (w - 1, h - 1), (1.0, 1.0)).dir;
        assert!((a.x + b.x).abs() < 1e-6 && (a.y + b.y).abs() < 1e-6 && (a.z - b.z).abs() < 1e-6);
        // top-left looks left and up
        assert!(a.x < 0.0 && a.y > 0.0);
        // vertical half-angle is the fov
        let top = camera_ray(&cam(), w, h, (w / 2, 0), (0.0, 0.0)).dir;
        assert!((top.y.atan2(-top.z).to_degrees() - 20.0).abs() < 1e-4);
    }

    #[test]
    fn equirect_conventions() {
        assert_eq!(dir_to_equirect(Vec3::new(0.0, 1.0, 0.0)), (0.5, 0.0));
        assert_eq!(dir_to_equirect(Vec3::new(0.0, 0.0, -1.0)), (0.5, 0.5));
        let (u, v) = dir_to_equirect(Vec3::new(1.0, 0.0, 0.0));
        assert_eq!((u, v), (0.75, 0.5));
        let (u, _) = dir_to_equirect(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(u, 0.0);
        let (_, v) = dir_to_equirect(Vec3::new(0.0, -1.0, 0.0));
        assert!(v < 1.0);
    }

    #[test]
    fn equirect_round_trip() {
        for i in 0..10_000u32 {
            let d = uniform_sphere(((i as f32) + 0.5) / 10_000.0, (i as f32 * 0.618034).fract());
            if d.y.abs() >= 0.999 {
                continue;
            }
            let (u, v) = dir_to_equirect(d);
            let back = equirect_to_dir(u, v).cast::<f64>();
            let d = d.cast::<f64>();
            let angle = d.cross(back).length().atan2(d.dot(back));
            assert!(angle <= 1e-6, "{d:?} {back:?}");
        }
    }

    #[test]
    fn cosine_samples_lie_in_the_hemisphere() {
        let n = Vec3::new(0.3, -0.4, 0.5).normalized();
        for i in 0..1000 {
            let d = cosine_hemisphere(n, (i as f32 + 0.5) / 1000.0, (i as f32 * 0.7548777).fract());
            assert!(d.dot(n) >= 0.0);
            assert!((d.length() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn reflection_is_mirror_symmetric() {
        let r = reflect(Vec3::new(1.0, -1.0, 0.0).normalized(), Vec3::new(0.0, 1.0, 0.0));
        assert!((r - Vec3::new(1.0, 1.0, 0.0).normalized()).length() < 1e-7);
    }
}
