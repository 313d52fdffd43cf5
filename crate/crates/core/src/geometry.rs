//! Ray, bounding box and primitive intersection kernels.
//!
//! The triangle test is the watertight algorithm from PBRT-v3 including its
//! conservative `t` error bound; both kernels are generic so the AOV oracle
//! can run them at `f64`.

use serde::{Deserialize, Serialize};

use crate::math::{Real, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T = f32> {
    pub origin: Vector3<T>,
    /// Unit direction.
    pub dir: Vector3<T>,
    pub t_min: T,
    pub t_max: T,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vector3<T>, dir: Vector3<T>) -> Self {
        Self {
            origin,
            dir,
            t_min: T::zero(),
            t_max: T::infinity(),
        }
    }

    pub fn with_range(mut self, t_min: T, t_max: T) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn at(&self, t: T) -> Vector3<T> {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T = f32> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Real> Aabb<T> {
    /// The empty box; the identity for [`Aabb::union`].
    pub fn empty() -> Self {
        Self {
            min: Vector3::splat(T::infinity()),
            max: Vector3::splat(T::neg_infinity()),
        }
    }

    pub fn new(min: Vector3<T>, max: Vector3<T>) -> Self {
        Self { min, max }
    }

    pub fn from_points(points: &[Vector3<T>]) -> Self {
        points.iter().fold(Self::empty(), |b, &p| b.grow(p))
    }

    pub fn grow(self, p: Vector3<T>) -> Self {
        Self::new(self.min.min(p), self.max.max(p))
    }

    pub fn union(self, o: Self) -> Self {
        Self::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vector3<T> {
        self.max - self.min
    }

    pub fn centroid(&self) -> Vector3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn surface_area(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let d = self.extent();
        T::lit(2.0) * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn contains_box(&self, o: &Self) -> bool {
        self.min.x <= o.min.x
            && self.min.y <= o.min.y
            && self.min.z <= o.min.z
            && self.max.x >= o.max.x
            && self.max.y >= o.max.y
            && self.max.z >= o.max.z
    }
}

/// Barycentrics and distance of a triangle hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleHit<T> {
    pub t: T,
    pub b0: T,
    pub b1: T,
    pub b2: T,
}

/// Watertight ray/triangle test. Accepts hits with `t_min < t <= t_max`.
pub fn intersect_triangle<T: Real>(
    ray: &Ray<T>,
    p0: Vector3<T>,
    p1: Vector3<T>,
    p2: Vector3<T>,
) -> Option<TriangleHit<T>> {
    let zero = T::zero();

    let mut p0t = p0 - ray.origin;
    let mut p1t = p1 - ray.origin;
    let mut p2t = p2 - ray.origin;

    let kz = ray.dir.abs().max_dimension();
    let kx = (kz + 1) % 3;
    let ky = (kx + 1) % 3;
    let d = ray.dir.permute(kx, ky, kz);
    p0t = p0t.permute(kx, ky, kz);
    p1t = p1t.permute(kx, ky, kz);
    p2t = p2t.permute(kx, ky, kz);

    let sx = -d.x / d.z;
    let sy = -d.y / d.z;
    let sz = T::one() / d.z;
    p0t.x = p0t.x + sx * p0t.z;
    p0t.y = p0t.y + sy * p0t.z;
    p1t.x = p1t.x + sx * p1t.z;
    p1t.y = p1t.y + sy * p1t.z;
    p2t.x = p2t.x + sx * p2t.z;
    p2t.y = p2t.y + sy * p2t.z;

    let mut e0 = p1t.x * p2t.y - p1t.y * p2t.x;
    let mut e1 = p2t.x * p0t.y - p2t.y * p0t.x;
    let mut e2 = p0t.x * p1t.y - p0t.y * p1t.x;

    // Edge functions that round to exactly zero are recomputed in double.
    if T::is_single() && (e0 == zero || e1 == zero || e2 == zero) {
        let f = |v: T| v.to_f64().unwrap();
        let edge = |ax: T, ay: T, bx: T, by: T| T::lit(f(ay) * f(bx) - f(ax) * f(by));
        e0 = edge(p2t.x, p2t.y, p1t.x, p1t.y);
        e1 = edge(p0t.x, p0t.y, p2t.x, p2t.y);
        e2 = edge(p1t.x, p1t.y, p0t.x, p0t.y);
    }

    if (e0 < zero || e1 < zero || e2 < zero) && (e0 > zero || e1 > zero || e2 > zero) {
        return None;
    }
    let det = e0 + e1 + e2;
    if det == zero {
        return None;
    }

    p0t.z = p0t.z * sz;
    p1t.z = p1t.z * sz;
    p2t.z = p2t.z * sz;
    let t_scaled = e0 * p0t.z + e1 * p1t.z + e2 * p2t.z;
    if det < zero && (t_scaled >= zero || t_scaled < ray.t_max * det) {
        return None;
    }
    if det > zero && (t_scaled <= zero || t_scaled > ray.t_max * det) {
        return None;
    }

    let inv_det = T::one() / det;
    let b0 = e0 * inv_det;
    let b1 = e1 * inv_det;
    let b2 = e2 * inv_det;
    let t = t_scaled * inv_det;

    // Reject hits whose t cannot be distinguished from zero.
    let max_zt = Vector3::new(p0t.z, p1t.z, p2t.z).abs().max_component();
    let delta_z = T::err_gamma(3) * max_zt;
    let max_xt = Vector3::new(p0t.x, p1t.x, p2t.x).abs().max_component();
    let max_yt = Vector3::new(p0t.y, p1t.y, p2t.y).abs().max_component();
    let delta_x = T::err_gamma(5) * (max_xt + max_zt);
    let delta_y = T::err_gamma(5) * (max_yt + max_zt);
    let delta_e = T::lit(2.0) * (T::err_gamma(2) * max_xt * max_yt + delta_y * max_xt + delta_x * max_yt);
    let max_e = Vector3::new(e0, e1, e2).abs().max_component();
    let delta_t =
        T::lit(3.0) * (T::err_gamma(3) * max_e * max_zt + delta_e * max_zt + delta_z * max_e) * inv_det.abs();
    if t <= delta_t || t <= ray.t_min {
        return None;
    }

    Some(TriangleHit { t, b0, b1, b2 })
}

/// Unit geometric normal following the vertex winding.
pub fn triangle_normal<T: Real>(p0: Vector3<T>, p1: Vector3<T>, p2: Vector3<T>) -> Vector3<T> {
    (p1 - p0).cross(p2 - p0).normalized()
}

/// Nearest sphere hit in `(t_min, t_max]`, using the cancellation-free
/// discriminant `r^2 - |oc - (oc.d) d|^2`.
pub fn intersect_sphere<T: Real>(ray: &Ray<T>, centre: Vector3<T>, radius: T) -> Option<T> {
    let oc = ray.origin - centre;
    let b = oc.dot(ray.dir);
    let c = oc.dot(oc) - radius * radius;
    let f = oc - ray.dir * b;
    let disc = radius * radius - f.dot(f);
    if disc < T::zero() {
        return None;
    }
    let root = disc.sqrt();
    let q = if b >= T::zero() { -b - root } else { -b + root };
    if q == T::zero() {
        return None;
    }
    let (mut t0, mut t1) = (c / q, q);
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    if t0 > ray.t_min && t0 <= ray.t_max {
        Some(t0)
    } else if t1 > ray.t_min && t1 <= ray.t_max {
        Some(t1)
    } else {
        None
    }
}
