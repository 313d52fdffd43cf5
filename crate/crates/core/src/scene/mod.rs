//! Scene description: triangles in a compact BVH, a handful of analytic
//! spheres tested linearly, materials and a pinhole camera.

mod blob;
mod builtin;
mod obj;

pub use blob::{deserialize, serialize, BLOB_MAGIC, BUFFER_COUNT, HEADER_BYTES};
pub use builtin::{builtin_scene, BuiltinScene};
pub use obj::{load_obj, parse_obj, ObjMesh};

use serde::{Deserialize, Serialize};

use crate::bvh::{self, CompactNode, Link, NodeArray, TraversalStats, TriangleSource};
use crate::error::{Error, Result};
use crate::geometry::{intersect_sphere, Aabb, Ray};
use crate::math::{Rgb, Vec3};
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub v: [u32; 3],
    pub material: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub centre: Vec3,
    pub radius: f32,
    pub material: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Diffuse,
    Mirror,
    Dielectric,
    Emissive,
}

impl MaterialKind {
    pub(crate) fn code(self) -> u32 {
        match self {
            MaterialKind::Diffuse => 0,
            MaterialKind::Mirror => 1,
            MaterialKind::Dielectric => 2,
            MaterialKind::Emissive => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => MaterialKind::Diffuse,
            1 => MaterialKind::Mirror,
            2 => MaterialKind::Dielectric,
            3 => MaterialKind::Emissive,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub kind: MaterialKind,
    pub albedo: Rgb,
    pub emission: Rgb,
    pub ior: f32,
}

impl Material {
    pub fn diffuse(albedo: Rgb) -> Self {
        Self {
            kind: MaterialKind::Diffuse,
            albedo,
            emission: Rgb::BLACK,
            ior: 1.0,
        }
    }

    pub fn mirror(albedo: Rgb) -> Self {
        Self {
            kind: MaterialKind::Mirror,
            ..Self::diffuse(albedo)
        }
    }

    pub fn dielectric(ior: f32) -> Self {
        Self {
            kind: MaterialKind::Dielectric,
            albedo: Rgb::WHITE,
            emission: Rgb::BLACK,
            ior,
        }
    }

    pub fn emissive(emission: Rgb) -> Self {
        Self {
            kind: MaterialKind::Emissive,
            albedo: Rgb::BLACK,
            emission,
            ior: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |c: f32| (0.0..=1.0).contains(&c);
        let albedo_ok = self.albedo.to_array().into_iter().all(unit);
        let emission_ok = self.emission.is_finite() && self.emission.to_array().into_iter().all(|c| c >= 0.0);
        let ok = match self.kind {
            MaterialKind::Diffuse | MaterialKind::Mirror => albedo_ok,
            MaterialKind::Dielectric => self.ior.is_finite() && self.ior > 1.0,
            MaterialKind::Emissive => emission_ok,
        };
        if ok && albedo_ok && emission_ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("inconsistent material {self:?}")))
        }
    }
}

/// Pinhole camera, right-handed, vertical field of view in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub vfov_deg: f32,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 0.0),
            look_at: Vec3::new(0.0, 0.0, -1.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vfov_deg: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimRef {
    Triangle(u32),
    Sphere(u32),
}

/// Closest surface interaction along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub t: f32,
    pub prim: PrimRef,
    pub point: Vec3,
    /// Unit geometric normal: triangle winding, or outward for spheres.
    pub normal: Vec3,
    pub material: u32,
}

/// Immutable scene. Triangles are stored in BVH leaf order, so leaf
/// primitive offsets index `triangles` directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<Triangle>,
    pub spheres: Vec<Sphere>,
    pub materials: Vec<Material>,
    pub nodes: Vec<CompactNode>,
    pub camera: Camera,
}

impl TriangleSource for Scene {
    fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    fn triangle(&self, prim: u32) -> [Vec3; 3] {
        let t = &self.triangles[prim as usize];
        t.v.map(|i| self.vertices[i as usize])
    }
}

impl Scene {
    /// Builds the BVH over `triangles` and reorders them into leaf order.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<Triangle>,
        spheres: Vec<Sphere>,
        materials: Vec<Material>,
        camera: Camera,
    ) -> Result<Self> {
        validate_primitives(&vertices, &triangles, &spheres, &materials)?;
        let (nodes, triangles) = if triangles.is_empty() {
            (Vec::new(), triangles)
        } else {
            let bounds: Vec<Aabb> = triangles
                .iter()
                .map(|t| Aabb::from_points(&t.v.map(|i| vertices[i as usize])))
                .collect();
            let tree = bvh::build_bvh2(&bounds, 1)?;
            let nodes = bvh::compact(&tree)?;
            let ordered = tree.prim_order.iter().map(|&i| triangles[i as usize]).collect();
            (nodes, ordered)
        };
        Ok(Self {
            vertices,
            triangles,
            spheres,
            materials,
            nodes,
            camera,
        })
    }

    /// Reassembles a scene from already-built buffers, checking structure.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        triangles: Vec<Triangle>,
        spheres: Vec<Sphere>,
        materials: Vec<Material>,
        nodes: Vec<CompactNode>,
        camera: Camera,
    ) -> Result<Self> {
        validate_primitives(&vertices, &triangles, &spheres, &materials)?;
        validate_nodes(&nodes, triangles.len())?;
        Ok(Self {
            vertices,
            triangles,
            spheres,
            materials,
            nodes,
            camera,
        })
    }

    /// Empty scene (camera only); every ray escapes.
    pub fn empty(camera: Camera) -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            spheres: Vec::new(),
            materials: Vec::new(),
            nodes: Vec::new(),
            camera,
        }
    }

    pub fn bounds(&self) -> Aabb {
        let tris = Aabb::from_points(&self.vertices);
        self.spheres.iter().fold(tris, |b, s| {
            b.union(Aabb::new(s.centre - Vec3::splat(s.radius), s.centre + Vec3::splat(s.radius)))
        })
    }

    /// Offset for secondary rays: `1e-3` of the largest scene extent.
    pub fn ray_epsilon(&self) -> f32 {
        let b = self.bounds();
        if b.is_empty() {
            return 1e-3;
        }
        let e = b.extent().max_component();
        if e > 0.0 {
            1e-3 * e
        } else {
            1e-3
        }
    }

    pub fn bvh_bytes(&self) -> usize {
        self.nodes.len() * bvh::COMPACT_NODE_BYTES
    }

    pub fn intersect(&self, ray: &Ray) -> Option<SurfaceHit> {
        self.intersect_counted(ray, &mut TraversalStats::default())
    }

    pub fn intersect_counted(&self, ray: &Ray, stats: &mut TraversalStats) -> Option<SurfaceHit> {
        let tri = bvh::traverse_counted(ray, self.nodes.as_slice(), self, stats);
        self.resolve(ray, tri)
    }

    /// Same contract as [`Scene::intersect`] without the BVH.
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<SurfaceHit> {
        let tri = bvh::brute_force(ray, self);
        self.resolve(ray, tri)
    }

    /// Merges the triangle result with the linearly tested spheres. Exact
    /// ties go to the triangle, then to the lower sphere index.
    fn resolve(&self, ray: &Ray, tri: Option<bvh::Hit>) -> Option<SurfaceHit> {
        let mut best = tri.map(|h| SurfaceHit {
            t: h.t,
            prim: PrimRef::Triangle(h.prim_index),
            point: h.hit_point,
            normal: h.normal,
            material: self.triangles[h.prim_index as usize].material,
        });
        for (i, s) in self.spheres.iter().enumerate() {
            let t_max = best.map_or(ray.t_max, |b| b.t);
            let r = ray.with_range(ray.t_min, t_max);
            if let Some(t) = intersect_sphere(&r, s.centre, s.radius) {
                if best.is_none_or(|b| t < b.t) {
                    let point = ray.at(t);
                    best = Some(SurfaceHit {
                        t,
                        prim: PrimRef::Sphere(i as u32),
                        point,
                        normal: ((point - s.centre) / s.radius).normalized(),
                        material: s.material,
                    });
                }
            }
        }
        best
    }

    /// Sampled consistency check: `rays` random rays through the scene
    /// bounds must give identical BVH and brute-force results.
    pub fn audit(&self, rays: u32, seed: u64) -> Result<()> {
        validate_nodes(&self.nodes, self.triangles.len())?;
        let b = self.bounds();
        if b.is_empty() {
            return Ok(());
        }
        let key = RngKey::new(0, 0, 0, seed);
        for i in 0..rays {
            let u = |k: u32| key.uniform(6 * i + k);
            let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;
            let o = Vec3::new(
                lerp(b.min.x, b.max.x, u(0)),
                lerp(b.min.y, b.max.y, u(1)),
                lerp(b.min.z, b.max.z, u(2)),
            );
            let d = crate::integrator::uniform_sphere(u(3), u(4));
            let ray = Ray::new(o, d);
            if self.intersect(&ray) != self.intersect_brute_force(&ray) {
                return Err(Error::Format(format!("BVH audit failed on ray {i}")));
            }
        }
        Ok(())
    }
}

fn validate_primitives(vertices: &[Vec3], triangles: &[Triangle], spheres: &[Sphere], materials: &[Material]) -> Result<()> {
    for (i, v) in vertices.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!("vertex {i} is not finite")));
        }
    }
    for m in materials {
        m.validate()?;
    }
    let nm = materials.len() as u32;
    for (i, t) in triangles.iter().enumerate() {
        if t.v.iter().any(|&v| v as usize >= vertices.len()) {
            return Err(Error::Domain(format!("triangle {i} references a missing vertex")));
        }
        if t.v[0] == t.v[1] && t.v[1] == t.v[2] {
            return Err(Error::Domain(format!("triangle {i} repeats one vertex three times")));
        }
        if t.material >= nm {
            return Err(Error::Domain(format!("triangle {i} references missing material {}", t.material)));
        }
    }
    for (i, s) in spheres.iter().enumerate() {
        if !(s.centre.is_finite() && s.radius.is_finite() && s.radius > 0.0) {
            return Err(Error::Domain(format!("sphere {i} is invalid")));
        }
        if s.material >= nm {
            return Err(Error::Domain(format!("sphere {i} references missing material {}", s.material)));
        }
    }
    Ok(())
}

/// Checks links are in range and every triangle sits in exactly one leaf.
fn validate_nodes(nodes: &[CompactNode], triangle_count: usize) -> Result<()> {
    if nodes.is_empty() {
        return if triangle_count == 0 {
            Ok(())
        } else {
            Err(Error::Format("triangles present but BVH is empty".into()))
        };
    }
    let mut seen = vec![false; triangle_count];
    let mut visited = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if i >= nodes.len() || visited[i] {
            return Err(Error::Format(format!("BVH link to node {i} is invalid")));
        }
        visited[i] = true;
        match nodes.link(i) {
            Link::Leaf { first, count } => {
                let end = first as usize + count as usize;
                if end > triangle_count {
                    return Err(Error::Format(format!("leaf {i} references primitives past the end")));
                }
                for s in &mut seen[first as usize..end] {
                    if *s {
                        return Err(Error::Format(format!("leaf {i} repeats a primitive")));
                    }
                    *s = true;
                }
            }
            Link::Interior { second } => {
                if second as usize <= i + 1 {
                    return Err(Error::Format(format!("node {i} has a backward child link")));
                }
                stack.push(second as usize);
                stack.push(i + 1);
            }
        }
    }
    if !seen.iter().all(|&s| s) || !visited.iter().all(|&v| v) {
        return Err(Error::Format("BVH does not cover every primitive and node".into()));
    }
    Ok(())
}
