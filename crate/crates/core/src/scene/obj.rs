//! Minimal Wavefront OBJ reader: positions and polygonal faces.

use std::path::Path;

use super::{Camera, Material, Scene, Triangle};
use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vec3>,
    /// Fan-triangulated faces.
    pub faces: Vec<[u32; 3]>,
    /// Per-face geometric normals (OBJ `vn` records are not used).
    pub face_normals: Vec<Vec3>,
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<ObjMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

pub fn parse_obj(text: &str) -> Result<ObjMesh> {
    let mut mesh = ObjMesh::default();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut c = [0.0f32; 3];
                for slot in &mut c {
                    let tok = fields.next().ok_or_else(|| err("vertex needs three coordinates".into()))?;
                    *slot = tok
                        .parse::<f32>()
                        .map_err(|_| err(format!("invalid coordinate '{tok}'")))?;
                    if !slot.is_finite() {
                        return Err(err(format!("non-finite coordinate '{tok}'")));
                    }
                }
                mesh.vertices.push(Vec3::from_array(c));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for tok in fields {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| err(format!("invalid face index '{tok}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        mesh.vertices.len() as i64 + i
                    } else {
                        return Err(err("face index 0 is not valid".into()));
                    };
                    if resolved < 0 || resolved >= mesh.vertices.len() as i64 {
                        return Err(err(format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    let f = [idx[0], idx[k], idx[k + 1]];
                    let [a, b, c] = f.map(|i| mesh.vertices[i as usize]);
                    let cross = (b - a).cross(c - a);
                    let normal = if cross.length() > 0.0 { cross.normalized() } else { Vec3::zero() };
                    mesh.faces.push(f);
                    mesh.face_normals.push(normal);
                }
            }
            // vt, vn, o, g, s, usemtl, mtllib and blank lines carry nothing we use.
            _ => {}
        }
    }
    Ok(mesh)
}

impl ObjMesh {
    /// Wraps the mesh in a scene with one grey diffuse material and a
    /// camera framing its bounds from +z.
    pub fn into_scene(self) -> Result<Scene> {
        let triangles = self
            .faces
            .iter()
            .filter(|f| !(f[0] == f[1] && f[1] == f[2]))
            .map(|&v| Triangle { v, material: 0 })
            .collect();
        let bounds = crate::geometry::Aabb::from_points(&self.vertices);
        let camera = if bounds.is_empty() {
            Camera::default()
        } else {
            let c = bounds.centroid();
            let r = bounds.extent().length().max(1e-3) * 0.5;
            let dist = r / (20.0f32.to_radians()).tan() * 1.1;
            Camera {
                position: c + Vec3::new(0.0, 0.0, dist + r),
                look_at: c,
                up: Vec3::new(0.0, 1.0, 0.0),
                vfov_deg: 40.0,
            }
        };
        Scene::new(
            self.vertices,
            triangles,
            vec![],
            vec![Material::diffuse(Rgb::splat(0.7))],
            camera,
        )
    }
}
