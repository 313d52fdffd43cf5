//! `.sblob` container: every scene buffer in one little-endian chunk.
//!
//! ```text
//! 0..8     magic "SBLOB\0\0\x01" (last byte is the format version)
//! 8..104   6 x (offset: u64, length: u64) for
//!          nodes, vertices, indices, spheres, materials, camera
//! 104..    raw buffers
//! ```

use super::{Camera, Material, MaterialKind, Scene, Sphere, Triangle};
use crate::bvh::{CompactNode, COMPACT_NODE_BYTES};
use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};

pub const BLOB_MAGIC: [u8; 8] = *b"SBLOB\0\0\x01";
pub const BUFFER_COUNT: usize = 6;
pub const HEADER_BYTES: usize = 8 + BUFFER_COUNT * 16;

const VERTEX_BYTES: usize = 12;
const TRIANGLE_BYTES: usize = 16;
const SPHERE_BYTES: usize = 20;
const MATERIAL_BYTES: usize = 32;
const CAMERA_BYTES: usize = 40;

const RECORD_BYTES: [usize; BUFFER_COUNT] = [
    COMPACT_NODE_BYTES,
    VERTEX_BYTES,
    TRIANGLE_BYTES,
    SPHERE_BYTES,
    MATERIAL_BYTES,
    CAMERA_BYTES,
];
const BUFFER_NAMES: [&str; BUFFER_COUNT] = ["nodes", "vertices", "indices", "spheres", "materials", "camera"];

struct Writer(Vec<u8>);

impl Writer {
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn vec3(&mut self, v: Vec3) {
        self.f32(v.x);
        self.f32(v.y);
        self.f32(v.z);
    }
    fn rgb(&mut self, c: Rgb) {
        self.f32(c.r);
        self.f32(c.g);
        self.f32(c.b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn vec3(&mut self) -> Vec3 {
        Vec3::new(self.f32(), self.f32(), self.f32())
    }
    fn rgb(&mut self) -> Rgb {
        Rgb::new(self.f32(), self.f32(), self.f32())
    }
}

pub fn serialize(scene: &Scene) -> Vec<u8> {
    let mut buffers: [Writer; BUFFER_COUNT] = std::array::from_fn(|_| Writer(Vec::new()));
    for n in &scene.nodes {
        buffers[0].0.extend_from_slice(&n.to_bytes());
    }
    for &v in &scene.vertices {
        buffers[1].vec3(v);
    }
    for t in &scene.triangles {
        for i in t.v {
            buffers[2].u32(i);
        }
        buffers[2].u32(t.material);
    }
    for s in &scene.spheres {
        buffers[3].vec3(s.centre);
        buffers[3].f32(s.radius);
        buffers[3].u32(s.material);
    }
    for m in &scene.materials {
        let w = &mut buffers[4];
        w.u32(m.kind.code());
        w.rgb(m.albedo);
        w.rgb(m.emission);
        w.f32(m.ior);
    }
    let cam = &scene.camera;
    buffers[5].vec3(cam.position);
    buffers[5].vec3(cam.look_at);
    buffers[5].vec3(cam.up);
    buffers[5].f32(cam.vfov_deg);

    let mut out = Vec::with_capacity(HEADER_BYTES + buffers.iter().map(|b| b.0.len()).sum::<usize>());
    out.extend_from_slice(&BLOB_MAGIC);
    let mut offset = HEADER_BYTES as u64;
    for b in &buffers {
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(&(b.0.len() as u64).to_le_bytes());
        offset += b.0.len() as u64;
    }
    for b in &buffers {
        out.extend_from_slice(&b.0);
    }
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<Scene> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Format(format!(
            "scene blob is {} bytes, shorter than its {HEADER_BYTES}-byte header",
            bytes.len()
        )));
    }
    if bytes[..5] != BLOB_MAGIC[..5] {
        return Err(Error::Format("bad scene blob magic".into()));
    }
    if bytes[5..8] != BLOB_MAGIC[5..8] {
        return Err(Error::Format(format!("unsupported scene blob version {:?}", &bytes[5..8])));
    }
    let mut header = Reader::new(&bytes[8..HEADER_BYTES]);
    let mut ranges = [(0usize, 0usize); BUFFER_COUNT];
    for (i, r) in ranges.iter_mut().enumerate() {
        let off = u64::from_le_bytes(header.take());
        let len = u64::from_le_bytes(header.take());
        let end = off
            .checked_add(len)
            .filter(|&e| off >= HEADER_BYTES as u64 && e <= bytes.len() as u64)
            .ok_or_else(|| Error::Format(format!("{} buffer [{off}, +{len}) is out of bounds", BUFFER_NAMES[i])))?;
        if !len.is_multiple_of(RECORD_BYTES[i] as u64) {
            return Err(Error::Format(format!(
                "{} buffer length {len} is not a multiple of {}",
                BUFFER_NAMES[i], RECORD_BYTES[i]
            )));
        }
        *r = (off as usize, end as usize);
    }
    if ranges[5].1 - ranges[5].0 != CAMERA_BYTES {
        return Err(Error::Format("camera buffer must hold exactly one camera".into()));
    }
    let mut sorted = ranges;
    sorted.sort();
    if sorted.windows(2).any(|w| w[0].1 > w[1].0) {
        return Err(Error::Format("scene blob buffers overlap".into()));
    }

    let slice = |i: usize| &bytes[ranges[i].0..ranges[i].1];
    let nodes = slice(0)
        .chunks_exact(COMPACT_NODE_BYTES)
        .map(|c| CompactNode::from_bytes(c.try_into().unwrap()))
        .collect();
    let vertices = slice(1).chunks_exact(VERTEX_BYTES).map(|c| Reader::new(c).vec3()).collect();
    let triangles = slice(2)
        .chunks_exact(TRIANGLE_BYTES)
        .map(|c| {
            let mut r = Reader::new(c);
            Triangle {
                v: [r.u32(), r.u32(), r.u32()],
                material: r.u32(),
            }
        })
        .collect();
    let spheres = slice(3)
        .chunks_exact(SPHERE_BYTES)
        .map(|c| {
            let mut r = Reader::new(c);
            Sphere {
                centre: r.vec3(),
                radius: r.f32(),
                material: r.u32(),
            }
        })
        .collect();
    let materials = slice(4)
        .chunks_exact(MATERIAL_BYTES)
        .map(|c| {
            let mut r = Reader::new(c);
            let code = r.u32();
            let kind = MaterialKind::from_code(code)
                .ok_or_else(|| Error::Format(format!("unknown material kind {code}")))?;
            Ok(Material {
                kind,
                albedo: r.rgb(),
                emission: r.rgb(),
                ior: r.f32(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Reader::new(slice(5));
    let camera = Camera {
        position: r.vec3(),
        look_at: r.vec3(),
        up: r.vec3(),
        vfov_deg: r.f32(),
    };
    Scene::from_parts(vertices, triangles, spheres, materials, nodes, camera).map_err(|e| match e {
        Error::Format(m) => Error::Format(m),
        other => Error::Format(format!("scene blob content is invalid: {other}")),
    })
}
