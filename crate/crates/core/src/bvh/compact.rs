use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::Vec3;
use crate::precision::{cast_not_lower, F16, F16_MAX};

use super::build::{BuildKind, Bvh2};

pub const COMPACT_NODE_BYTES: usize = 24;
pub const FLAT_NODE_BYTES: usize = 32;

/// Pointer-less BVH node with half-precision extents.
///
/// Byte layout (little-endian): `0..12` origin `f32 x3`, `12..18` extent
/// `f16 x3`, `18..22` second child or first primitive, `22..24` primitive
/// count. A count of zero marks an interior node whose first child is the
/// next node in the array.
#[derive(Clone, Copy, PartialEq)]
#[repr(C, packed(2))]
pub struct CompactNode {
    origin: [f32; 3],
    extent: [F16; 3],
    child_or_offset: u32,
    prim_count: u16,
}

const _: () = assert!(std::mem::size_of::<CompactNode>() == COMPACT_NODE_BYTES);

impl std::fmt::Debug for CompactNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (origin, extent, child, count) = (self.origin, self.extent, self.child_or_offset, self.prim_count);
        f.debug_struct("CompactNode")
            .field("origin", &origin)
            .field("extent", &extent.map(F16::to_f32))
            .field("child_or_offset", &child)
            .field("prim_count", &count)
            .finish()
    }
}

impl CompactNode {
    /// Encodes an exact `f32` box; the extent is rounded so that
    /// `origin + widen(extent)` is never below `bounds.max` in `f32`.
    pub fn encode(bounds: &Aabb, child_or_offset: u32, prim_count: u16) -> Result<Self> {
        let mut extent = [F16::ZERO; 3];
        for axis in 0..3 {
            let (lo, hi) = (bounds.min[axis], bounds.max[axis]);
            extent[axis] = cast_not_lower(upward_difference(lo, hi)?)?;
        }
        Ok(Self {
            origin: bounds.min.to_array(),
            extent,
            child_or_offset,
            prim_count,
        })
    }

    pub fn origin(&self) -> Vec3 {
        let o = self.origin;
        Vec3::from_array(o)
    }

    pub fn extent(&self) -> [F16; 3] {
        self.extent
    }

    /// Decoded box, widened to `f32` exactly as at intersection time.
    pub fn decoded_bounds(&self) -> Aabb {
        let o = self.origin();
        let e = self.extent;
        let max = Vec3::new(o.x + e[0].to_f32(), o.y + e[1].to_f32(), o.z + e[2].to_f32());
        Aabb::new(o, max)
    }

    pub fn child_or_offset(&self) -> u32 {
        self.child_or_offset
    }

    pub fn prim_count(&self) -> u16 {
        self.prim_count
    }

    pub fn is_leaf(&self) -> bool {
        self.prim_count != 0
    }

    pub fn to_bytes(&self) -> [u8; COMPACT_NODE_BYTES] {
        let mut b = [0u8; COMPACT_NODE_BYTES];
        let origin = self.origin;
        let extent = self.extent;
        for i in 0..3 {
            b[4 * i..4 * i + 4].copy_from_slice(&origin[i].to_le_bytes());
            b[12 + 2 * i..14 + 2 * i].copy_from_slice(&extent[i].to_bits().to_le_bytes());
        }
        b[18..22].copy_from_slice(&{ self.child_or_offset }.to_le_bytes());
        b[22..24].copy_from_slice(&{ self.prim_count }.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; COMPACT_NODE_BYTES]) -> Self {
        let f = |i: usize| f32::from_le_bytes(b[4 * i..4 * i + 4].try_into().unwrap());
        let h = |i: usize| F16::from_bits(u16::from_le_bytes(b[12 + 2 * i..14 + 2 * i].try_into().unwrap()));
        Self {
            origin: [f(0), f(1), f(2)],
            extent: [h(0), h(1), h(2)],
            child_or_offset: u32::from_le_bytes(b[18..22].try_into().unwrap()),
            prim_count: u16::from_le_bytes(b[22..24].try_into().unwrap()),
        }
    }
}

/// `hi - lo` rounded towards +inf in `f32`.
fn upward_difference(lo: f32, hi: f32) -> Result<f32> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Domain(format!("invalid box interval [{lo}, {hi}]")));
    }
    let exact = hi as f64 - lo as f64;
    if exact > F16_MAX as f64 {
        return Err(Error::Domain(format!(
            "box extent {exact} exceeds the half-precision range; rescale the scene"
        )));
    }
    let mut d = exact as f32;
    if (d as f64) < exact {
        d = f32::from_bits(d.to_bits() + 1);
    }
    Ok(d.min(F16_MAX))
}

/// Baseline node with full `f32` bounds (the layout the compact node replaces).
#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(C)]
pub struct FlatNode {
    pub min: [f32; 3],
    pub max: [f32; 3],
    pub child_or_offset: u32,
    pub prim_count: u16,
    pub axis: u8,
    _pad: u8,
}

const _: () = assert!(std::mem::size_of::<FlatNode>() == FLAT_NODE_BYTES);

impl FlatNode {
    pub fn bounds(&self) -> Aabb {
        Aabb::new(Vec3::from_array(self.min), Vec3::from_array(self.max))
    }
}

/// Depth-first pointer-less layout: `(bounds, second child or prim offset, prim count, axis)`.
fn depth_first(tree: &Bvh2) -> Vec<(Aabb, u32, u16, u8)> {
    fn visit(tree: &Bvh2, node: u32, out: &mut Vec<(Aabb, u32, u16, u8)>) -> u32 {
        let n = tree.nodes[node as usize];
        let idx = out.len();
        match n.kind {
            BuildKind::Leaf { first, count } => out.push((n.bounds, first, count as u16, 0)),
            BuildKind::Interior { left, right, axis } => {
                out.push((n.bounds, 0, 0, axis));
                visit(tree, left, out);
                let second = visit(tree, right, out);
                out[idx].1 = second;
            }
        }
        idx as u32
    }
    let mut out = Vec::with_capacity(tree.nodes.len());
    visit(tree, tree.root, &mut out);
    out
}

/// Compacts a BVH-2 into 24-byte nodes with conservative `f16` extents.
pub fn compact(tree: &Bvh2) -> Result<Vec<CompactNode>> {
    depth_first(tree)
        .into_iter()
        .map(|(bounds, link, count, _)| CompactNode::encode(&bounds, link, count))
        .collect()
}

/// Same topology as [`compact`] with exact `f32` bounds.
pub fn flatten_f32(tree: &Bvh2) -> Vec<FlatNode> {
    depth_first(tree)
        .into_iter()
        .map(|(b, link, count, axis)| FlatNode {
            min: b.min.to_array(),
            max: b.max.to_array(),
            child_or_offset: link,
            prim_count: count,
            axis,
            _pad: 0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::build_bvh2;
    use crate::rng::{rng_uniform, RngKey};

    #[test]
    fn exactly_representable_extent_round_trips() {
        let b = Aabb::new(Vec3::new(1.5, -2.0, 0.0), Vec3::new(3.5, 2.0, 0.25));
        let n = CompactNode::encode(&b, 7, 1).unwrap();
        assert_eq!(n.decoded_bounds(), b);
    }

    #[test]
    fn byte_layout_is_fixed() {
        let b = Aabb::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(2.0, 4.0, 7.0));
        let n = CompactNode::encode(&b, 0x0102_0304, 0x0506).unwrap();
        let bytes = n.to_bytes();
        assert_eq!(&bytes[0..4], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3.0f32.to_le_bytes());
        // f16 1.0 = 0x3c00, 2.0 = 0x4000, 4.0 = 0x4400
        assert_eq!(&bytes[12..18], &[0x00, 0x3c, 0x00, 0x40, 0x00, 0x44]);
        assert_eq!(&bytes[18..22], &[0x04, 0x03, 0x02, 0x01]);
        assert_eq!(&bytes[22..24], &[0x06, 0x05]);
        assert_eq!(CompactNode::from_bytes(&bytes), n);
    }

    #[test]
    fn oversized_extent_is_a_domain_error() {
        let b = Aabb::new(Vec3::zero(), Vec3::new(70000.0, 1.0, 1.0));
        assert!(matches!(CompactNode::encode(&b, 0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn random_boxes_decode_conservatively_within_one_ulp() {
        let key = RngKey::new(0, 0, 0, 17);
        let mut draw = 0u32;
        let mut u = || {
            draw += 1;
            rng_uniform(key, draw)
        };
        for _ in 0..10_000 {
            let scale = 10f32.powf(u() * 6.0 - 3.0);
            let min = Vec3::new(u() - 0.5, u() - 0.5, u() - 0.5) * (scale * 50.0);
            let ext = Vec3::new(u(), u(), u()) * scale;
            let exact = Aabb::new(min, min + ext);
            let node = CompactNode::encode(&exact, 0, 1).unwrap();
            let dec = node.decoded_bounds();
            assert!(dec.contains_box(&exact), "{exact:?} vs {dec:?}");
            for axis in 0..3 {
                let e = node.extent()[axis];
                let exact_ext = exact.max[axis] as f64 - exact.min[axis] as f64;
                assert!(e.to_f32() as f64 >= exact_ext);
                if e.to_bits() > 0 {
                    let below = F16::from_bits(e.to_bits() - 1).to_f32() as f64;
                    // nearest lattice value not below: at most one f16 ulp over
                    assert!(below < exact_ext);
                }
            }
        }
    }

    #[test]
    fn compact_array_is_three_quarters_of_flat() {
        let boxes: Vec<Aabb> = (0..100)
            .map(|i| {
                let c = Vec3::new(i as f32, (i % 7) as f32, (i % 3) as f32);
                Aabb::new(c, c + Vec3::splat(0.5))
            })
            .collect();
        let tree = build_bvh2(&boxes, 1).unwrap();
        let c = compact(&tree).unwrap();
        let f = flatten_f32(&tree);
        assert_eq!(c.len(), tree.nodes.len());
        assert_eq!(f.len(), c.len());
        let cb = c.len() * std::mem::size_of::<CompactNode>();
        let fb = f.len() * std::mem::size_of::<FlatNode>();
        assert_eq!(cb * 4, fb * 3);
        // first child adjacent; second child in range
        for (i, n) in c.iter().enumerate() {
            if !n.is_leaf() {
                assert!((n.child_or_offset() as usize) > i + 1);
                assert!((n.child_or_offset() as usize) < c.len());
            }
        }
    }
}
