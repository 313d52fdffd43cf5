use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::Vec3;

pub const SAH_BINS: usize = 16;

/// Relative cost of one node traversal step versus one primitive test.
const TRAVERSAL_COST: f32 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuildKind {
    /// `first` indexes into [`Bvh2::prim_order`].
    Leaf { first: u32, count: u32 },
    Interior { left: u32, right: u32, axis: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildNode {
    pub bounds: Aabb,
    pub kind: BuildKind,
}

/// Pointer-based BVH-2 as produced by the builder.
#[derive(Debug, Clone)]
pub struct Bvh2 {
    pub nodes: Vec<BuildNode>,
    pub root: u32,
    /// Leaf slot -> original primitive index.
    pub prim_order: Vec<u32>,
    pub max_leaf_size: u32,
}

impl Bvh2 {
    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, BuildKind::Leaf { .. }))
            .count()
    }
}

struct PrimInfo {
    index: u32,
    bounds: Aabb,
    centroid: Vec3,
}

/// Binned-SAH build over primitive bounding boxes.
pub fn build_bvh2(prim_bounds: &[Aabb], max_leaf_size: u32) -> Result<Bvh2> {
    if prim_bounds.is_empty() {
        return Err(Error::Domain("cannot build a BVH over zero primitives".into()));
    }
    if max_leaf_size == 0 || max_leaf_size > u16::MAX as u32 {
        return Err(Error::Domain(format!("max_leaf_size {max_leaf_size} outside 1..=65535")));
    }
    for (i, b) in prim_bounds.iter().enumerate() {
        if !b.min.is_finite() || !b.max.is_finite() || b.is_empty() {
            return Err(Error::Domain(format!("primitive {i} has invalid bounds")));
        }
    }
    let mut prims: Vec<PrimInfo> = prim_bounds
        .iter()
        .enumerate()
        .map(|(i, b)| PrimInfo {
            index: i as u32,
            bounds: *b,
            centroid: b.centroid(),
        })
        .collect();
    let mut nodes = Vec::with_capacity(2 * prims.len());
    let len = prims.len();
    let root = build_range(&mut prims, 0, len, max_leaf_size, &mut nodes);
    Ok(Bvh2 {
        nodes,
        root,
        prim_order: prims.iter().map(|p| p.index).collect(),
        max_leaf_size,
    })
}

fn build_range(prims: &mut [PrimInfo], start: usize, end: usize, max_leaf: u32, nodes: &mut Vec<BuildNode>) -> u32 {
    let slice = &mut prims[start..end];
    let bounds = slice.iter().fold(Aabb::empty(), |b, p| b.union(p.bounds));
    let count = slice.len();

    let make_leaf = |nodes: &mut Vec<BuildNode>| {
        nodes.push(BuildNode {
            bounds,
            kind: BuildKind::Leaf {
                first: start as u32,
                count: count as u32,
            },
        });
        (nodes.len() - 1) as u32
    };
    if count == 1 {
        return make_leaf(nodes);
    }

    let (mid, axis) = match best_sah_split(slice, &bounds) {
        Some(split) => {
            if count <= max_leaf as usize && split.cost >= count as f32 {
                return make_leaf(nodes);
            }
            let mid = partition(slice, |p| split.bin_of(p.centroid) <= split.bin);
            (mid, split.axis)
        }
        None => {
            // All centroids coincide: any split is as good as another.
            if count <= max_leaf as usize {
                return make_leaf(nodes);
            }
            (count / 2, 0)
        }
    };

    let left = build_range(prims, start, start + mid, max_leaf, nodes);
    let right = build_range(prims, start + mid, end, max_leaf, nodes);
    nodes.push(BuildNode {
        bounds,
        kind: BuildKind::Interior {
            left,
            right,
            axis: axis as u8,
        },
    });
    (nodes.len() - 1) as u32
}

struct Split {
    axis: usize,
    bin: usize,
    cost: f32,
    lo: f32,
    scale: f32,
}

impl Split {
    fn bin_of(&self, c: Vec3) -> usize {
        bin_index(c[self.axis], self.lo, self.scale)
    }
}

fn bin_index(c: f32, lo: f32, scale: f32) -> usize {
    (((c - lo) * scale) as usize).min(SAH_BINS - 1)
}

/// Cheapest binned split over all three axes; `None` when the centroid
/// bounds are a single point.
fn best_sah_split(prims: &[PrimInfo], bounds: &Aabb) -> Option<Split> {
    let cb = prims.iter().fold(Aabb::empty(), |b, p| b.grow(p.centroid));
    let inv_area = 1.0 / bounds.surface_area().max(f32::MIN_POSITIVE);
    let mut best: Option<Split> = None;
    for axis in 0..3 {
        let (lo, hi) = (cb.min[axis], cb.max[axis]);
        if hi <= lo {
            continue;
        }
        let scale = SAH_BINS as f32 / (hi - lo);
        let mut counts = [0usize; SAH_BINS];
        let mut boxes = [Aabb::empty(); SAH_BINS];
        for p in prims {
            let b = bin_index(p.centroid[axis], lo, scale);
            counts[b] += 1;
            boxes[b] = boxes[b].union(p.bounds);
        }
        // Sweep from the right to get suffix areas/counts.
        let mut right_area = [0.0f32; SAH_BINS];
        let mut right_count = [0usize; SAH_BINS];
        let (mut acc_box, mut acc_n) = (Aabb::empty(), 0);
        for b in (1..SAH_BINS).rev() {
            acc_box = acc_box.union(boxes[b]);
            acc_n += counts[b];
            right_area[b] = acc_box.surface_area();
            right_count[b] = acc_n;
        }
        let (mut left_box, mut left_n) = (Aabb::empty(), 0);
        for b in 0..SAH_BINS - 1 {
            left_box = left_box.union(boxes[b]);
            left_n += counts[b];
            let rn = right_count[b + 1];
            if left_n == 0 || rn == 0 {
                continue;
            }
            let cost = TRAVERSAL_COST
                + (left_n as f32 * left_box.surface_area() + rn as f32 * right_area[b + 1]) * inv_area;
            if best.as_ref().is_none_or(|s| cost < s.cost) {
                best = Some(Split {
                    axis,
                    bin: b,
                    cost,
                    lo,
                    scale,
                });
            }
        }
    }
    best
}

/// In-place partition; returns the number of elements satisfying `pred`.
fn partition<T>(items: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut first = 0;
    for i in 0..items.len() {
        if pred(&items[i]) {
            items.swap(first, i);
            first += 1;
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_box(c: Vec3) -> Aabb {
        Aabb::new(c - Vec3::splat(0.1), c + Vec3::splat(0.1))
    }

    #[test]
    fn single_primitive_is_a_leaf() {
        let bvh = build_bvh2(&[tri_box(Vec3::zero())], 1).unwrap();
        assert_eq!(bvh.nodes.len(), 1);
        assert_eq!(bvh.nodes[bvh.root as usize].kind, BuildKind::Leaf { first: 0, count: 1 });
    }

    #[test]
    fn two_disjoint_primitives_give_three_nodes() {
        let bvh = build_bvh2(&[tri_box(Vec3::zero()), tri_box(Vec3::new(5.0, 0.0, 0.0))], 1).unwrap();
        assert_eq!(bvh.nodes.len(), 3);
        assert_eq!(bvh.leaf_count(), 2);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(build_bvh2(&[], 1), Err(Error::Domain(_))));
    }

    #[test]
    fn coincident_centroids_still_split_to_leaf_size() {
        let boxes = vec![tri_box(Vec3::splat(1.0)); 9];
        let bvh = build_bvh2(&boxes, 2).unwrap();
        for n in &bvh.nodes {
            if let BuildKind::Leaf { count, .. } = n.kind {
                assert!(count <= 2);
            }
        }
        let mut order = bvh.prim_order.clone();
        order.sort();
        assert_eq!(order, (0..9).collect::<Vec<_>>());
    }
}
