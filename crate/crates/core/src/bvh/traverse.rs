use crate::geometry::{intersect_triangle, triangle_normal, Aabb, Ray};
use crate::math::{Real, Vec3};

use super::compact::{CompactNode, FlatNode};

/// Nearest-hit record for a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f32,
    pub prim_index: u32,
    /// Barycentric weights of vertices 1 and 2.
    pub barycentric: (f32, f32),
    pub hit_point: Vec3,
    /// Unit geometric normal following the vertex winding.
    pub normal: Vec3,
}

/// Anything that can hand out triangle vertices by primitive slot.
pub trait TriangleSource {
    fn triangle_count(&self) -> usize;
    fn triangle(&self, prim: u32) -> [Vec3; 3];
}

impl TriangleSource for [[Vec3; 3]] {
    fn triangle_count(&self) -> usize {
        self.len()
    }
    fn triangle(&self, prim: u32) -> [Vec3; 3] {
        self[prim as usize]
    }
}

impl TriangleSource for Vec<[Vec3; 3]> {
    fn triangle_count(&self) -> usize {
        self.len()
    }
    fn triangle(&self, prim: u32) -> [Vec3; 3] {
        self[prim as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// First child is the next node; `second` indexes the other child.
    Interior { second: u32 },
    Leaf { first: u32, count: u32 },
}

/// A depth-first node array (compact or full precision).
pub trait NodeArray {
    fn node_count(&self) -> usize;
    fn bounds(&self, i: usize) -> Aabb;
    fn link(&self, i: usize) -> Link;
}

impl NodeArray for [CompactNode] {
    fn node_count(&self) -> usize {
        self.len()
    }
    fn bounds(&self, i: usize) -> Aabb {
        self[i].decoded_bounds()
    }
    fn link(&self, i: usize) -> Link {
        let n = &self[i];
        if n.is_leaf() {
            Link::Leaf {
                first: n.child_or_offset(),
                count: n.prim_count() as u32,
            }
        } else {
            Link::Interior {
                second: n.child_or_offset(),
            }
        }
    }
}

impl NodeArray for [FlatNode] {
    fn node_count(&self) -> usize {
        self.len()
    }
    fn bounds(&self, i: usize) -> Aabb {
        self[i].bounds()
    }
    fn link(&self, i: usize) -> Link {
        let n = &self[i];
        if n.prim_count != 0 {
            Link::Leaf {
                first: n.child_or_offset,
                count: n.prim_count as u32,
            }
        } else {
            Link::Interior {
                second: n.child_or_offset,
            }
        }
    }
}

/// Ray prepared for slab tests.
#[derive(Debug, Clone, Copy)]
pub struct SlabRay {
    pub origin: Vec3,
    /// Componentwise reciprocal direction; infinities allowed.
    pub inv_dir: Vec3,
    pub t_min: f32,
    pub t_max: f32,
}

impl SlabRay {
    pub fn new(ray: &Ray) -> Self {
        Self {
            origin: ray.origin,
            inv_dir: Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z),
            t_min: ray.t_min,
            t_max: ray.t_max,
        }
    }
}

/// Entry distance of the ray segment `[t_min, t_max]` into `bounds`, or
/// `None` on a miss. The exit distance is inflated by `1 + 2 err_gamma(3)` so
/// rounding never culls a box the exact ray touches.
#[inline]
pub fn intersect_slab(ray: &SlabRay, bounds: &Aabb) -> Option<f32> {
    let mut t0 = ray.t_min;
    let mut t1 = ray.t_max;
    let grow = 1.0 + 2.0 * f32::err_gamma(3);
    for axis in 0..3 {
        let inv = ray.inv_dir[axis];
        let mut near = (bounds.min[axis] - ray.origin[axis]) * inv;
        let mut far = (bounds.max[axis] - ray.origin[axis]) * inv;
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        far *= grow;
        // NaN (0 * inf) leaves the interval unchanged.
        if near > t0 {
            t0 = near;
        }
        if far < t1 {
            t1 = far;
        }
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

pub fn intersect_slab_node(ray: &SlabRay, node: &CompactNode) -> Option<f32> {
    intersect_slab(ray, &node.decoded_bounds())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    /// Nodes whose box was entered and expanded.
    pub nodes_visited: u64,
    pub prim_tests: u64,
}

impl std::ops::AddAssign for TraversalStats {
    fn add_assign(&mut self, o: Self) {
        self.nodes_visited += o.nodes_visited;
        self.prim_tests += o.prim_tests;
    }
}

/// `(t, prim)` ordering used to break exact distance ties deterministically.
#[inline]
fn closer(t: f32, prim: u32, best: &Option<Hit>) -> bool {
    match best {
        None => true,
        Some(b) => t < b.t || (t == b.t && prim < b.prim_index),
    }
}

fn make_hit<S: TriangleSource + ?Sized>(prims: &S, prim: u32, ray: &Ray) -> Option<Hit> {
    let [p0, p1, p2] = prims.triangle(prim);
    let h = intersect_triangle(ray, p0, p1, p2)?;
    Some(Hit {
        t: h.t,
        prim_index: prim,
        barycentric: (h.b1, h.b2),
        hit_point: p0 * h.b0 + p1 * h.b1 + p2 * h.b2,
        normal: triangle_normal(p0, p1, p2),
    })
}

/// Nearest hit in `(t_min, t_max]`, counting visited nodes and tests.
pub fn traverse_counted<N, S>(ray: &Ray, nodes: &N, prims: &S, stats: &mut TraversalStats) -> Option<Hit>
where
    N: NodeArray + ?Sized,
    S: TriangleSource + ?Sized,
{
    if nodes.node_count() == 0 {
        return None;
    }
    let mut slab = SlabRay::new(ray);
    let root_entry = intersect_slab(&slab, &nodes.bounds(0))?;
    // Slack on the culling distance covers rounding differences between
    // the slab entry and the triangle's own t.
    let cull = 1.0 + 4.0 * f32::err_gamma(3);

    let mut best: Option<Hit> = None;
    let mut stack: Vec<(u32, f32)> = Vec::with_capacity(64);
    stack.push((0, root_entry));
    while let Some((node, entry)) = stack.pop() {
        if let Some(b) = &best {
            if entry > b.t * cull {
                continue;
            }
        }
        stats.nodes_visited += 1;
        match nodes.link(node as usize) {
            Link::Leaf { first, count } => {
                for prim in first..first + count {
                    stats.prim_tests += 1;
                    let mut r = *ray;
                    if let Some(b) = &best {
                        r.t_max = b.t;
                    }
                    if let Some(h) = make_hit(prims, prim, &r) {
                        if closer(h.t, prim, &best) {
                            best = Some(h);
                        }
                    }
                }
            }
            Link::Interior { second } => {
                slab.t_max = best.map_or(ray.t_max, |b| b.t * cull);
                let first = node + 1;
                let ea = intersect_slab(&slab, &nodes.bounds(first as usize));
                let eb = intersect_slab(&slab, &nodes.bounds(second as usize));
                match (ea, eb) {
                    (Some(a), Some(b)) => {
                        // Far child pushed first so the near one pops next.
                        if a <= b {
                            stack.push((second, b));
                            stack.push((first, a));
                        } else {
                            stack.push((first, a));
                            stack.push((second, b));
                        }
                    }
                    (Some(a), None) => stack.push((first, a)),
                    (None, Some(b)) => stack.push((second, b)),
                    (None, None) => {}
                }
            }
        }
    }
    best
}

pub fn traverse<N, S>(ray: &Ray, nodes: &N, prims: &S) -> Option<Hit>
where
    N: NodeArray + ?Sized,
    S: TriangleSource + ?Sized,
{
    traverse_counted(ray, nodes, prims, &mut TraversalStats::default())
}

/// Reference: test every primitive.
pub fn brute_force<S: TriangleSource + ?Sized>(ray: &Ray, prims: &S) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for prim in 0..prims.triangle_count() as u32 {
        if let Some(h) = make_hit(prims, prim, ray) {
            if closer(h.t, prim, &best) {
                best = Some(h);
            }
        }
    }
    best
}
