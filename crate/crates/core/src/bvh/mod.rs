//! Binary BVH over triangles.
//!
//! [`build_bvh2`] produces an `f32` tree with a binned surface-area
//! heuristic; [`compact`] lays it out depth-first as 24-byte
//! [`CompactNode`]s whose extents are stored as `f16` rounded so the decoded
//! box never shrinks. [`flatten_f32`] produces the equivalent 32-byte layout
//! with full-precision bounds, used as the baseline in tests and benches.

mod build;
mod compact;
mod traverse;

pub use build::{build_bvh2, BuildKind, BuildNode, Bvh2, SAH_BINS};
pub use compact::{compact, flatten_f32, CompactNode, FlatNode, COMPACT_NODE_BYTES, FLAT_NODE_BYTES};
pub use traverse::{
    brute_force, intersect_slab, intersect_slab_node, traverse, traverse_counted, Hit, Link, NodeArray, SlabRay,
    TraversalStats, TriangleSource,
};
