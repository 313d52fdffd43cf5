//! Monte-Carlo path tracing with a compact half-precision BVH and a neural
//! HDR environment light.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`], [`precision`], [`rng`]: vectors, directed/stochastic `f16`
//!   casts and a counter-based random number generator.
//! - [`bvh`]: binned-SAH BVH-2 builder, 24-byte pointer-less compact nodes
//!   with conservatively rounded `f16` extents, slab test and traversal.
//! - [`scene`]: built-in scenes, OBJ ingestion and the single-chunk
//!   `.sblob` serialisation.
//! - [`nif`]: the neural image field (Fourier features, ReLU trunk with a
//!   skip concatenation, fixed colour matrix, log tone mapping).
//! - [`train`]: hand-written reverse mode, Huber loss and Adam.
//! - [`integrator`]: camera, equirectangular mapping, roulette and the
//!   bounce loop with batched environment queries.
//! - [`metrics`]: PSNR variants and AOV precision comparison.
//!
//! Shared image types and file codecs live in [`image`] and [`imageio`].

pub mod bvh;
pub mod error;
pub mod geometry;
pub mod image;
pub mod imageio;
pub mod integrator;
pub mod math;
pub mod metrics;
pub mod nif;
pub mod precision;
pub mod rng;
pub mod scene;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use image::HdrImage;
pub use math::{Rgb, Vec3, Vector3};
pub use precision::F16;
pub use rng::RngKey;
