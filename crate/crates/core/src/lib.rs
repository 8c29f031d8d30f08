//! roombox: cuboid shape abstraction and indoor scene layout toolkit.
//!
//! The pipeline converts triangle meshes into compact cuboid assemblies
//! (voxelize, coarse-grain, segment, merge), represents indoor scenes as
//! cuboid-decomposed object layouts, measures and removes object
//! intersections, retrieves catalog shapes by volumetric overlap, and
//! runs a rejection-sampling refinement loop over a pluggable scene
//! sampler.

// validation guards are written `!(x > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod config;
pub mod cuboid;
pub mod curation;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod render;
pub mod retrieval;
pub mod sampling;
pub mod scene;
pub mod voxel;

pub use cuboid::Cuboid;
pub use error::{Error, Result};
