//! Traversability-driven local planning with path fusion.
//!
//! The pipeline projects an image-space traversability mask onto a
//! bird's-eye-view cost map ([`camera`], [`costmap`]), scores a fixed set of
//! sampled candidate paths ([`paths`]), clusters and merges the cheapest ones
//! and picks the representative best aligned with the goal ([`fusion`]).
//! [`sim`] closes the loop on synthetic worlds and [`eval`] measures fusion
//! quality.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod camera;
pub mod costmap;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod mask;
pub mod paths;
pub mod render;
pub mod seed;
pub mod sim;

pub use camera::{CameraModel, GroundPoint, PinholeParams};
pub use costmap::{CellIndex, CostMap, GridSpec};
pub use error::{Error, Result};
pub use fusion::{
    plan, Clustering, FusionConfig, Goal, PlanDiagnostics, PlanOutcome, PlannerConfig,
    RepresentativeSet, Strategy,
};
pub use geometry::Point;
pub use mask::Mask;
pub use paths::{Path, PathKind, PathSet, SamplerSpec};
