//! Rigid transforms, oriented-box collision, convex hulls and stable placements.

mod hull;
mod obb;
mod placement;
mod transform;

pub use hull::{convex_hull, HullFace};
pub use obb::{obb_overlap, Cuboid, Obb, CONTACT_CLEARANCE};
pub use placement::{stable_placement_classes, volume_centroid, PlacementClass, STABILITY_MARGIN};
pub use transform::Transform;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box half-extents must be positive, got {0:?}")]
    NonPositiveExtent([f64; 3]),
    #[error("degenerate hull input: {0}")]
    DegenerateInput(&'static str),
    #[error("object has no stable placement")]
    NoStablePlacement,
}
