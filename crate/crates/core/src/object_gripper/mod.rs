//! Box-composed objects, the parallel-jaw gripper, and grasp/placement classes.

mod gripper;
mod object;
mod placement;

pub use gripper::{
    decode_grasp_class, grasp_class_index, grasp_sweep, grasp_transform, grasp_width, gripper_pose, recognize_grasp,
    sample_grasp, ApproachDirection, Grasp, GraspClass, GraspParams, GripperModel, SLIDE_SWEEP,
};
pub use object::ObjectModel;
pub use placement::{
    classify_placement, object_pose_from_placement, sample_placement, PlacementParams, PlacementRegion, Tabletop,
};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectError {
    #[error("{what} {value} is out of range")]
    OutOfRange { what: &'static str, value: usize },
    #[error("grasp class {grasp_class} does not fit the gripper opening")]
    InfeasibleGrasp { grasp_class: usize },
    #[error("invalid grasp parameters: {0}")]
    InvalidGraspParams(&'static str),
    #[error("object footprint leaves the table")]
    OutOfTableBounds,
    #[error("object has no boxes")]
    EmptyObject,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
