//! Serial-arm kinematics and whole-scene collision checking.

mod robot;
mod world;

pub use robot::{IkConfig, Joint, RobotModel, DENSO_LIKE_JSON, IK_ORIENTATION_TOL, IK_POSITION_TOL};
pub use world::{Carry, HeldObject, WorldModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("joint {joint} value {value} is outside its limits")]
    JointLimit { joint: usize, value: f64 },
    #[error("expected {expected} joint values, got {got}")]
    Dimension { expected: usize, got: usize },
}
