//! Pick-and-place manipulation planning guided by a high-level grasp-placement table.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod geometry;
pub mod gp_table;
pub mod harness;
pub mod kinematics;
pub mod object_gripper;
pub mod paths;
pub mod planner;
pub mod task_plans;
