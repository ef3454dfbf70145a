//! Comparison planners: a primitive-based bidirectional tree planner without
//! guidance, and a planner over a discretized two-layer regrasp graph.

mod dbmp;
mod pmp;

pub use dbmp::{dbmp_build, dbmp_plan, grasp_set, DbmpConfig, DiscreteGrasp, DiscretePlacement, RegraspGraph};
pub use pmp::pmp_plan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::CompositeConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("configurations have {0} and {1} joints")]
    DimensionMismatch(usize, usize),
    #[error("invalid metric: {0}")]
    InvalidMetric(&'static str),
}

/// Weights of the composite distance
/// `alpha |q_b - q_a|^2 + (1 - alpha) (w_r angle(R_a, R_b) + w_t |t_b - t_a|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeMetricConfig {
    pub alpha: f64,
    /// Per radian of object rotation.
    pub w_rotation: f64,
    /// Per meter of object translation.
    pub w_translation: f64,
}

impl Default for CompositeMetricConfig {
    fn default() -> Self {
        CompositeMetricConfig {
            alpha: 0.5,
            w_rotation: 1.0,
            w_translation: 1.0,
        }
    }
}

impl CompositeMetricConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(BaselineError::InvalidMetric("alpha must lie in [0, 1]"));
        }
        if !(self.w_rotation >= 0.0 && self.w_translation >= 0.0) {
            return Err(BaselineError::InvalidMetric("weights must be nonnegative"));
        }
        Ok(())
    }
}

pub fn composite_distance(
    a: &CompositeConfig,
    b: &CompositeConfig,
    cfg: &CompositeMetricConfig,
) -> Result<f64, BaselineError> {
    if a.q_rad.len() != b.q_rad.len() {
        return Err(BaselineError::DimensionMismatch(a.q_rad.len(), b.q_rad.len()));
    }
    let dq: f64 = a.q_rad.iter().zip(&b.q_rad).map(|(x, y)| (y - x) * (y - x)).sum();
    let angle = a.object_pose.rotation().angle_to(b.object_pose.rotation());
    let dt = (b.object_pose.translation() - a.object_pose.translation()).norm();
    Ok(cfg.alpha * dq + (1.0 - cfg.alpha) * (cfg.w_rotation * angle + cfg.w_translation * dt))
}
