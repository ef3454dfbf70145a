//! Composite configurations, single-mode paths and manipulation paths.
//!
//! A manipulation path is stored as a list of *runs*; every run holds one or
//! more single-mode paths of the same kind and occupies one unit of the
//! domain `[0, |M|]`. Composing two paths concatenates their runs and fuses
//! the two runs at the junction when their kinds agree, so `|M|` follows the
//! composition rule and composition is exactly associative.

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Transform;
pub use crate::gp_table::EdgeKind as Mode;

/// Waypoints closer than this (rad, m) are the same configuration.
pub const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("end of the first path does not match the start of the second")]
    EndpointMismatch,
    #[error("path is not irreducible")]
    NotIrreducible,
    #[error("parameter {0} is outside [0, {1}]")]
    OutOfDomain(f64, usize),
    #[error("single-mode path needs at least one waypoint")]
    NoWaypoints,
    #[error("object moves along a transit path")]
    ObjectMoved,
    #[error("robot configurations have different lengths")]
    DimensionMismatch,
}

/// Robot joint vector paired with the object pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    pub q_rad: Vec<f64>,
    pub object_pose: Transform,
}

impl CompositeConfig {
    pub fn new(q_rad: Vec<f64>, object_pose: Transform) -> Self {
        CompositeConfig { q_rad, object_pose }
    }

    /// Equal within [`ENDPOINT_TOL`] in every joint and in the object pose.
    pub fn same_as(&self, other: &CompositeConfig) -> bool {
        self.q_rad.len() == other.q_rad.len()
            && self
                .q_rad
                .iter()
                .zip(&other.q_rad)
                .all(|(a, b)| (a - b).abs() <= ENDPOINT_TOL)
            && self.object_pose.approx_eq(&other.object_pose, ENDPOINT_TOL)
    }

    pub fn joint_distance(&self, other: &CompositeConfig) -> f64 {
        self.q_rad
            .iter()
            .zip(&other.q_rad)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Linear interpolation in joint space and along the geodesic for the pose.
    pub fn interpolate(&self, other: &CompositeConfig, u: f64) -> CompositeConfig {
        let q = self
            .q_rad
            .iter()
            .zip(&other.q_rad)
            .map(|(a, b)| a + (b - a) * u)
            .collect();
        let (ra, rb) = (self.object_pose.rotation(), other.object_pose.rotation());
        let r = ra.try_slerp(rb, u, 1e-12).unwrap_or(*ra);
        let t = self.object_pose.translation() * (1.0 - u) + other.object_pose.translation() * u;
        CompositeConfig::new(q, Transform::new(UnitQuaternion::new_normalize(r.into_inner()), t))
    }
}

/// A path within one mode: the object rests (transit) or is held with a
/// fixed grasp (transfer). Waypoints are spread uniformly over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleModePath {
    pub kind: Mode,
    waypoints: Vec<CompositeConfig>,
}

impl SingleModePath {
    pub fn new(kind: Mode, waypoints: Vec<CompositeConfig>) -> Result<Self, PathError> {
        let Some(first) = waypoints.first() else {
            return Err(PathError::NoWaypoints);
        };
        if waypoints.iter().any(|w| w.q_rad.len() != first.q_rad.len()) {
            return Err(PathError::DimensionMismatch);
        }
        if kind == Mode::Transit
            && waypoints
                .iter()
                .any(|w| !w.object_pose.approx_eq(&first.object_pose, ENDPOINT_TOL))
        {
            return Err(PathError::ObjectMoved);
        }
        Ok(SingleModePath { kind, waypoints })
    }

    pub fn waypoints(&self) -> &[CompositeConfig] {
        &self.waypoints
    }

    pub fn start(&self) -> &CompositeConfig {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &CompositeConfig {
        self.waypoints.last().expect("nonempty")
    }

    pub fn reversed(&self) -> SingleModePath {
        let mut w = self.waypoints.clone();
        w.reverse();
        SingleModePath {
            kind: self.kind,
            waypoints: w,
        }
    }

    /// Configuration at `u` in `[0, 1]`.
    pub fn evaluate(&self, u: f64) -> CompositeConfig {
        let n = self.waypoints.len();
        if n == 1 {
            return self.waypoints[0].clone();
        }
        let x = u.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        let local = x - i as f64;
        if local == 0.0 {
            return self.waypoints[i].clone();
        }
        if local == 1.0 {
            return self.waypoints[i + 1].clone();
        }
        self.waypoints[i].interpolate(&self.waypoints[i + 1], local)
    }

    /// Largest change of the gripper pose relative to the object along the
    /// waypoints, given the gripper's forward kinematics. Zero for paths
    /// whose grasp never changes.
    pub fn grasp_deviation(&self, fk: impl Fn(&[f64]) -> Transform) -> f64 {
        let rel = |w: &CompositeConfig| w.object_pose.inverse() * fk(&w.q_rad);
        let g0 = rel(&self.waypoints[0]);
        self.waypoints
            .iter()
            .map(|w| {
                let (dt, dr) = rel(w).distance_to(&g0);
                dt.max(dr)
            })
            .fold(0.0, f64::max)
    }

    /// Largest object displacement from the first waypoint (m or rad).
    pub fn object_deviation(&self) -> f64 {
        let t0 = &self.waypoints[0].object_pose;
        self.waypoints
            .iter()
            .map(|w| {
                let (dt, dr) = w.object_pose.distance_to(t0);
                dt.max(dr)
            })
            .fold(0.0, f64::max)
    }
}

/// Composition of single-mode paths with domain `[0, |M|]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManipulationPath {
    runs: Vec<Vec<SingleModePath>>,
    /// Where a path without segments sits.
    anchor: CompositeConfig,
}

impl ManipulationPath {
    /// The path that stays at `at`; `|M| = 0`.
    pub fn empty(at: CompositeConfig) -> Self {
        ManipulationPath {
            runs: Vec::new(),
            anchor: at,
        }
    }

    pub fn single(segment: SingleModePath) -> Self {
        let anchor = segment.start().clone();
        ManipulationPath {
            runs: vec![vec![segment]],
            anchor,
        }
    }

    /// One run per segment, without fusing equal kinds. Consecutive segments
    /// must share endpoints.
    pub fn from_segments(segments: Vec<SingleModePath>) -> Result<Self, PathError> {
        let Some(first) = segments.first() else {
            return Err(PathError::NoWaypoints);
        };
        for w in segments.windows(2) {
            if !w[0].end().same_as(w[1].start()) {
                return Err(PathError::EndpointMismatch);
            }
        }
        Ok(ManipulationPath {
            anchor: first.start().clone(),
            runs: segments.into_iter().map(|s| vec![s]).collect(),
        })
    }

    /// Domain length `|M|`.
    pub fn domain_length(&self) -> usize {
        self.runs.len()
    }

    pub fn runs(&self) -> &[Vec<SingleModePath>] {
        &self.runs
    }

    pub fn segments(&self) -> impl Iterator<Item = &SingleModePath> {
        self.runs.iter().flatten()
    }

    pub fn kinds(&self) -> Vec<Mode> {
        self.runs.iter().map(|r| r[0].kind).collect()
    }

    pub fn start(&self) -> &CompositeConfig {
        self.runs.first().map_or(&self.anchor, |r| r[0].start())
    }

    pub fn end(&self) -> &CompositeConfig {
        self.runs
            .last()
            .map_or(&self.anchor, |r| r.last().expect("runs are nonempty").end())
    }

    /// Every run is one segment and run kinds alternate.
    pub fn is_irreducible(&self) -> bool {
        self.runs.iter().all(|r| r.len() == 1) && self.runs.windows(2).all(|w| w[0][0].kind != w[1][0].kind)
    }

    /// `self ∗ other`.
    pub fn compose(&self, other: &ManipulationPath) -> Result<ManipulationPath, PathError> {
        if !self.end().same_as(other.start()) {
            return Err(PathError::EndpointMismatch);
        }
        let mut runs = self.runs.clone();
        let mut rest = other.runs.iter();
        if let (Some(last), Some(next)) = (runs.last_mut(), other.runs.first()) {
            if last[0].kind == next[0].kind {
                last.extend(next.iter().cloned());
                rest.next();
            }
        }
        runs.extend(rest.cloned());
        Ok(ManipulationPath {
            runs,
            anchor: self.start().clone(),
        })
    }

    /// Irreducible form: adjacent runs of equal kind fused, each run flattened
    /// into one segment.
    pub fn reduce(&self) -> ManipulationPath {
        let mut merged: Vec<SingleModePath> = Vec::new();
        for seg in self.segments() {
            match merged.last_mut() {
                Some(last) if last.kind == seg.kind => {
                    last.waypoints.extend(seg.waypoints[1..].iter().cloned());
                }
                _ => merged.push(seg.clone()),
            }
        }
        ManipulationPath {
            anchor: self.start().clone(),
            runs: merged.into_iter().map(|s| vec![s]).collect(),
        }
    }

    /// `|M| - 1`, defined for irreducible paths; the empty path has none.
    pub fn transitions(&self) -> Result<usize, PathError> {
        if !self.is_irreducible() {
            return Err(PathError::NotIrreducible);
        }
        Ok(self.runs.len().saturating_sub(1))
    }

    /// Configuration at `s` in `[0, |M|]`.
    pub fn evaluate(&self, s: f64) -> Result<CompositeConfig, PathError> {
        let m = self.runs.len();
        if !(0.0..=m as f64).contains(&s) {
            return Err(PathError::OutOfDomain(s, m));
        }
        if m == 0 {
            return Ok(self.anchor.clone());
        }
        let i = (s.floor() as usize).min(m - 1);
        let run = &self.runs[i];
        let x = (s - i as f64) * run.len() as f64;
        let j = (x.floor() as usize).min(run.len() - 1);
        Ok(run[j].evaluate(x - j as f64))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PathDoc::from(self)).expect("path serializes") + "\n"
    }
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    domain_length: usize,
    transitions: Option<usize>,
    segments: Vec<SegmentDoc>,
}

#[derive(Serialize, Deserialize)]
struct SegmentDoc {
    run: usize,
    kind: Mode,
    waypoints: Vec<CompositeConfig>,
}

impl From<&ManipulationPath> for PathDoc {
    fn from(m: &ManipulationPath) -> Self {
        PathDoc {
            domain_length: m.domain_length(),
            transitions: m.transitions().ok(),
            segments: m
                .runs
                .iter()
                .enumerate()
                .flat_map(|(run, segs)| {
                    segs.iter().map(move |s| SegmentDoc {
                        run,
                        kind: s.kind,
                        waypoints: s.waypoints.clone(),
                    })
                })
                .collect(),
        }
    }
}

impl ManipulationPath {
    /// Reads a document written by [`ManipulationPath::to_json`]; an empty
    /// segment list yields an empty path anchored at `anchor`.
    pub fn from_json(json: &str, anchor: Option<CompositeConfig>) -> Result<ManipulationPath, String> {
        let doc: PathDoc = serde_json::from_str(json).map_err(|e| e.to_string())?;
        let mut runs: Vec<Vec<SingleModePath>> = Vec::new();
        for s in doc.segments {
            let seg = SingleModePath::new(s.kind, s.waypoints).map_err(|e| e.to_string())?;
            if s.run == runs.len() {
                runs.push(vec![seg]);
            } else if s.run + 1 == runs.len() {
                runs[s.run].push(seg);
            } else {
                return Err("segment runs out of order".into());
            }
        }
        let anchor = match runs.first() {
            Some(r) => r[0].start().clone(),
            None => anchor.ok_or("empty path needs an anchor")?,
        };
        Ok(ManipulationPath { runs, anchor })
    }
}
