//! Oriented boxes and the separating-axis overlap test.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Transform};

/// Interpenetration below this depth (meters) counts as contact, not collision.
pub const CONTACT_CLEARANCE: f64 = 1e-6;

/// A rectangular box given by its half-extents and its pose in the parent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CuboidRepr", into = "CuboidRepr")]
pub struct Cuboid {
    half_extents: Vector3<f64>,
    local_pose: Transform,
}

#[derive(Serialize, Deserialize)]
struct CuboidRepr {
    half_extents_m: [f64; 3],
    #[serde(default)]
    pose: Transform,
}

impl TryFrom<CuboidRepr> for Cuboid {
    type Error = GeometryError;
    fn try_from(r: CuboidRepr) -> Result<Self, Self::Error> {
        Cuboid::new(Vector3::from(r.half_extents_m), r.pose)
    }
}

impl From<Cuboid> for CuboidRepr {
    fn from(c: Cuboid) -> Self {
        CuboidRepr {
            half_extents_m: c.half_extents.into(),
            pose: c.local_pose,
        }
    }
}

impl Cuboid {
    pub fn new(half_extents: Vector3<f64>, local_pose: Transform) -> Result<Self, GeometryError> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(GeometryError::NonPositiveExtent(half_extents.into()));
        }
        Ok(Cuboid {
            half_extents,
            local_pose,
        })
    }

    /// Box centered at the origin of its parent frame.
    pub fn centered(half_extents: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new(half_extents, Transform::identity())
    }

    pub fn half_extents(&self) -> &Vector3<f64> {
        &self.half_extents
    }

    pub fn local_pose(&self) -> &Transform {
        &self.local_pose
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// Same box grown by `margin` on every side.
    pub fn inflated(&self, margin: f64) -> Cuboid {
        Cuboid {
            half_extents: self.half_extents.add_scalar(margin),
            local_pose: self.local_pose,
        }
    }

    /// Corners expressed in the parent frame.
    pub fn corners(&self) -> [Point3<f64>; 8] {
        let h = self.half_extents;
        let mut out = [Point3::origin(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.local_pose.apply(&Point3::new(sx * h.x, sy * h.y, sz * h.z));
        }
        out
    }

    /// True if `p` (parent frame) lies inside the box shrunk by `margin`.
    pub fn contains(&self, p: &Point3<f64>, margin: f64) -> bool {
        let local = self.local_pose.inverse().apply(p);
        (0..3).all(|k| local[k].abs() < self.half_extents[k] - margin)
    }
}

/// World-frame oriented box: center, orthonormal axes, half-extents.
#[derive(Clone, Copy, Debug)]
pub struct Obb {
    pub center: Vector3<f64>,
    pub axes: [Vector3<f64>; 3],
    pub half: Vector3<f64>,
}

impl Obb {
    pub fn from_cuboid(b: &Cuboid, pose: &Transform) -> Obb {
        let world = pose * b.local_pose();
        let r = world.rotation_matrix();
        Obb {
            center: *world.translation(),
            axes: [
                r.column(0).into_owned(),
                r.column(1).into_owned(),
                r.column(2).into_owned(),
            ],
            half: *b.half_extents(),
        }
    }

    fn radius_along(&self, axis: &Vector3<f64>) -> f64 {
        (0..3).map(|k| self.half[k] * self.axes[k].dot(axis).abs()).sum()
    }

    /// Minimum interval overlap over all separating-axis candidates. Positive
    /// values are the interpenetration depth, negative values a separation.
    pub fn penetration(&self, other: &Obb) -> f64 {
        let d = other.center - self.center;
        let mut depth = f64::INFINITY;
        let mut test = |axis: Vector3<f64>| {
            let n = axis.norm();
            if n < 1e-9 {
                return;
            }
            let axis = axis / n;
            let overlap = self.radius_along(&axis) + other.radius_along(&axis) - d.dot(&axis).abs();
            if overlap < depth {
                depth = overlap;
            }
        };
        for a in &self.axes {
            test(*a);
        }
        for b in &other.axes {
            test(*b);
        }
        for a in &self.axes {
            for b in &other.axes {
                test(a.cross(b));
            }
        }
        depth
    }

    pub fn overlaps(&self, other: &Obb) -> bool {
        self.penetration(other) > CONTACT_CLEARANCE
    }
}

/// True iff the interiors of the two posed boxes interpenetrate by more than
/// [`CONTACT_CLEARANCE`]. Touching boxes do not overlap.
pub fn obb_overlap(box_a: &Cuboid, pose_a: &Transform, box_b: &Cuboid, pose_b: &Transform) -> bool {
    Obb::from_cuboid(box_a, pose_a).overlaps(&Obb::from_cuboid(box_b, pose_b))
}
