use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ObjectError, ObjectModel};
use crate::geometry::{Cuboid, PlacementClass, Transform, STABILITY_MARGIN};

/// Axis-aligned rectangular table whose top surface is horizontal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabletop {
    /// Center of the top surface in world x, y (m).
    pub center_xy_m: [f64; 2],
    /// Full size of the top surface along world x, y (m).
    pub size_xy_m: [f64; 2],
    /// Height of the top surface (m).
    pub height_m: f64,
    #[serde(default = "default_thickness")]
    pub thickness_m: f64,
}

fn default_thickness() -> f64 {
    0.05
}

impl Tabletop {
    pub fn new(center_xy_m: [f64; 2], size_xy_m: [f64; 2], height_m: f64) -> Self {
        Tabletop {
            center_xy_m,
            size_xy_m,
            height_m,
            thickness_m: default_thickness(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.size_xy_m.iter().all(|s| s.is_finite() && *s > 0.0)) {
            return Err(format!("size_xy_m must be positive, got {:?}", self.size_xy_m));
        }
        if !(self.thickness_m.is_finite() && self.thickness_m > 0.0) {
            return Err(format!("thickness_m must be positive, got {}", self.thickness_m));
        }
        Ok(())
    }

    /// The table slab as a box in world coordinates (identity parent pose).
    pub fn slab(&self) -> Cuboid {
        Cuboid::new(
            Vector3::new(self.size_xy_m[0] / 2.0, self.size_xy_m[1] / 2.0, self.thickness_m / 2.0),
            Transform::from_translation(Vector3::new(
                self.center_xy_m[0],
                self.center_xy_m[1],
                self.height_m - self.thickness_m / 2.0,
            )),
        )
        .expect("table dimensions validated")
    }

    pub fn contains_xy(&self, x: f64, y: f64, tol: f64) -> bool {
        (x - self.center_xy_m[0]).abs() <= self.size_xy_m[0] / 2.0 + tol
            && (y - self.center_xy_m[1]).abs() <= self.size_xy_m[1] / 2.0 + tol
    }
}

/// Location of the projected center of mass on the table and rotation about
/// the table normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementParams {
    pub x_m: f64,
    pub y_m: f64,
    pub theta_rad: f64,
}

/// Rectangle of admissible (x, y) placement locations in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementRegion {
    pub x_m: [f64; 2],
    pub y_m: [f64; 2],
}

/// Object pose with the placement face on the table, before translation:
/// outward normal to world -z and the face's in-plane x axis to world x
/// (rotated by theta).
fn resting_rotation(class: &PlacementClass, theta: f64) -> Transform {
    let flip = Transform::from_axis_angle(&Vector3::x(), PI);
    Transform::from_axis_angle(&Vector3::z(), theta) * flip * class.face.frame.inverse()
}

fn projected_com_on_face(object: &ObjectModel, class: &PlacementClass) -> Point3<f64> {
    let [u, v] = class.face.project(&object.center_of_mass());
    class.face.frame.apply(&Point3::new(u, v, 0.0))
}

/// Object pose resting on placement class `class` at `params`.
pub fn object_pose_from_placement(
    object: &ObjectModel,
    class: &PlacementClass,
    params: &PlacementParams,
    table: &Tabletop,
) -> Result<Transform, ObjectError> {
    let rest = resting_rotation(class, params.theta_rad);
    let anchor = rest.apply(&projected_com_on_face(object, class));
    let target = Vector3::new(params.x_m, params.y_m, table.height_m);
    let pose = Transform::from_translation(target - anchor.coords) * rest;
    for c in object.corners() {
        let w = pose.apply(&c);
        if !table.contains_xy(w.x, w.y, 1e-9) {
            return Err(ObjectError::OutOfTableBounds);
        }
    }
    Ok(pose)
}

/// Largest horizontal distance from the projected center of mass to an object corner.
fn footprint_radius(object: &ObjectModel, class: &PlacementClass) -> f64 {
    let com = projected_com_on_face(object, class);
    let n = class.face.outward_normal;
    object
        .corners()
        .iter()
        .map(|c| {
            let d = c - com;
            (d - n * d.dot(&n)).norm()
        })
        .fold(0.0, f64::max)
}

/// Uniform sample over rotations and over the locations where the whole
/// footprint stays on the table (and inside `region`, if given).
pub fn sample_placement<R: Rng + ?Sized>(
    object: &ObjectModel,
    class: &PlacementClass,
    table: &Tabletop,
    region: Option<&PlacementRegion>,
    rng: &mut R,
) -> Result<PlacementParams, ObjectError> {
    let r = footprint_radius(object, class);
    let mut xr = [
        table.center_xy_m[0] - table.size_xy_m[0] / 2.0 + r,
        table.center_xy_m[0] + table.size_xy_m[0] / 2.0 - r,
    ];
    let mut yr = [
        table.center_xy_m[1] - table.size_xy_m[1] / 2.0 + r,
        table.center_xy_m[1] + table.size_xy_m[1] / 2.0 - r,
    ];
    if let Some(reg) = region {
        xr = [xr[0].max(reg.x_m[0]), xr[1].min(reg.x_m[1])];
        yr = [yr[0].max(reg.y_m[0]), yr[1].min(reg.y_m[1])];
    }
    if xr[0] > xr[1] || yr[0] > yr[1] {
        return Err(ObjectError::OutOfTableBounds);
    }
    Ok(PlacementParams {
        x_m: rng.gen_range(xr[0]..=xr[1]),
        y_m: rng.gen_range(yr[0]..=yr[1]),
        theta_rad: rng.gen_range(-PI..PI),
    })
}

/// Recovers the placement class and parameters of an object pose, or `None`
/// if the object is not resting stably on the table.
pub fn classify_placement(
    object: &ObjectModel,
    classes: &[PlacementClass],
    pose: &Transform,
    table: &Tabletop,
    tol: f64,
) -> Option<(usize, PlacementParams)> {
    for class in classes {
        let normal = pose.apply_vector(&class.face.outward_normal);
        if (normal.z + 1.0).abs() > tol {
            continue;
        }
        let on_plane = pose.apply(&class.face.frame.apply(&Point3::origin()));
        if (on_plane.z - table.height_m).abs() > tol {
            continue;
        }
        // remaining freedom is a rotation about z
        let rz = pose.rotation_matrix() * resting_rotation(class, 0.0).inverse().rotation_matrix();
        let theta = rz[(1, 0)].atan2(rz[(0, 0)]);
        let com = pose.apply(&projected_com_on_face(object, class));
        if class.face.inset_distance(class.face.project(&object.center_of_mass())) < STABILITY_MARGIN {
            continue;
        }
        if !object.corners().iter().all(|c| {
            let w = pose.apply(c);
            w.z >= table.height_m - tol && table.contains_xy(w.x, w.y, tol)
        }) {
            continue;
        }
        return Some((
            class.index,
            PlacementParams {
                x_m: com.x,
                y_m: com.y,
                theta_rad: theta,
            },
        ));
    }
    None
}
