//! Parallel-jaw gripper model, grasp classes and their continuous parameters.
//!
//! Gripper frame convention: `x` is the sliding axis, `y` the lateral axis
//! (normal to both finger pads) and `z` the approach axis, pointing out of the
//! gripper. The origin sits at the center of the palm's front face; fingers
//! extend from it along `+z`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ObjectError, ObjectModel};
use crate::geometry::{Cuboid, Transform};

/// Number of evenly spaced slide offsets in deterministic grasp sweeps.
pub const SLIDE_SWEEP: usize = 11;

/// Box face the gripper approaches, named by its outward normal in the box
/// frame. The integer codes 1..=6 stand for +x, +y, +z, -x, -y, -z. The
/// gripper's approach axis is anti-parallel to this normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ApproachDirection {
    PosX,
    PosY,
    PosZ,
    NegX,
    NegY,
    NegZ,
}

impl ApproachDirection {
    pub const ALL: [ApproachDirection; 6] = [
        ApproachDirection::PosX,
        ApproachDirection::PosY,
        ApproachDirection::PosZ,
        ApproachDirection::NegX,
        ApproachDirection::NegY,
        ApproachDirection::NegZ,
    ];

    pub fn from_code(i: usize) -> Result<Self, ObjectError> {
        match i {
            1..=6 => Ok(Self::ALL[i - 1]),
            _ => Err(ObjectError::OutOfRange {
                what: "approach direction",
                value: i,
            }),
        }
    }

    pub fn code(self) -> usize {
        self as usize + 1
    }

    /// Box axis (0, 1, 2) the face normal runs along.
    pub fn axis(self) -> usize {
        (self as usize) % 3
    }

    pub fn sign(self) -> f64 {
        if (self as usize) < 3 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn vector(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.axis()] = self.sign();
        v
    }
}

/// Grasp class `i + 6(j - 1)`: approach direction `i` on box `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraspClass {
    /// 1-based box index.
    pub box_index: usize,
    pub direction: ApproachDirection,
}

impl GraspClass {
    pub fn index(&self) -> usize {
        self.direction.code() + 6 * (self.box_index - 1)
    }

    pub fn from_index(g: usize, num_boxes: usize) -> Result<Self, ObjectError> {
        let (i, j) = decode_grasp_class(g, num_boxes)?;
        Ok(GraspClass {
            box_index: j,
            direction: ApproachDirection::from_code(i)?,
        })
    }
}

/// Grasp class index for approach direction `i` (1..=6) on box `j` (1..=m).
pub fn grasp_class_index(i: usize, j: usize, num_boxes: usize) -> Result<usize, ObjectError> {
    if !(1..=6).contains(&i) {
        return Err(ObjectError::OutOfRange {
            what: "approach direction",
            value: i,
        });
    }
    if j < 1 || j > num_boxes {
        return Err(ObjectError::OutOfRange {
            what: "box index",
            value: j,
        });
    }
    Ok(i + 6 * (j - 1))
}

/// Inverse of [`grasp_class_index`]: returns `(i, j)`.
pub fn decode_grasp_class(g: usize, num_boxes: usize) -> Result<(usize, usize), ObjectError> {
    if g < 1 || g > 6 * num_boxes {
        return Err(ObjectError::OutOfRange {
            what: "grasp class",
            value: g,
        });
    }
    Ok(((g - 1) % 6 + 1, (g - 1) / 6 + 1))
}

/// Continuous parameters selecting one grasp inside a grasp class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspParams {
    /// Box axis (0, 1, 2) the fingers close along. Must differ from the approach axis.
    pub lateral_axis: usize,
    /// Offset of the grasp center along the sliding axis (m).
    pub slide_offset: f64,
    /// How deep the fingertips reach past the entry face (m).
    pub depth_offset: f64,
    /// Rotation about the lateral axis (rad).
    #[serde(default)]
    pub roll: f64,
}

/// A fully specified grasp: class plus parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub class: GraspClass,
    pub params: GraspParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperModel {
    pub max_opening_m: f64,
    pub finger_length_m: f64,
    /// Finger pad size along the sliding axis.
    pub finger_width_m: f64,
    /// Finger size along the lateral axis.
    pub finger_thickness_m: f64,
    /// Palm half-extents along (sliding, lateral, approach).
    pub palm_half_extents_m: [f64; 3],
    /// Sample grasps rolled about the lateral axis in [-pi/4, pi/4].
    #[serde(default)]
    pub roll_enabled: bool,
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            max_opening_m: 0.085,
            finger_length_m: 0.04,
            finger_width_m: 0.02,
            finger_thickness_m: 0.01,
            palm_half_extents_m: [0.045, 0.06, 0.05],
            roll_enabled: false,
        }
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("max_opening_m", self.max_opening_m),
            ("finger_length_m", self.finger_length_m),
            ("finger_width_m", self.finger_width_m),
            ("finger_thickness_m", self.finger_thickness_m),
            ("palm_half_extents_m[0]", self.palm_half_extents_m[0]),
            ("palm_half_extents_m[1]", self.palm_half_extents_m[1]),
            ("palm_half_extents_m[2]", self.palm_half_extents_m[2]),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Palm and the two fingers, in the gripper frame, with the pads `opening` apart.
    pub fn bodies(&self, opening: f64) -> [Cuboid; 3] {
        let [ps, pl, pd] = self.palm_half_extents_m;
        let fl = self.finger_length_m;
        let ft = self.finger_thickness_m;
        let finger_half = Vector3::new(self.finger_width_m / 2.0, ft / 2.0, fl / 2.0);
        let finger = |side: f64| {
            Cuboid::new(
                finger_half,
                Transform::from_translation(Vector3::new(0.0, side * (opening + ft) / 2.0, fl / 2.0)),
            )
            .expect("gripper dimensions validated")
        };
        [
            Cuboid::new(
                Vector3::new(ps, pl, pd),
                Transform::from_translation(Vector3::new(0.0, 0.0, -pd)),
            )
            .expect("gripper dimensions validated"),
            finger(1.0),
            finger(-1.0),
        ]
    }

    /// Lateral axes whose box width fits between the open fingers.
    pub fn feasible_lateral_axes(&self, half_extents: &Vector3<f64>, approach_axis: usize) -> Vec<usize> {
        (0..3)
            .filter(|&l| l != approach_axis && 2.0 * half_extents[l] <= self.max_opening_m)
            .collect()
    }

    /// Largest admissible slide offset: the finger pad stays on the face.
    pub fn max_slide(&self, half_extents: &Vector3<f64>, sliding_axis: usize) -> f64 {
        (half_extents[sliding_axis] - self.finger_width_m / 2.0).max(0.0)
    }

    /// Upper bound on the fingertip depth for a given face depth.
    pub fn max_depth(&self, half_extents: &Vector3<f64>, approach_axis: usize) -> f64 {
        self.finger_length_m.min(2.0 * half_extents[approach_axis])
    }

    pub fn default_depth(&self, half_extents: &Vector3<f64>, approach_axis: usize) -> f64 {
        self.max_depth(half_extents, approach_axis) / 2.0
    }
}

fn sliding_axis(approach: usize, lateral: usize) -> usize {
    3 - approach - lateral
}

/// Gripper frame expressed in the frame of the grasped box.
fn gripper_in_box(half: &Vector3<f64>, gripper: &GripperModel, class: &GraspClass, params: &GraspParams) -> Transform {
    let n = class.direction.vector();
    let z = -n;
    let mut y = Vector3::zeros();
    y[params.lateral_axis] = 1.0;
    let x = y.cross(&z);
    let h_a = half[class.direction.axis()];
    let origin = n * (h_a - params.depth_offset + gripper.finger_length_m) + x * params.slide_offset;
    let unrolled = Transform::from_matrix_parts(Matrix3::from_columns(&[x, y, z]), origin);
    if params.roll == 0.0 {
        return unrolled;
    }
    // roll about the lateral axis through the grasp point on the box mid-plane
    let pivot = Transform::from_translation(x * params.slide_offset);
    let roll = Transform::from_rotation(UnitQuaternion::from_axis_angle(
        &nalgebra::Unit::new_normalize(y),
        params.roll,
    ));
    pivot * roll * pivot.inverse() * unrolled
}

fn check_params(
    half: &Vector3<f64>,
    gripper: &GripperModel,
    class: &GraspClass,
    params: &GraspParams,
) -> Result<(), ObjectError> {
    let a = class.direction.axis();
    let l = params.lateral_axis;
    if l > 2 || l == a {
        return Err(ObjectError::InvalidGraspParams(
            "lateral axis must be perpendicular to the approach",
        ));
    }
    if 2.0 * half[l] > gripper.max_opening_m {
        return Err(ObjectError::InfeasibleGrasp {
            grasp_class: class.index(),
        });
    }
    if params.slide_offset.abs() > gripper.max_slide(half, sliding_axis(a, l)) + 1e-12 {
        return Err(ObjectError::InvalidGraspParams("slide offset leaves the face"));
    }
    if !(params.depth_offset > 0.0 && params.depth_offset <= gripper.max_depth(half, a) + 1e-12) {
        return Err(ObjectError::InvalidGraspParams("depth offset out of range"));
    }
    if params.roll.abs() > FRAC_PI_4 + 1e-12 {
        return Err(ObjectError::InvalidGraspParams("roll out of range"));
    }
    Ok(())
}

/// Gripper pose in the frame of the object (object pose = identity).
pub fn grasp_transform(
    object: &ObjectModel,
    gripper: &GripperModel,
    class: &GraspClass,
    params: &GraspParams,
) -> Result<Transform, ObjectError> {
    let b = object.component(class.box_index)?;
    check_params(b.half_extents(), gripper, class, params)?;
    Ok(b.local_pose() * &gripper_in_box(b.half_extents(), gripper, class, params))
}

/// World pose of the gripper holding the object at `object_pose`.
pub fn gripper_pose(
    object: &ObjectModel,
    gripper: &GripperModel,
    object_pose: &Transform,
    class: &GraspClass,
    params: &GraspParams,
) -> Result<Transform, ObjectError> {
    Ok(object_pose * &grasp_transform(object, gripper, class, params)?)
}

/// Finger opening that closes the pads on the grasped box.
pub fn grasp_width(object: &ObjectModel, grasp: &Grasp) -> f64 {
    object
        .component(grasp.class.box_index)
        .map(|b| 2.0 * b.half_extents()[grasp.params.lateral_axis])
        .unwrap_or(0.0)
}

/// Uniform sample over the valid parameter box of a grasp class.
pub fn sample_grasp<R: Rng + ?Sized>(
    object: &ObjectModel,
    gripper: &GripperModel,
    class: &GraspClass,
    rng: &mut R,
) -> Result<GraspParams, ObjectError> {
    let b = object.component(class.box_index)?;
    let half = b.half_extents();
    let a = class.direction.axis();
    let laterals = gripper.feasible_lateral_axes(half, a);
    if laterals.is_empty() {
        return Err(ObjectError::InfeasibleGrasp {
            grasp_class: class.index(),
        });
    }
    let lateral_axis = laterals[rng.gen_range(0..laterals.len())];
    let umax = gripper.max_slide(half, sliding_axis(a, lateral_axis));
    let dmax = gripper.max_depth(half, a);
    let slide_offset = if umax > 0.0 { rng.gen_range(-umax..=umax) } else { 0.0 };
    let depth_offset = rng.gen_range(0.25 * dmax..=0.75 * dmax);
    let roll = if gripper.roll_enabled {
        rng.gen_range(-FRAC_PI_4..=FRAC_PI_4)
    } else {
        0.0
    };
    Ok(GraspParams {
        lateral_axis,
        slide_offset,
        depth_offset,
        roll,
    })
}

/// Deterministic sweep: feasible lateral axes times evenly spaced slide
/// offsets, default depth, no roll. Duplicate offsets on narrow faces collapse.
pub fn grasp_sweep(
    object: &ObjectModel,
    gripper: &GripperModel,
    class: &GraspClass,
) -> Result<Vec<GraspParams>, ObjectError> {
    let b = object.component(class.box_index)?;
    let half = b.half_extents();
    let a = class.direction.axis();
    let mut out = Vec::new();
    for lateral_axis in gripper.feasible_lateral_axes(half, a) {
        let umax = gripper.max_slide(half, sliding_axis(a, lateral_axis));
        let depth_offset = gripper.default_depth(half, a);
        let steps = if umax > 0.0 { SLIDE_SWEEP } else { 1 };
        for k in 0..steps {
            let slide_offset = if steps == 1 {
                0.0
            } else {
                -umax + 2.0 * umax * k as f64 / (steps - 1) as f64
            };
            out.push(GraspParams {
                lateral_axis,
                slide_offset,
                depth_offset,
                roll: 0.0,
            });
        }
    }
    Ok(out)
}

/// Identifies the grasp realized by a gripper pose given in the object frame.
pub fn recognize_grasp(object: &ObjectModel, gripper: &GripperModel, gripper_in_object: &Transform) -> Option<Grasp> {
    const TOL: f64 = 1e-6;
    for (k, b) in object.boxes().iter().enumerate() {
        let g = b.local_pose().inverse() * *gripper_in_object;
        let r = g.rotation_matrix();
        let y = r.column(1).into_owned();
        let Some(lateral_axis) = (0..3).find(|&l| (y[l] - 1.0).abs() < TOL) else {
            continue;
        };
        let z = r.column(2).into_owned();
        // the face normal closest to -z (perpendicular to the lateral axis) names the class
        let Some(direction) = ApproachDirection::ALL
            .into_iter()
            .filter(|d| d.axis() != lateral_axis)
            .min_by(|d1, d2| d1.vector().dot(&z).total_cmp(&d2.vector().dot(&z)))
        else {
            continue;
        };
        let n = direction.vector();
        let a = -n;
        let roll = a.cross(&z).dot(&y).atan2(a.dot(&z));
        let class = GraspClass {
            box_index: k + 1,
            direction,
        };
        let half = b.half_extents();
        // origin = u x - c z with x unrolled and z rolled; solve in the rolled x-z plane
        let x = y.cross(&a);
        let origin = g.translation();
        if origin.dot(&y).abs() > TOL {
            continue;
        }
        let xr = r.column(0).into_owned();
        let slide_offset = origin.dot(&xr) / x.dot(&xr);
        let c = slide_offset * x.dot(&z) - origin.dot(&z);
        let depth_offset = half[direction.axis()] + gripper.finger_length_m - c;
        let params = GraspParams {
            lateral_axis,
            slide_offset,
            depth_offset,
            roll,
        };
        if check_params(half, gripper, &class, &params).is_err() {
            continue;
        }
        let rebuilt = gripper_in_box(half, gripper, &class, &params);
        if rebuilt.approx_eq(&g, TOL) {
            return Some(Grasp { class, params });
        }
    }
    None
}
