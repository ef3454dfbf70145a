use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::RobotModel;
use crate::geometry::{Cuboid, Obb, Transform, CONTACT_CLEARANCE};
use crate::object_gripper::{grasp_width, recognize_grasp, GripperModel, ObjectModel, Tabletop};
use crate::paths::{CompositeConfig, Mode};

/// Everything the motion planner collides against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub robot: RobotModel,
    pub gripper: GripperModel,
    pub table: Tabletop,
    /// Static boxes, posed in the world frame.
    #[serde(default)]
    pub obstacles: Vec<Cuboid>,
    pub object: ObjectModel,
}

/// A rigid grasp held during transfer: the gripper pose in the object frame
/// and the finger opening.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeldObject {
    pub gripper_in_object: Transform,
    pub width_m: f64,
}

/// The object's role in a collision query.
#[derive(Clone, Copy, Debug)]
pub enum Carry<'a> {
    /// Resting at a pose; an obstacle to the whole robot.
    Resting(&'a Transform),
    /// Held; moves with the hand and may touch it.
    Held(&'a HeldObject),
}

fn obbs(bodies: impl IntoIterator<Item = (Cuboid, Transform)>) -> Vec<Obb> {
    bodies.into_iter().map(|(b, p)| Obb::from_cuboid(&b, &p)).collect()
}

/// Largest distance from a frame origin to a point of `b` posed in that frame.
fn reach_of(b: &Cuboid, pose: &Transform) -> f64 {
    (pose * b.local_pose()).translation().norm() + b.half_extents().norm()
}

impl WorldModel {
    /// Object pose implied by a held grasp at joint vector `q`.
    pub fn held_object_pose(&self, q: &[f64], held: &HeldObject) -> Transform {
        self.robot.tool_pose(q) * held.gripper_in_object.inverse()
    }

    /// The grasp realized by `config`, if its gripper pose is one.
    pub fn held_from_config(&self, config: &CompositeConfig) -> Option<HeldObject> {
        let g = config.object_pose.inverse() * self.robot.tool_pose(&config.q_rad);
        let grasp = recognize_grasp(&self.object, &self.gripper, &g)?;
        Some(HeldObject {
            gripper_in_object: g,
            width_m: grasp_width(&self.object, &grasp),
        })
    }

    fn opening(carry: Carry, max_opening: f64) -> f64 {
        match carry {
            Carry::Resting(_) => max_opening,
            Carry::Held(h) => h.width_m,
        }
    }

    /// Visits every body pair that must not interpenetrate at `q`. Returns
    /// `None` if `q` violates a joint limit.
    fn for_each_pair<F>(&self, q: &[f64], carry: Carry, mut f: F) -> Option<ControlFlow<()>>
    where
        F: FnMut(&Obb, &Obb) -> ControlFlow<()>,
    {
        if !self.robot.within_limits(q) {
            return None;
        }
        let links = obbs(self.robot.link_boxes(q));
        let tool = self.robot.tool_pose(q);
        let hand = obbs(
            self.gripper
                .bodies(Self::opening(carry, self.gripper.max_opening_m))
                .iter()
                .map(|b| (*b, tool)),
        );
        let statics = obbs(
            std::iter::once((self.table.slab(), Transform::identity()))
                .chain(self.obstacles.iter().map(|b| (*b, Transform::identity()))),
        );
        let object_pose = match carry {
            Carry::Resting(t) => *t,
            Carry::Held(h) => tool * h.gripper_in_object.inverse(),
        };
        let object = obbs(self.object.boxes().iter().map(|b| (*b, object_pose)));
        let has_base = self.robot.base_box.is_some();
        // the pedestal stands on the table
        let moving = if has_base { &links[1..] } else { &links[..] };
        let all = |a: &[Obb], b: &[Obb], f: &mut F| -> ControlFlow<()> {
            for x in a {
                for y in b {
                    f(x, y)?;
                }
            }
            ControlFlow::Continue(())
        };
        let run = |f: &mut F| -> ControlFlow<()> {
            all(moving, &statics, f)?;
            all(&hand, &statics, f)?;
            if has_base {
                all(&links[..1], &statics[1..], f)?;
            }
            // non-adjacent link pairs; the hand counts as one body after the last link
            for i in 0..links.len() {
                for j in i + 2..links.len() {
                    f(&links[i], &links[j])?;
                }
            }
            all(&links[..links.len() - 1], &hand, f)?;
            match carry {
                Carry::Resting(_) => {
                    all(&links, &object, f)?;
                    all(&hand, &object, f)
                }
                Carry::Held(_) => {
                    all(&object, &statics, f)?;
                    all(&object, &links, f)
                }
            }
        };
        Some(run(&mut f))
    }

    /// True if `q` is within limits and no checked pair interpenetrates.
    pub fn is_free(&self, q: &[f64], carry: Carry) -> bool {
        matches!(
            self.for_each_pair(q, carry, |a, b| {
                if a.overlaps(b) {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            }),
            Some(ControlFlow::Continue(()))
        )
    }

    /// Lower bound on the distance between the closest checked pair; negative
    /// when some pair interpenetrates. `None` outside the joint limits.
    pub fn clearance(&self, q: &[f64], carry: Carry) -> Option<f64> {
        let mut c = f64::INFINITY;
        let _ = self.for_each_pair(q, carry, |a, b| {
            c = c.min(-a.penetration(b));
            ControlFlow::Continue(())
        })?;
        Some(c)
    }

    /// Whether a clearance value counts as collision-free.
    pub fn clearance_is_free(c: f64) -> bool {
        c >= -CONTACT_CLEARANCE
    }

    /// Per-joint bound on how far any moving body point lies from the joint
    /// origin, for every configuration. Moving joint `i` by `dq` displaces no
    /// point by more than `radii[i] * |dq|`.
    pub fn motion_radii(&self, carry: Carry) -> Vec<f64> {
        let joints = &self.robot.joints;
        let n = joints.len();
        let m = self.robot.link_inflation_m;
        let hand = self
            .gripper
            .bodies(Self::opening(carry, self.gripper.max_opening_m))
            .iter()
            .map(|b| reach_of(b, &Transform::identity()))
            .fold(0.0, f64::max);
        let held = match carry {
            Carry::Resting(_) => 0.0,
            Carry::Held(h) => {
                let in_tool = h.gripper_in_object.inverse();
                self.object
                    .boxes()
                    .iter()
                    .map(|b| reach_of(b, &in_tool))
                    .fold(0.0, f64::max)
            }
        };
        let tip = hand.max(held);
        (0..n)
            .map(|i| {
                let mut r: f64 = 0.0;
                let mut chain = 0.0;
                for (k, joint) in joints.iter().enumerate().take(n).skip(i) {
                    if k > i {
                        chain += joint.origin.translation().norm();
                    }
                    let b = joint.link_box.inflated(m);
                    r = r.max(chain + reach_of(&b, &Transform::identity()));
                }
                r.max(chain + self.robot.tool.translation().norm() + tip)
            })
            .collect()
    }

    /// Robot moving alone; the object at `object_pose` is an obstacle.
    pub fn transit_free(&self, q: &[f64], object_pose: &Transform) -> bool {
        self.is_free(q, Carry::Resting(object_pose))
    }

    /// Robot carrying the object; gripper-object contact is ignored.
    pub fn transfer_free(&self, q: &[f64], held: &HeldObject) -> bool {
        self.is_free(q, Carry::Held(held))
    }

    /// Mode-aware validity of a composite configuration. In transfer mode the
    /// grasp is read off the configuration and must be a recognized grasp.
    pub fn collision_free(&self, config: &CompositeConfig, mode: Mode) -> bool {
        match mode {
            Mode::Transit => self.transit_free(&config.q_rad, &config.object_pose),
            Mode::Transfer => match self.held_from_config(config) {
                Some(held) => self.transfer_free(&config.q_rad, &held),
                None => false,
            },
        }
    }
}
