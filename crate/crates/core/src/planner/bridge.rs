use rand::Rng;

use super::local::{local_plan, mode_compatible};
use super::PlannerConfig;
use crate::geometry::Transform;
use crate::kinematics::{HeldObject, WorldModel};
use crate::object_gripper::{
    grasp_width, gripper_pose, object_pose_from_placement, sample_grasp, sample_placement, Grasp, GraspClass,
};
use crate::paths::{CompositeConfig, Mode, SingleModePath};

/// IK residual accepted for configurations that start or end a transfer.
const SNAP_TOL: f64 = 1e-9;

/// A configuration that is simultaneously a grasp and a stable placement.
#[derive(Clone, Debug, PartialEq)]
pub struct GpSample {
    pub config: CompositeConfig,
    pub held: HeldObject,
}

/// Solves for a robot configuration holding the object at `object_pose`
/// with the given grasp, valid in both modes.
pub fn grasp_at<R: Rng + ?Sized>(
    world: &WorldModel,
    object_pose: &Transform,
    gripper_in_object: &Transform,
    width_m: f64,
    hints: &[Vec<f64>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<GpSample> {
    let target = *object_pose * *gripper_in_object;
    let q = world.robot.ik_first(&target, hints, &cfg.ik, rng)?;
    let (ep, eo) = world.robot.pose_error(&q, &target);
    if ep > SNAP_TOL || eo > SNAP_TOL {
        return None;
    }
    let held = HeldObject {
        gripper_in_object: object_pose.inverse() * world.robot.tool_pose(&q),
        width_m,
    };
    if !world.transit_free(&q, object_pose) || !world.transfer_free(&q, &held) {
        return None;
    }
    Some(GpSample {
        config: CompositeConfig::new(q, *object_pose),
        held,
    })
}

/// A random grasp of class `grasp_class` on the object resting at `object_pose`.
pub fn sample_grasp_config<R: Rng + ?Sized>(
    world: &WorldModel,
    object_pose: &Transform,
    grasp_class: usize,
    hints: &[Vec<f64>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<GpSample> {
    let class = GraspClass::from_index(grasp_class, world.object.num_boxes()).ok()?;
    let params = sample_grasp(&world.object, &world.gripper, &class, rng).ok()?;
    let pose = gripper_pose(&world.object, &world.gripper, &Transform::identity(), &class, &params).ok()?;
    let width = grasp_width(&world.object, &Grasp { class, params });
    grasp_at(world, object_pose, &pose, width, hints, cfg, rng)
}

/// The held object put down at a random placement of class `placement_class`.
pub fn sample_placement_config<R: Rng + ?Sized>(
    world: &WorldModel,
    placement_class: usize,
    held: &HeldObject,
    hints: &[Vec<f64>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<GpSample> {
    let classes = world.object.placement_classes().ok()?;
    let class = classes.iter().find(|c| c.index == placement_class)?;
    let params = sample_placement(&world.object, class, &world.table, cfg.placement_region.as_ref(), rng).ok()?;
    let pose = object_pose_from_placement(&world.object, class, &params, &world.table).ok()?;
    grasp_at(world, &pose, &held.gripper_in_object, held.width_m, hints, cfg, rng)
}

/// One end of a connection attempt.
#[derive(Clone, Copy, Debug)]
pub struct Endpoint<'a> {
    pub config: &'a CompositeConfig,
    pub held: Option<&'a HeldObject>,
    /// Tree roots have no neighbor to absorb an extra segment.
    pub is_root: bool,
}

fn plan_chain<R: Rng + ?Sized>(
    world: &WorldModel,
    legs: [(&CompositeConfig, &CompositeConfig, Mode); 2],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Vec<SingleModePath>> {
    let mut out = Vec::new();
    for (a, b, mode) in legs {
        if a.same_as(b) {
            continue;
        }
        out.push(local_plan(world, a, b, mode, &cfg.rrt, rng).ok()?);
    }
    Some(out)
}

/// Joins `lo` (earlier in the path) to `hi` across an edge of kind `kind`.
///
/// A direct path is used when the endpoints share the mode invariant.
/// Otherwise an intermediate configuration takes the object pose of one end
/// and the grasp of the other, and the connection becomes two segments. The
/// extra segment is placed next to a non-root endpoint, where it fuses with
/// that endpoint's neighboring segment of the same kind.
pub fn bridge<R: Rng + ?Sized>(
    world: &WorldModel,
    lo: Endpoint,
    hi: Endpoint,
    kind: Mode,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Vec<SingleModePath>> {
    if mode_compatible(world, lo.config, hi.config, kind) {
        return local_plan(world, lo.config, hi.config, kind, &cfg.rrt, rng)
            .ok()
            .map(|s| vec![s]);
    }
    let hints = [lo.config.q_rad.clone(), hi.config.q_rad.clone()];
    match (lo.is_root, hi.is_root) {
        (_, false) => bridge_after(world, lo, hi, kind, &hints, cfg, rng),
        (false, true) => bridge_before(world, lo, hi, kind, &hints, cfg, rng),
        (true, true) => bridge_after(world, lo, hi, kind, &hints, cfg, rng)
            .or_else(|| bridge_before(world, lo, hi, kind, &hints, cfg, rng)),
    }
}

/// `kind` out of `lo`, then the other kind into `hi`.
fn bridge_after<R: Rng + ?Sized>(
    world: &WorldModel,
    lo: Endpoint,
    hi: Endpoint,
    kind: Mode,
    hints: &[Vec<f64>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Vec<SingleModePath>> {
    let (pose, h) = match kind {
        Mode::Transit => (&lo.config.object_pose, hi.held?),
        Mode::Transfer => (&hi.config.object_pose, lo.held?),
    };
    let x = grasp_at(world, pose, &h.gripper_in_object, h.width_m, hints, cfg, rng)?;
    plan_chain(
        world,
        [(lo.config, &x.config, kind), (&x.config, hi.config, kind.other())],
        cfg,
        rng,
    )
}

/// The other kind out of `lo`, then `kind` into `hi`.
fn bridge_before<R: Rng + ?Sized>(
    world: &WorldModel,
    lo: Endpoint,
    hi: Endpoint,
    kind: Mode,
    hints: &[Vec<f64>],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Vec<SingleModePath>> {
    let (pose, h) = match kind {
        Mode::Transit => (&hi.config.object_pose, lo.held?),
        Mode::Transfer => (&lo.config.object_pose, hi.held?),
    };
    let y = grasp_at(world, pose, &h.gripper_in_object, h.width_m, hints, cfg, rng)?;
    plan_chain(
        world,
        [(lo.config, &y.config, kind.other()), (&y.config, hi.config, kind)],
        cfg,
        rng,
    )
}
