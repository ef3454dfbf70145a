use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Transform;
use crate::kinematics::{Carry, HeldObject, WorldModel};
use crate::paths::{CompositeConfig, Mode, SingleModePath, ENDPOINT_TOL};

/// Largest grasp change tolerated along a transfer path.
pub const GRASP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrtConfig {
    /// Largest joint-space step of one tree extension (rad, Euclidean).
    pub step_rad: f64,
    pub max_iterations: usize,
    /// Nominal collision-check spacing along a tree edge (rad, Euclidean).
    /// The conservative sweep falls back to a hundredth of it near contact.
    pub resolution_rad: f64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        RrtConfig {
            step_rad: 0.1,
            max_iterations: 2000,
            resolution_rad: 0.01,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalPlanError {
    #[error("endpoints do not share the object pose (transit) or the grasp (transfer)")]
    ModeMismatch,
    #[error("an endpoint is in collision")]
    InvalidEndpoint,
    #[error("no connection within the iteration budget")]
    ConnectFailed,
}

/// What a joint vector is checked against while moving in one mode.
#[derive(Clone, Copy, Debug)]
pub enum Validity {
    Transit(Transform),
    Transfer(HeldObject),
}

impl Validity {
    pub fn for_segment(world: &WorldModel, a: &CompositeConfig, mode: Mode) -> Validity {
        match mode {
            Mode::Transit => Validity::Transit(a.object_pose),
            Mode::Transfer => Validity::Transfer(HeldObject {
                gripper_in_object: a.object_pose.inverse() * world.robot.tool_pose(&a.q_rad),
                width_m: world
                    .held_from_config(a)
                    .map_or(world.gripper.max_opening_m, |h| h.width_m),
            }),
        }
    }

    pub fn carry(&self) -> Carry<'_> {
        match self {
            Validity::Transit(t) => Carry::Resting(t),
            Validity::Transfer(h) => Carry::Held(h),
        }
    }

    pub fn check(&self, world: &WorldModel, q: &[f64]) -> bool {
        world.is_free(q, self.carry())
    }

    /// Composite configuration of an intermediate joint vector.
    pub fn config(&self, world: &WorldModel, q: &[f64]) -> CompositeConfig {
        let pose = match self {
            Validity::Transit(t) => *t,
            Validity::Transfer(h) => world.held_object_pose(q, h),
        };
        CompositeConfig::new(q.to_vec(), pose)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

/// Conservative sweep of the straight joint-space segment from `a` to `b`.
///
/// From each checked point the sweep advances as far as the current
/// clearance provably cannot be used up, given a bound on how fast any body
/// point moves. Where the clearance is too small for that (at contact) it
/// advances by `min_step` and samples.
pub fn segment_free(world: &WorldModel, v: &Validity, a: &[f64], b: &[f64], min_step: f64) -> bool {
    let carry = v.carry();
    let Some(mut c) = world.clearance(a, carry) else {
        return false;
    };
    if !WorldModel::clearance_is_free(c) {
        return false;
    }
    let total = dist(a, b);
    if total == 0.0 {
        return true;
    }
    // two moving bodies approach each other at up to twice the point speed
    let rate = 2.0
        * world
            .motion_radii(carry)
            .iter()
            .zip(a.iter().zip(b))
            .map(|(r, (x, y))| r * (y - x).abs())
            .sum::<f64>()
        / total;
    let mut s = 0.0;
    loop {
        let safe = if c > 0.0 && rate > 0.0 { c / rate } else { 0.0 };
        if s + safe >= total {
            return true;
        }
        s = (s + safe.max(min_step)).min(total);
        match world.clearance(&lerp(a, b, s / total), carry) {
            Some(next) if WorldModel::clearance_is_free(next) => c = next,
            _ => return false,
        }
        if s >= total {
            return true;
        }
    }
}

/// Checks the straight segment from `a` to `b` at evenly spaced samples no
/// more than `resolution` apart, endpoints included.
pub fn sampled_segment_free(world: &WorldModel, v: &Validity, a: &[f64], b: &[f64], resolution: f64) -> bool {
    let n = (dist(a, b) / resolution).ceil().max(1.0) as usize;
    (0..=n).all(|i| v.check(world, &lerp(a, b, i as f64 / n as f64)))
}

/// True if `a` and `b` may be joined by a path of the given mode.
pub fn mode_compatible(world: &WorldModel, a: &CompositeConfig, b: &CompositeConfig, mode: Mode) -> bool {
    match mode {
        Mode::Transit => a.object_pose.approx_eq(&b.object_pose, ENDPOINT_TOL),
        Mode::Transfer => {
            let ga = a.object_pose.inverse() * world.robot.tool_pose(&a.q_rad);
            let gb = b.object_pose.inverse() * world.robot.tool_pose(&b.q_rad);
            ga.approx_eq(&gb, GRASP_TOL)
        }
    }
}

struct Tree {
    q: Vec<Vec<f64>>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: &[f64]) -> Tree {
        Tree {
            q: vec![root.to_vec()],
            parent: vec![0],
        }
    }

    fn nearest(&self, target: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.q.iter().enumerate() {
            let d = dist(q, target);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn branch(&self, mut i: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.q[i].clone()];
        while i != 0 {
            i = self.parent[i];
            out.push(self.q[i].clone());
        }
        out
    }
}

enum Step {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

fn extend(world: &WorldModel, v: &Validity, cfg: &RrtConfig, tree: &mut Tree, target: &[f64]) -> Step {
    let near = tree.nearest(target);
    let from = tree.q[near].clone();
    let d = dist(&from, target);
    let (to, reached) = if d <= cfg.step_rad {
        (target.to_vec(), true)
    } else {
        (lerp(&from, target, cfg.step_rad / d), false)
    };
    if !segment_free(world, v, &from, &to, cfg.resolution_rad / 100.0) {
        return Step::Trapped;
    }
    tree.q.push(to);
    tree.parent.push(near);
    let i = tree.q.len() - 1;
    if reached {
        Step::Reached(i)
    } else {
        Step::Advanced(i)
    }
}

fn connect(world: &WorldModel, v: &Validity, cfg: &RrtConfig, tree: &mut Tree, target: &[f64]) -> Option<usize> {
    loop {
        match extend(world, v, cfg, tree, target) {
            Step::Reached(i) => return Some(i),
            Step::Advanced(_) => {}
            Step::Trapped => return None,
        }
    }
}

/// Bidirectional RRT-connect between two configurations of one mode.
pub fn local_plan<R: Rng + ?Sized>(
    world: &WorldModel,
    a: &CompositeConfig,
    b: &CompositeConfig,
    mode: Mode,
    cfg: &RrtConfig,
    rng: &mut R,
) -> Result<SingleModePath, LocalPlanError> {
    if !mode_compatible(world, a, b, mode) {
        return Err(LocalPlanError::ModeMismatch);
    }
    let v = Validity::for_segment(world, a, mode);
    if !v.check(world, &a.q_rad) || !v.check(world, &b.q_rad) {
        return Err(LocalPlanError::InvalidEndpoint);
    }
    let finish = |joints: Vec<Vec<f64>>| {
        let n = joints.len();
        let waypoints = joints
            .into_iter()
            .enumerate()
            .map(|(i, q)| match i {
                0 => a.clone(),
                i if i == n - 1 => b.clone(),
                _ => v.config(world, &q),
            })
            .collect();
        SingleModePath::new(mode, waypoints).map_err(|_| LocalPlanError::ModeMismatch)
    };
    if a.same_as(b) {
        return SingleModePath::new(mode, vec![a.clone()]).map_err(|_| LocalPlanError::ModeMismatch);
    }
    if segment_free(world, &v, &a.q_rad, &b.q_rad, cfg.resolution_rad / 100.0) {
        return finish(vec![a.q_rad.clone(), b.q_rad.clone()]);
    }
    let limits = world.robot.limits();
    let mut ta = Tree::new(&a.q_rad);
    let mut tb = Tree::new(&b.q_rad);
    let mut a_side = true;
    for _ in 0..cfg.max_iterations {
        let target: Vec<f64> = limits.iter().map(|l| rng.gen_range(l[0]..=l[1])).collect();
        let new = match extend(world, &v, cfg, &mut ta, &target) {
            Step::Trapped => None,
            Step::Reached(i) | Step::Advanced(i) => Some(i),
        };
        if let Some(i) = new {
            let q_new = ta.q[i].clone();
            if let Some(j) = connect(world, &v, cfg, &mut tb, &q_new) {
                let (fa, fb) = if a_side { (&ta, &tb) } else { (&tb, &ta) };
                let (ia, ib) = if a_side { (i, j) } else { (j, i) };
                let mut joints = fa.branch(ia);
                joints.reverse();
                joints.extend(fb.branch(ib).into_iter().skip(1));
                return finish(joints);
            }
        }
        std::mem::swap(&mut ta, &mut tb);
        a_side = !a_side;
    }
    Err(LocalPlanError::ConnectFailed)
}
