//! Guided manipulation planning: the outer loop over plan lengths, the
//! guidance-graph-driven bidirectional tree search, and the mode-aware
//! local planner.

mod bridge;
mod local;
mod search;
mod tree;

pub use bridge::{bridge, grasp_at, sample_grasp_config, sample_placement_config, Endpoint, GpSample};
pub use local::{
    local_plan, mode_compatible, sampled_segment_free, segment_free, LocalPlanError, RrtConfig, Validity, GRASP_TOL,
};
pub use search::{extend_from, plan_path, Extension, SearchOutcome};
pub use tree::{sample_tree, SearchTree, TreeDirection, TreeVertex};

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PlacementClass;
use crate::gp_table::{GpTable, QuerySpec, TableError, TableNode};
use crate::kinematics::{HeldObject, IkConfig, WorldModel};
use crate::object_gripper::{classify_placement, recognize_grasp, PlacementRegion};
use crate::paths::{CompositeConfig, ManipulationPath, Mode, PathError};
use crate::task_plans::{plans_of_length, shortest_plan_length, GuidanceGraph, PlanError, TaskPlan};

/// Tolerance for recognizing a resting object pose.
pub const CLASSIFY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("no solution found within the time budget")]
    NoSolution,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("configuration is neither a stable placement nor a grasp")]
    UnclassifiableConfig,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub t_max_s: f64,
    /// Failed attempts tolerated per guidance-graph edge before removal.
    pub threshold_n: u32,
    /// Plan-length increment; chosen from the query endpoints when unset.
    pub increment: Option<usize>,
    pub rrt: RrtConfig,
    pub ik: IkConfig,
    pub sample_weight_exponent: f64,
    pub seed: u64,
    /// Where intermediate placements are sampled; the whole table when unset.
    pub placement_region: Option<PlacementRegion>,
    /// Opposite-tree vertices tried when connecting a new vertex.
    pub connect_candidates: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            t_max_s: 60.0,
            threshold_n: 20,
            increment: None,
            rrt: RrtConfig::default(),
            ik: IkConfig::default(),
            sample_weight_exponent: 1.0,
            seed: 0,
            placement_region: None,
            connect_candidates: 3,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanningError> {
        let bad = |s: &str| Err(PlanningError::InvalidConfig(s.into()));
        if !(self.t_max_s > 0.0) {
            return bad("t_max_s must be positive");
        }
        if self.threshold_n < 1 {
            return bad("threshold_n must be at least 1");
        }
        if !matches!(self.increment, None | Some(1) | Some(2)) {
            return bad("increment must be 1 or 2");
        }
        if !(self.rrt.step_rad > 0.0 && self.rrt.resolution_rad > 0.0) {
            return bad("rrt step and resolution must be positive");
        }
        if self.ik.seeds < 1 {
            return bad("ik.seeds must be at least 1");
        }
        if !(self.sample_weight_exponent >= 0.0) {
            return bad("sample_weight_exponent must be nonnegative");
        }
        Ok(())
    }
}

/// A query endpoint with its table node, its grasp if the gripper holds the
/// object, and its placement class if the object rests on the table.
#[derive(Clone, Debug, PartialEq)]
pub struct Classified {
    pub config: CompositeConfig,
    pub node: TableNode,
    pub held: Option<HeldObject>,
}

pub fn classify_config(
    world: &WorldModel,
    classes: &[PlacementClass],
    config: &CompositeConfig,
) -> Result<Classified, PlanningError> {
    if !world.robot.within_limits(&config.q_rad) {
        return Err(PlanningError::UnclassifiableConfig);
    }
    let placement =
        classify_placement(&world.object, classes, &config.object_pose, &world.table, CLASSIFY_TOL).map(|(p, _)| p);
    let gripper_in_object = config.object_pose.inverse() * world.robot.tool_pose(&config.q_rad);
    let grasp = recognize_grasp(&world.object, &world.gripper, &gripper_in_object);
    let spec = QuerySpec {
        placement,
        grasp: grasp.map(|g| g.class.index()),
    };
    let node = spec.node().map_err(|_| PlanningError::UnclassifiableConfig)?;
    let held = world.held_from_config(config);
    Ok(Classified {
        config: config.clone(),
        node,
        held,
    })
}

/// One when either endpoint is both a grasp and a placement; two otherwise,
/// which keeps every plan alternating.
pub fn choose_path_length_increment(start: &TableNode, goal: &TableNode) -> usize {
    let in_both = |n: &TableNode| n.p != 0 && n.g != 0;
    if in_both(start) || in_both(goal) {
        1
    } else {
        2
    }
}

/// A successful query.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub path: ManipulationPath,
    /// Plan length `k` of the guidance graph that produced the path.
    pub plan_length: usize,
    /// Table nodes visited by the solution, one per level.
    pub node_sequence: Vec<TableNode>,
    pub plan_time: Duration,
}

/// Task plans and the guidance graph for the first plan length with any
/// plans, as printed by a dry run.
pub fn dry_run(
    world: &WorldModel,
    table: &GpTable,
    start: &CompositeConfig,
    goal: &CompositeConfig,
) -> Result<(Vec<TaskPlan>, GuidanceGraph), PlanningError> {
    let classes = world.object.placement_classes().map_err(TableError::from)?;
    let s = classify_config(world, &classes, start)?;
    let g = classify_config(world, &classes, goal)?;
    let t = table.add_query_nodes(&spec_of(&s.node), &spec_of(&g.node))?;
    let l = shortest_plan_length(&t, &s.node, &g.node)?;
    let delta = choose_path_length_increment(&s.node, &g.node);
    let mut k = l.max(1);
    let mut plans = plans_of_length(&t, k, &s.node, &g.node);
    while plans.is_empty() && k <= 2 * t.len() + 1 {
        k += delta;
        plans = plans_of_length(&t, k, &s.node, &g.node);
    }
    let q = GuidanceGraph::from_plans(&plans)?;
    Ok((plans, q))
}

fn spec_of(n: &TableNode) -> QuerySpec {
    QuerySpec {
        placement: (n.p != 0).then_some(n.p),
        grasp: (n.g != 0).then_some(n.g),
    }
}

/// Plans from `start` to `goal`, trying plan lengths `l, l + Δ, ...` until a
/// path is found or the time budget runs out.
pub fn plan(
    world: &WorldModel,
    table: &GpTable,
    start: &CompositeConfig,
    goal: &CompositeConfig,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanningError> {
    cfg.validate()?;
    let clock = Instant::now();
    let budget = Duration::from_secs_f64(cfg.t_max_s);
    let classes = world.object.placement_classes().map_err(TableError::from)?;
    let s = classify_config(world, &classes, start)?;
    let g = classify_config(world, &classes, goal)?;
    if start.same_as(goal) {
        return Ok(PlanResult {
            path: ManipulationPath::empty(start.clone()),
            plan_length: 0,
            node_sequence: vec![s.node],
            plan_time: clock.elapsed(),
        });
    }
    let t = table.add_query_nodes(&spec_of(&s.node), &spec_of(&g.node))?;
    let l = shortest_plan_length(&t, &s.node, &g.node)?;
    let delta = cfg
        .increment
        .unwrap_or_else(|| choose_path_length_increment(&s.node, &g.node));
    // a same-node query still needs at least one motion
    let mut k = l.max(1);
    // no alternating plan visits a node more than twice
    let k_max = 2 * t.len() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while clock.elapsed() < budget && k <= k_max {
        let plans = plans_of_length(&t, k, &s.node, &g.node);
        if !plans.is_empty() {
            let mut q = GuidanceGraph::from_plans(&plans)?;
            let remaining = budget.saturating_sub(clock.elapsed());
            let out = plan_path(&mut q, world, &s, &g, cfg, remaining, &mut rng);
            if let Some(path) = out.path {
                return Ok(PlanResult {
                    path,
                    plan_length: k,
                    node_sequence: out.node_sequence,
                    plan_time: clock.elapsed(),
                });
            }
        }
        k += delta;
    }
    Err(PlanningError::NoSolution)
}

/// Why a path fails the audit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("path is not irreducible")]
    Reducible,
    #[error("segment {0} collides")]
    Collision(usize),
    #[error("segment {0} moves the object during transit")]
    ObjectMoved(usize),
    #[error("segment {0} changes the grasp during transfer")]
    GraspChanged(usize),
    #[error("segment {0} does not start where the previous one ended")]
    Gap(usize),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Re-validates every segment with collision checks spaced `resolution_rad`
/// apart along each waypoint interval, plus the mode invariants.
pub fn audit_path(world: &WorldModel, path: &ManipulationPath, resolution_rad: f64) -> Result<(), AuditError> {
    if !path.is_irreducible() {
        return Err(AuditError::Reducible);
    }
    let mut prev: Option<&CompositeConfig> = None;
    for (i, seg) in path.segments().enumerate() {
        if let Some(p) = prev {
            if !p.same_as(seg.start()) {
                return Err(AuditError::Gap(i));
            }
        }
        prev = Some(seg.end());
        match seg.kind {
            Mode::Transit if seg.object_deviation() > 1e-9 => return Err(AuditError::ObjectMoved(i)),
            Mode::Transfer if seg.grasp_deviation(|q| world.robot.tool_pose(q)) > GRASP_TOL => {
                return Err(AuditError::GraspChanged(i))
            }
            _ => {}
        }
        let v = Validity::for_segment(world, seg.start(), seg.kind);
        if !v.check(world, &seg.start().q_rad) {
            return Err(AuditError::Collision(i));
        }
        for pair in seg.waypoints().windows(2) {
            if !sampled_segment_free(world, &v, &pair[0].q_rad, &pair[1].q_rad, resolution_rad) {
                return Err(AuditError::Collision(i));
            }
        }
    }
    Ok(())
}
