use std::time::{Duration, Instant};

use rand::Rng;

use super::bridge::{bridge, sample_grasp_config, sample_placement_config, Endpoint};
use super::local::local_plan;
use super::tree::{sample_tree, SearchTree, TreeDirection, TreeVertex};
use super::{Classified, PlannerConfig};
use crate::gp_table::TableNode;
use crate::kinematics::WorldModel;
use crate::paths::{ManipulationPath, Mode, SingleModePath};
use crate::task_plans::{GuidanceGraph, QEdge, QNode};

/// Result of one extension step.
#[derive(Clone, Debug, PartialEq)]
pub enum Extension {
    /// The trees were joined: `bridge` runs from forward vertex `forward`
    /// to backward vertex `backward`.
    Reached {
        forward: usize,
        backward: usize,
        bridge: Vec<SingleModePath>,
    },
    Advanced(usize),
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub path: Option<ManipulationPath>,
    /// Table nodes realized by the solution, one per level.
    pub node_sequence: Vec<TableNode>,
    pub iterations: usize,
}

fn endpoint(tree: &SearchTree, i: usize) -> Endpoint<'_> {
    let v = tree.vertex(i);
    Endpoint {
        config: &v.config,
        held: v.held.as_ref(),
        is_root: i == 0,
    }
}

/// Orders `(a, ia)` and `(b, ib)` as forward and backward and bridges them.
fn join<R: Rng + ?Sized>(
    world: &WorldModel,
    (a, ia): (&SearchTree, usize),
    (b, ib): (&SearchTree, usize),
    kind: Mode,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Extension> {
    let (fw, fi, bw, bi) = match a.direction {
        TreeDirection::Forward => (a, ia, b, ib),
        TreeDirection::Backward => (b, ib, a, ia),
    };
    let segs = bridge(world, endpoint(fw, fi), endpoint(bw, bi), kind, cfg, rng)?;
    Some(Extension::Reached {
        forward: fi,
        backward: bi,
        bridge: segs,
    })
}

/// Guidance-graph edges leaving vertex `v` in the tree's growth direction.
fn growth_edges(tree: &SearchTree, v: &TreeVertex, q: &GuidanceGraph) -> Vec<QEdge> {
    let here = QNode { d: v.level, c: v.node };
    if !q.contains(&here) {
        return Vec::new();
    }
    match tree.direction {
        TreeDirection::Forward => q.out_edges(&here),
        TreeDirection::Backward => q.in_edges(&here),
    }
}

/// Extends tree `a` from vertex `v` along a random guidance-graph edge.
///
/// An edge into the other tree's root level is attempted as a direct
/// connection to that root. Any other edge samples a configuration of the
/// target class that keeps the object pose (transit) or the grasp (transfer)
/// of `v`, and joins it with a local plan. Failures count against the edge.
pub fn extend_from<R: Rng + ?Sized>(
    a: &mut SearchTree,
    b: &SearchTree,
    v: usize,
    q: &mut GuidanceGraph,
    world: &WorldModel,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Extension {
    let vert = a.vertex(v).clone();
    let edges = growth_edges(a, &vert, q);
    if edges.is_empty() {
        return Extension::Failed;
    }
    let e = edges[rng.gen_range(0..edges.len())];
    let (target, level) = match a.direction {
        TreeDirection::Forward => (e.to, e.d + 1),
        TreeDirection::Backward => (e.from, e.d),
    };
    if level == a.far_level() {
        if let Some(r) = join(world, (a, v), (b, 0), e.kind, cfg, rng) {
            return r;
        }
        q.record_failure(&e, cfg.threshold_n);
        return Extension::Failed;
    }
    let hints = [vert.config.q_rad.clone()];
    let sample = match e.kind {
        Mode::Transit => sample_grasp_config(world, &vert.config.object_pose, target.g, &hints, cfg, rng),
        Mode::Transfer => match &vert.held {
            Some(h) => sample_placement_config(world, target.p, h, &hints, cfg, rng),
            None => None,
        },
    };
    let Some(x) = sample else {
        q.record_failure(&e, cfg.threshold_n);
        return Extension::Failed;
    };
    let seg = match a.direction {
        TreeDirection::Forward => local_plan(world, &vert.config, &x.config, e.kind, &cfg.rrt, rng),
        TreeDirection::Backward => local_plan(world, &x.config, &vert.config, e.kind, &cfg.rrt, rng),
    };
    let Ok(seg) = seg else {
        q.record_failure(&e, cfg.threshold_n);
        return Extension::Failed;
    };
    Extension::Advanced(a.add(TreeVertex {
        config: x.config,
        node: target,
        level,
        held: Some(x.held),
        parent: Some(v),
        segment: Some(seg),
    }))
}

/// Tries to join a freshly added vertex `x` of tree `a` to the nearest
/// opposite-tree vertices one level further along a guidance-graph edge.
fn try_connect<R: Rng + ?Sized>(
    a: &SearchTree,
    b: &SearchTree,
    x: usize,
    q: &GuidanceGraph,
    world: &WorldModel,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Extension> {
    let vx = a.vertex(x);
    let level = a.next_level(vx.level)?;
    let edges = growth_edges(a, vx, q);
    let mut candidates: Vec<(f64, usize, Mode)> = b
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, w)| w.level == level)
        .filter_map(|(i, w)| {
            let e = edges.iter().find(|e| match a.direction {
                TreeDirection::Forward => e.to == w.node,
                TreeDirection::Backward => e.from == w.node,
            })?;
            Some((vx.config.joint_distance(&w.config), i, e.kind))
        })
        .collect();
    candidates.sort_by(|l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)));
    candidates
        .into_iter()
        .take(cfg.connect_candidates)
        .find_map(|(_, i, kind)| join(world, (a, x), (b, i), kind, cfg, rng))
}

fn extract(fw: &SearchTree, bw: &SearchTree, ext: &Extension) -> Option<(ManipulationPath, Vec<TableNode>)> {
    let Extension::Reached {
        forward,
        backward,
        bridge,
    } = ext
    else {
        return None;
    };
    let mut segs = fw.branch_segments(*forward);
    segs.extend(bridge.iter().cloned());
    segs.extend(bw.branch_segments(*backward));
    segs.retain(|s| s.waypoints().len() > 1);
    let mut nodes = fw.branch_nodes(*forward);
    nodes.extend(bw.branch_nodes(*backward));
    let path = if segs.is_empty() {
        ManipulationPath::empty(fw.vertex(0).config.clone())
    } else {
        ManipulationPath::from_segments(segs).ok()?.reduce()
    };
    Some((path, nodes))
}

/// Bidirectional search guided by `q`, alternating between the trees until
/// they connect, `q` loses its last start-to-goal path, or time runs out.
pub fn plan_path<R: Rng + ?Sized>(
    q: &mut GuidanceGraph,
    world: &WorldModel,
    start: &Classified,
    goal: &Classified,
    cfg: &PlannerConfig,
    budget: Duration,
    rng: &mut R,
) -> SearchOutcome {
    let clock = Instant::now();
    let depth = q.depth();
    let root = |c: &Classified, level: usize| TreeVertex {
        config: c.config.clone(),
        node: c.node,
        level,
        held: c.held,
        parent: None,
        segment: None,
    };
    let mut trees = [
        SearchTree::new(TreeDirection::Forward, depth, root(start, 0)),
        SearchTree::new(TreeDirection::Backward, depth, root(goal, depth)),
    ];
    let mut iterations = 0;
    let mut turn = 0;
    while clock.elapsed() < budget && q.has_path() {
        iterations += 1;
        let (left, right) = trees.split_at_mut(1);
        let (a, b) = if turn == 0 {
            (&mut left[0], &right[0])
        } else {
            (&mut right[0], &left[0])
        };
        let v = sample_tree(a, cfg.sample_weight_exponent, rng);
        let ext = match extend_from(a, b, v, q, world, cfg, rng) {
            Extension::Advanced(x) => try_connect(a, b, x, q, world, cfg, rng),
            r @ Extension::Reached { .. } => Some(r),
            Extension::Failed => None,
        };
        if let Some(r) = ext {
            if let Some((path, node_sequence)) = extract(&trees[0], &trees[1], &r) {
                return SearchOutcome {
                    path: Some(path),
                    node_sequence,
                    iterations,
                };
            }
        }
        turn ^= 1;
    }
    SearchOutcome {
        path: None,
        node_sequence: Vec::new(),
        iterations,
    }
}
