use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{composite_distance, CompositeMetricConfig};
use crate::gp_table::TableError;
use crate::kinematics::{HeldObject, WorldModel};
use crate::object_gripper::{object_pose_from_placement, sample_placement};
use crate::paths::{CompositeConfig, ManipulationPath, Mode, SingleModePath};
use crate::planner::{
    bridge, classify_config, grasp_at, local_plan, sample_grasp_config, Endpoint, GpSample, PlannerConfig,
    PlanningError,
};

struct Vertex {
    config: CompositeConfig,
    held: Option<HeldObject>,
    parent: Option<usize>,
    /// Path to the parent, in execution order.
    segment: Option<SingleModePath>,
}

struct Tree {
    forward: bool,
    vertices: Vec<Vertex>,
}

impl Tree {
    fn new(forward: bool, config: CompositeConfig, held: Option<HeldObject>) -> Tree {
        Tree {
            forward,
            vertices: vec![Vertex {
                config,
                held,
                parent: None,
                segment: None,
            }],
        }
    }

    fn nearest(&self, target: &CompositeConfig, metric: &CompositeMetricConfig) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = composite_distance(&v.config, target, metric).unwrap_or(f64::INFINITY);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn endpoint(&self, i: usize) -> Endpoint<'_> {
        let v = &self.vertices[i];
        Endpoint {
            config: &v.config,
            held: v.held.as_ref(),
            is_root: i == 0,
        }
    }

    fn branch_segments(&self, mut i: usize) -> Vec<SingleModePath> {
        let mut out = Vec::new();
        while let Some(p) = self.vertices[i].parent {
            out.extend(self.vertices[i].segment.clone());
            i = p;
        }
        if self.forward {
            out.reverse();
        }
        out
    }
}

/// One primitive out of vertex `v`: a new grasp at the current object pose
/// (transit) or, when holding the object, a new placement near the sample
/// (transfer).
fn primitive<R: Rng + ?Sized>(
    world: &WorldModel,
    v: &Vertex,
    target: &CompositeConfig,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<(GpSample, Mode)> {
    let hints = [v.config.q_rad.clone(), target.q_rad.clone()];
    match v.held {
        Some(h) if rng.gen_bool(0.5) => grasp_at(
            world,
            &target.object_pose,
            &h.gripper_in_object,
            h.width_m,
            &hints,
            cfg,
            rng,
        )
        .map(|x| (x, Mode::Transfer)),
        _ => {
            let g = rng.gen_range(1..=world.object.num_grasp_classes());
            sample_grasp_config(world, &v.config.object_pose, g, &hints, cfg, rng).map(|x| (x, Mode::Transit))
        }
    }
}

/// Joins vertex `i` of `a` with vertex `j` of `b`, trying a transit and
/// then a transfer connection.
fn join<R: Rng + ?Sized>(
    world: &WorldModel,
    (a, i): (&Tree, usize),
    (b, j): (&Tree, usize),
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Option<Vec<SingleModePath>> {
    let (lo, hi) = if a.forward {
        (a.endpoint(i), b.endpoint(j))
    } else {
        (b.endpoint(j), a.endpoint(i))
    };
    [Mode::Transit, Mode::Transfer]
        .into_iter()
        .find_map(|kind| bridge(world, lo, hi, kind, cfg, rng))
}

/// Bidirectional tree search over composite configurations. Trees grow by
/// transit and transfer primitives from the vertex nearest a random
/// composite sample; each new vertex is joined to its nearest neighbor in
/// the other tree when possible.
pub fn pmp_plan(
    world: &WorldModel,
    start: &CompositeConfig,
    goal: &CompositeConfig,
    cfg: &PlannerConfig,
    metric: &CompositeMetricConfig,
) -> Result<ManipulationPath, PlanningError> {
    cfg.validate()?;
    metric
        .validate()
        .map_err(|e| PlanningError::InvalidConfig(e.to_string()))?;
    let clock = Instant::now();
    let budget = Duration::from_secs_f64(cfg.t_max_s);
    let classes = world.object.placement_classes().map_err(TableError::from)?;
    let s = classify_config(world, &classes, start)?;
    let g = classify_config(world, &classes, goal)?;
    if start.same_as(goal) {
        return Ok(ManipulationPath::empty(start.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trees = [Tree::new(true, s.config, s.held), Tree::new(false, g.config, g.held)];
    if let Some(segs) = join(world, (&trees[0], 0), (&trees[1], 0), cfg, &mut rng) {
        return extract(&trees[0], 0, segs, &trees[1], 0);
    }
    let mut turn = 0;
    while clock.elapsed() < budget {
        let class = &classes[rng.gen_range(0..classes.len())];
        let Ok(params) = sample_placement(
            &world.object,
            class,
            &world.table,
            cfg.placement_region.as_ref(),
            &mut rng,
        ) else {
            continue;
        };
        let Ok(pose) = object_pose_from_placement(&world.object, class, &params, &world.table) else {
            continue;
        };
        let target = CompositeConfig::new(world.robot.random_config(&mut rng), pose);
        let (left, right) = trees.split_at_mut(1);
        let (a, b) = if turn == 0 {
            (&mut left[0], &right[0])
        } else {
            (&mut right[0], &left[0])
        };
        turn ^= 1;
        let vi = a.nearest(&target, metric);
        let v = &a.vertices[vi];
        let Some((x, kind)) = primitive(world, v, &target, cfg, &mut rng) else {
            continue;
        };
        let seg = if a.forward {
            local_plan(world, &v.config, &x.config, kind, &cfg.rrt, &mut rng)
        } else {
            local_plan(world, &x.config, &v.config, kind, &cfg.rrt, &mut rng)
        };
        let Ok(seg) = seg else {
            continue;
        };
        a.vertices.push(Vertex {
            config: x.config,
            held: Some(x.held),
            parent: Some(vi),
            segment: Some(seg),
        });
        let xi = a.vertices.len() - 1;
        let wi = b.nearest(&a.vertices[xi].config, metric);
        if let Some(segs) = join(world, (a, xi), (b, wi), cfg, &mut rng) {
            let (fw, fi, bw, bi) = if a.forward { (&*a, xi, b, wi) } else { (b, wi, &*a, xi) };
            return extract(fw, fi, segs, bw, bi);
        }
    }
    Err(PlanningError::NoSolution)
}

fn extract(
    fw: &Tree,
    fi: usize,
    bridge: Vec<SingleModePath>,
    bw: &Tree,
    bi: usize,
) -> Result<ManipulationPath, PlanningError> {
    let mut segs = fw.branch_segments(fi);
    segs.extend(bridge);
    segs.extend(bw.branch_segments(bi));
    segs.retain(|s| s.waypoints().len() > 1);
    if segs.is_empty() {
        return Ok(ManipulationPath::empty(fw.vertices[0].config.clone()));
    }
    Ok(ManipulationPath::from_segments(segs)?.reduce())
}
