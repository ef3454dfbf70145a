use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{obb_overlap, Transform};
use crate::gp_table::TableError;
use crate::kinematics::{IkConfig, WorldModel};
use crate::object_gripper::Grasp;
use crate::object_gripper::{
    grasp_sweep, grasp_transform, grasp_width, object_pose_from_placement, GraspClass, GripperModel, ObjectModel,
    PlacementParams,
};
use crate::paths::{CompositeConfig, ManipulationPath, Mode, SingleModePath, ENDPOINT_TOL};
use crate::planner::{grasp_at, local_plan, PlannerConfig, PlanningError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbmpConfig {
    /// Rotation samples per placement class.
    pub rotations: usize,
    /// Where the discretized placements sit; the table center when unset.
    pub nominal_xy_m: Option<[f64; 2]>,
    pub ik: IkConfig,
    pub seed: u64,
}

impl Default for DbmpConfig {
    fn default() -> Self {
        DbmpConfig {
            rotations: 8,
            nominal_xy_m: None,
            ik: IkConfig::default(),
            seed: 0,
        }
    }
}

/// A grasp from the deterministic sweep, with its gripper pose in the
/// object frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteGrasp {
    pub grasp: Grasp,
    pub gripper_in_object: Transform,
    pub width_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscretePlacement {
    /// Placement class, or 0 for a query placement added as given.
    pub class: usize,
    pub theta_rad: f64,
    pub object_pose: Transform,
}

/// First layer: placements. Second layer: grasps valid at each placement.
/// Two placements are adjacent iff they share a valid grasp.
#[derive(Clone, Debug, PartialEq)]
pub struct RegraspGraph {
    pub placements: Vec<DiscretePlacement>,
    pub grasps: Vec<DiscreteGrasp>,
    /// Per placement: valid grasp index and the joint solution realizing it.
    pub valid: Vec<BTreeMap<usize, Vec<f64>>>,
    pub adjacency: Vec<BTreeSet<usize>>,
}

impl RegraspGraph {
    pub fn from_validity(
        placements: Vec<DiscretePlacement>,
        grasps: Vec<DiscreteGrasp>,
        valid: Vec<BTreeMap<usize, Vec<f64>>>,
    ) -> RegraspGraph {
        let mut by_grasp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (p, v) in valid.iter().enumerate() {
            for &g in v.keys() {
                by_grasp.entry(g).or_default().push(p);
            }
        }
        let mut adjacency = vec![BTreeSet::new(); placements.len()];
        for ps in by_grasp.values() {
            for &a in ps {
                for &b in ps {
                    if a != b {
                        adjacency[a].insert(b);
                    }
                }
            }
        }
        RegraspGraph {
            placements,
            grasps,
            valid,
            adjacency,
        }
    }

    pub fn common_grasps(&self, a: usize, b: usize) -> Vec<usize> {
        self.valid[a]
            .keys()
            .filter(|g| self.valid[b].contains_key(g))
            .copied()
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn find_placement(&self, pose: &Transform) -> Option<usize> {
        self.placements
            .iter()
            .position(|p| p.object_pose.approx_eq(pose, ENDPOINT_TOL))
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        let mut seen = vec![false; self.placements.len()];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(n) = queue.pop_front() {
            if n == b {
                return true;
            }
            for &m in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        false
    }
}

/// Sweep grasps of every class whose gripper, closed to the grasp width,
/// does not interpenetrate the object, without repeated gripper poses.
pub fn grasp_set(object: &ObjectModel, gripper: &GripperModel) -> Vec<DiscreteGrasp> {
    let mut out = Vec::new();
    for g in 1..=object.num_grasp_classes() {
        let Ok(class) = GraspClass::from_index(g, object.num_boxes()) else {
            continue;
        };
        let Ok(sweep) = grasp_sweep(object, gripper, &class) else {
            continue;
        };
        for params in sweep {
            let grasp = Grasp { class, params };
            let Ok(pose) = grasp_transform(object, gripper, &class, &params) else {
                continue;
            };
            let width = grasp_width(object, &grasp);
            let hits = gripper.bodies(width).iter().any(|gb| {
                object
                    .boxes()
                    .iter()
                    .any(|ob| obb_overlap(gb, &pose, ob, &Transform::identity()))
            });
            let duplicate = out.iter().any(|d: &DiscreteGrasp| {
                (d.width_m - width).abs() < ENDPOINT_TOL && d.gripper_in_object.approx_eq(&pose, ENDPOINT_TOL)
            });
            if !hits && !duplicate {
                out.push(DiscreteGrasp {
                    grasp,
                    gripper_in_object: pose,
                    width_m: width,
                });
            }
        }
    }
    out
}

/// Discretizes placements (every class at `cfg.rotations` evenly spaced
/// angles about a nominal location, plus `extra` poses as given), then marks
/// each sweep grasp valid where it is reachable and collision-free.
pub fn dbmp_build(world: &WorldModel, cfg: &DbmpConfig, extra: &[Transform]) -> Result<RegraspGraph, PlanningError> {
    if cfg.rotations < 1 {
        return Err(PlanningError::InvalidConfig("rotations must be at least 1".into()));
    }
    let classes = world.object.placement_classes().map_err(TableError::from)?;
    let [x, y] = cfg.nominal_xy_m.unwrap_or(world.table.center_xy_m);
    let mut placements = Vec::new();
    for class in &classes {
        for k in 0..cfg.rotations {
            let theta = -PI + 2.0 * PI * k as f64 / cfg.rotations as f64;
            let params = PlacementParams {
                x_m: x,
                y_m: y,
                theta_rad: theta,
            };
            if let Ok(pose) = object_pose_from_placement(&world.object, class, &params, &world.table) {
                placements.push(DiscretePlacement {
                    class: class.index,
                    theta_rad: theta,
                    object_pose: pose,
                });
            }
        }
    }
    for pose in extra {
        placements.push(DiscretePlacement {
            class: 0,
            theta_rad: 0.0,
            object_pose: *pose,
        });
    }
    let grasps = grasp_set(&world.object, &world.gripper);
    let pcfg = PlannerConfig {
        ik: cfg.ik,
        ..Default::default()
    };
    let slab = world.table.slab();
    let valid = placements
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let mut out = BTreeMap::new();
            for (gi, g) in grasps.iter().enumerate() {
                let hand = p.object_pose * g.gripper_in_object;
                if world
                    .gripper
                    .bodies(g.width_m)
                    .iter()
                    .any(|b| obb_overlap(b, &hand, &slab, &Transform::identity()))
                {
                    continue;
                }
                if let Some(x) = grasp_at(
                    world,
                    &p.object_pose,
                    &g.gripper_in_object,
                    g.width_m,
                    &[],
                    &pcfg,
                    &mut rng,
                ) {
                    out.insert(gi, x.config.q_rad);
                }
            }
            out
        })
        .collect();
    Ok(RegraspGraph::from_validity(placements, grasps, valid))
}

type PlanKey = (Mode, usize, usize, usize);

struct Motion<'a> {
    world: &'a WorldModel,
    graph: &'a RegraspGraph,
    cfg: &'a PlannerConfig,
    cache: HashMap<PlanKey, Option<SingleModePath>>,
    rng: ChaCha8Rng,
}

impl Motion<'_> {
    fn config(&self, p: usize, g: usize) -> CompositeConfig {
        CompositeConfig::new(self.graph.valid[p][&g].clone(), self.graph.placements[p].object_pose)
    }

    /// Transit at placement `p` between grasps `a` and `b`, or transfer with
    /// grasp `g` between placements `a` and `b`.
    fn plan(&mut self, key: PlanKey) -> Option<SingleModePath> {
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let (kind, x, a, b) = key;
        let (from, to) = match kind {
            Mode::Transit => (self.config(x, a), self.config(x, b)),
            Mode::Transfer => (self.config(a, x), self.config(b, x)),
        };
        let out = local_plan(self.world, &from, &to, kind, &self.cfg.rrt, &mut self.rng).ok();
        self.cache.insert(key, out.clone());
        out
    }
}

/// Searches placement sequences from the start placement to the goal
/// placement depth-first with increasing depth limits, assigns grasps to
/// each sequence, and plans the motions. Placement and grasp orders are
/// shuffled with the configured seed.
pub fn dbmp_plan(
    graph: &RegraspGraph,
    world: &WorldModel,
    start: &CompositeConfig,
    goal: &CompositeConfig,
    cfg: &PlannerConfig,
) -> Result<ManipulationPath, PlanningError> {
    cfg.validate()?;
    let clock = Instant::now();
    let budget = Duration::from_secs_f64(cfg.t_max_s);
    if start.same_as(goal) {
        return Ok(ManipulationPath::empty(start.clone()));
    }
    let missing = || PlanningError::InvalidConfig("query placement is not in the regrasp graph".into());
    let s = graph.find_placement(&start.object_pose).ok_or_else(missing)?;
    let g = graph.find_placement(&goal.object_pose).ok_or_else(missing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if s == g {
        return local_plan(world, start, goal, Mode::Transit, &cfg.rrt, &mut rng)
            .map(ManipulationPath::single)
            .map_err(|_| PlanningError::NoSolution);
    }
    if !graph.connected(s, g) {
        return Err(PlanningError::NoSolution);
    }
    let mut adjacency: Vec<Vec<usize>> = graph.adjacency.iter().map(|a| a.iter().copied().collect()).collect();
    for a in &mut adjacency {
        a.shuffle(&mut rng);
    }
    let mut motion = Motion {
        world,
        graph,
        cfg,
        cache: HashMap::new(),
        rng,
    };
    let out_of_time = || clock.elapsed() >= budget;
    for depth in 1..graph.placements.len() {
        let mut seq = vec![s];
        if let Some(p) = dfs(&adjacency, g, depth, &mut seq, &mut |seq| {
            assign_grasps(&mut motion, seq, start, goal, &out_of_time)
        }) {
            return Ok(p);
        }
        if out_of_time() {
            break;
        }
    }
    Err(PlanningError::NoSolution)
}

/// Simple placement paths from `seq`'s last node to `goal` with exactly
/// `depth` edges; stops at the first sequence for which `visit` succeeds.
fn dfs<T>(
    adjacency: &[Vec<usize>],
    goal: usize,
    depth: usize,
    seq: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> Option<T>,
) -> Option<T> {
    let last = *seq.last().expect("nonempty sequence");
    if seq.len() == depth + 1 {
        return if last == goal { visit(seq) } else { None };
    }
    if last == goal {
        return None;
    }
    for &n in &adjacency[last] {
        if seq.contains(&n) {
            continue;
        }
        seq.push(n);
        let r = dfs(adjacency, goal, depth, seq, visit);
        seq.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

fn assign_grasps(
    motion: &mut Motion,
    seq: &[usize],
    start: &CompositeConfig,
    goal: &CompositeConfig,
    out_of_time: &dyn Fn() -> bool,
) -> Option<ManipulationPath> {
    if out_of_time() {
        return None;
    }
    let mut choices: Vec<Vec<usize>> = seq.windows(2).map(|w| motion.graph.common_grasps(w[0], w[1])).collect();
    for c in &mut choices {
        c.shuffle(&mut motion.rng);
    }
    let first = *seq.first()?;
    let last = *seq.last()?;
    let mut grasps = Vec::with_capacity(choices.len());
    let mut segs = Vec::with_capacity(2 * choices.len() + 1);
    search_grasps(motion, seq, &choices, &mut grasps, &mut segs, out_of_time)?;
    let lead = local_plan(
        motion.world,
        start,
        &motion.config(first, grasps[0]),
        Mode::Transit,
        &motion.cfg.rrt,
        &mut motion.rng,
    )
    .ok()?;
    let tail = local_plan(
        motion.world,
        &motion.config(last, *grasps.last()?),
        goal,
        Mode::Transit,
        &motion.cfg.rrt,
        &mut motion.rng,
    )
    .ok()?;
    let mut all = vec![lead];
    all.extend(segs);
    all.push(tail);
    all.retain(|s| s.waypoints().len() > 1);
    ManipulationPath::from_segments(all).ok().map(|p| p.reduce())
}

/// Depth-first grasp assignment: grasp `i` carries the object from
/// `seq[i]` to `seq[i + 1]`, and consecutive grasps differ.
fn search_grasps(
    motion: &mut Motion,
    seq: &[usize],
    choices: &[Vec<usize>],
    grasps: &mut Vec<usize>,
    segs: &mut Vec<SingleModePath>,
    out_of_time: &dyn Fn() -> bool,
) -> Option<()> {
    let i = grasps.len();
    if i == choices.len() {
        return Some(());
    }
    for &gr in &choices[i] {
        if out_of_time() {
            return None;
        }
        let mut added = 0;
        if let Some(&prev) = grasps.last() {
            if prev == gr {
                continue;
            }
            let Some(t) = motion.plan((Mode::Transit, seq[i], prev, gr)) else {
                continue;
            };
            segs.push(t);
            added += 1;
        }
        if let Some(t) = motion.plan((Mode::Transfer, gr, seq[i], seq[i + 1])) {
            segs.push(t);
            added += 1;
            grasps.push(gr);
            if search_grasps(motion, seq, choices, grasps, segs, out_of_time).is_some() {
                return Some(());
            }
            grasps.pop();
        }
        segs.truncate(segs.len() - added);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn placement(i: usize) -> DiscretePlacement {
        DiscretePlacement {
            class: 1,
            theta_rad: i as f64,
            object_pose: Transform::identity(),
        }
    }

    fn grasp() -> DiscreteGrasp {
        let class = GraspClass::from_index(3, 1).unwrap();
        DiscreteGrasp {
            grasp: Grasp {
                class,
                params: crate::object_gripper::GraspParams {
                    lateral_axis: 0,
                    slide_offset: 0.0,
                    depth_offset: 0.0,
                    roll: 0.0,
                },
            },
            gripper_in_object: Transform::identity(),
            width_m: 0.0,
        }
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize, p: f64) -> RegraspGraph {
        let valid = (0..n)
            .map(|_| (0..m).filter(|_| rng.gen_bool(p)).map(|g| (g, vec![])).collect())
            .collect();
        RegraspGraph::from_validity((0..n).map(placement).collect(), vec![grasp(); m], valid)
    }

    #[test]
    fn edge_rule_matches_pairwise_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let n = rng.gen_range(1..=50);
            let m = rng.gen_range(1..=30);
            let p = rng.gen_range(0.0..0.2);
            let graph = random_graph(&mut rng, n, m, p);
            for a in 0..n {
                for b in 0..n {
                    let shared = graph.valid[a].keys().any(|g| graph.valid[b].contains_key(g));
                    assert_eq!(graph.adjacency[a].contains(&b), a != b && shared);
                }
            }
        }
    }

    #[test]
    fn single_shared_grasp_makes_an_edge() {
        let valid = vec![
            BTreeMap::from([(0, vec![]), (1, vec![])]),
            BTreeMap::from([(1, vec![]), (2, vec![])]),
            BTreeMap::from([(3, vec![])]),
            BTreeMap::new(),
        ];
        let graph = RegraspGraph::from_validity((0..4).map(placement).collect(), vec![grasp(); 4], valid);
        assert!(graph.adjacency[0].contains(&1) && graph.adjacency[1].contains(&0));
        assert_eq!(graph.common_grasps(0, 1), vec![1]);
        assert!(graph.adjacency[2].is_empty());
        assert!(graph.adjacency[3].is_empty());
        assert!(!graph.connected(0, 3));
        assert_eq!(graph.num_edges(), 1);
    }

    #[test]
    fn dfs_finds_sequences_of_exact_depth() {
        let adjacency = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let mut found = Vec::new();
        for depth in 1..3 {
            let mut seq = vec![0];
            dfs::<()>(&adjacency, 2, depth, &mut seq, &mut |s| {
                found.push(s.to_vec());
                None
            });
        }
        assert_eq!(found, vec![vec![0, 2], vec![0, 1, 2]]);
    }
}
