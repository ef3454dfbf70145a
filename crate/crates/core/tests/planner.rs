mod common;

use std::time::Instant;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regrasp::gp_table::{build_table, TableNode};
use regrasp::harness::Scene;
use regrasp::paths::{CompositeConfig, Mode};
use regrasp::planner::{
    audit_path, classify_config, dry_run, extend_from, plan, Classified, Extension, PlannerConfig, PlanningError,
    SearchTree, TreeDirection, TreeVertex,
};
use regrasp::task_plans::{GuidanceGraph, QNode};

const AUDIT_RES: f64 = 1e-3;

fn classified(s: &Scene, c: &CompositeConfig) -> Classified {
    let classes = s.world.object.placement_classes().unwrap();
    classify_config(&s.world, &classes, c).unwrap()
}

fn root(c: &Classified, level: usize) -> TreeVertex {
    TreeVertex {
        config: c.config.clone(),
        node: c.node,
        level,
        held: c.held,
        parent: None,
        segment: None,
    }
}

/// Forward and backward roots and the guidance graph of the scene query.
fn setup(s: &Scene) -> (SearchTree, SearchTree, GuidanceGraph) {
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    let (_, q) = dry_run(w, &table, &s.start, &s.goal).unwrap();
    let (a, b) = (classified(s, &s.start), classified(s, &s.goal));
    let d = q.depth();
    (
        SearchTree::new(TreeDirection::Forward, d, root(&a, 0)),
        SearchTree::new(TreeDirection::Backward, d, root(&b, d)),
        q,
    )
}

fn cfg(seed: u64, t_max_s: f64) -> PlannerConfig {
    PlannerConfig {
        seed,
        t_max_s,
        ..Default::default()
    }
}

fn solve(s: &Scene, seed: u64) -> regrasp::planner::PlanResult {
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    plan(w, &table, &s.start, &s.goal, &cfg(seed, 60.0)).unwrap()
}

/// The box scene with the robot moved and the object left where it is.
fn arm_only_scene() -> Scene {
    let mut s = scene("box");
    s.goal = CompositeConfig::new(vec![0.4, 0.2, -0.3, 0.0, 0.5, 0.0], s.start.object_pose);
    s
}

#[test]
fn one_edge_query_is_reached_directly() {
    let s = arm_only_scene();
    let (mut fw, bw, mut q) = setup(&s);
    assert_eq!(q.depth(), 1);
    assert_eq!(q.num_edges(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match extend_from(&mut fw, &bw, 0, &mut q, &s.world, &cfg(0, 10.0), &mut rng) {
        Extension::Reached {
            forward,
            backward,
            bridge,
        } => {
            assert_eq!((forward, backward), (0, 0));
            assert_eq!(bridge.len(), 1);
            assert_eq!(bridge[0].kind, Mode::Transit);
            assert!(bridge[0].start().same_as(&s.start));
            assert!(bridge[0].end().same_as(&s.goal));
        }
        other => panic!("expected a direct connection, got {other:?}"),
    }
}

#[test]
fn arm_only_query_needs_no_transition() {
    let s = arm_only_scene();
    let r = solve(&s, 1);
    assert_eq!(r.path.transitions().unwrap(), 0);
    assert_eq!(r.path.kinds(), vec![Mode::Transit]);
    audit_path(&s.world, &r.path, AUDIT_RES).unwrap();
}

#[test]
fn extension_follows_the_guidance_edge() {
    let s = scene("box");
    let (mut fw, bw, mut q) = setup(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let next: Vec<TableNode> = q
        .out_edges(&QNode {
            d: 0,
            c: fw.vertex(0).node,
        })
        .iter()
        .map(|e| e.to)
        .collect();
    let mut advanced = None;
    for _ in 0..20 {
        if let Extension::Advanced(i) = extend_from(&mut fw, &bw, 0, &mut q, &s.world, &cfg(3, 10.0), &mut rng) {
            advanced = Some(i);
            break;
        }
    }
    let i = advanced.expect("the root extends within 20 tries");
    let v = fw.vertex(i);
    assert_eq!(v.level, 1);
    assert!(next.contains(&v.node));
    assert_eq!(v.parent, Some(0));
    assert!(v.held.is_some());
    let seg = v.segment.as_ref().unwrap();
    assert_eq!(seg.kind, Mode::Transit);
    assert!(seg.start().same_as(&s.start));
    assert!(seg.end().object_pose.approx_eq(&s.start.object_pose, 1e-9));
}

#[test]
fn vertex_outside_the_guidance_graph_fails() {
    let s = scene("box");
    let (mut fw, bw, mut q) = setup(&s);
    let mut stray = fw.vertex(0).clone();
    stray.level = 3;
    let i = fw.add(stray);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let before = q.num_edges();
    assert_eq!(
        extend_from(&mut fw, &bw, i, &mut q, &s.world, &cfg(0, 10.0), &mut rng),
        Extension::Failed
    );
    assert_eq!(q.num_edges(), before);
}

#[test]
fn unreachable_edge_is_removed_after_threshold_failures() {
    let mut s = scene("box");
    // table far outside the arm's reach
    s.world.table.center_xy_m = [3.0, 0.0];
    let far = |c: &CompositeConfig| {
        let shift = regrasp::geometry::Transform::from_translation(nalgebra::Vector3::new(2.5, 0.0, 0.0));
        CompositeConfig::new(c.q_rad.clone(), shift * c.object_pose)
    };
    s.start = far(&s.start);
    s.goal = far(&s.goal);
    let (mut fw, bw, mut q) = setup(&s);
    let config = PlannerConfig {
        threshold_n: 3,
        ..cfg(0, 10.0)
    };
    let root_edges = q.out_edges(&QNode {
        d: 0,
        c: fw.vertex(0).node,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..3 * root_edges.len() + 3 {
        assert_eq!(
            extend_from(&mut fw, &bw, 0, &mut q, &s.world, &config, &mut rng),
            Extension::Failed
        );
    }
    assert!(q
        .out_edges(&QNode {
            d: 0,
            c: fw.vertex(0).node
        })
        .is_empty());
    assert!(!q.has_path());
}

#[test]
fn direct_grasp_scene_takes_two_transitions() {
    let s = scene("direct");
    for seed in 0..3 {
        let r = solve(&s, seed);
        assert_eq!(r.path.transitions().unwrap(), 2, "seed {seed}");
        assert_eq!(r.path.kinds(), vec![Mode::Transit, Mode::Transfer, Mode::Transit]);
        assert!(r.path.start().same_as(&s.start) && r.path.end().same_as(&s.goal));
        audit_path(&s.world, &r.path, AUDIT_RES).unwrap();
    }
}

#[test]
fn one_regrasp_scene_takes_four_transitions() {
    let s = scene("box");
    let r = solve(&s, 7);
    assert!(r.path.is_irreducible());
    assert_eq!(r.path.transitions().unwrap(), 4);
    assert_eq!(r.plan_length, 5);
    assert_eq!(r.node_sequence.first(), Some(&node(1, 0)));
    assert_eq!(r.node_sequence.last(), Some(&node(3, 0)));
    audit_path(&s.world, &r.path, AUDIT_RES).unwrap();
}

#[test]
fn same_seed_gives_the_same_path() {
    let s = scene("box");
    let a = solve(&s, 11).path;
    let b = solve(&s, 11).path;
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn identical_endpoints_give_the_empty_path() {
    let s = scene("box");
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    let r = plan(w, &table, &s.start, &s.start, &cfg(0, 5.0)).unwrap();
    assert_eq!(r.path.domain_length(), 0);
    assert_eq!(r.path.transitions().unwrap(), 0);
}

#[test]
fn floating_object_is_unclassifiable() {
    let s = scene("box");
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    let lifted =
        regrasp::geometry::Transform::from_translation(nalgebra::Vector3::new(0.0, 0.0, 0.2)) * s.start.object_pose;
    let start = CompositeConfig::new(s.start.q_rad.clone(), lifted);
    assert_eq!(
        plan(w, &table, &start, &s.goal, &cfg(0, 5.0)).unwrap_err(),
        PlanningError::UnclassifiableConfig
    );
}

#[test]
fn planning_respects_the_time_budget() {
    let s = scene("box");
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    for seed in 0..3 {
        let clock = Instant::now();
        let out = plan(w, &table, &s.start, &s.goal, &cfg(seed, 0.05));
        assert!(clock.elapsed().as_secs_f64() < 1.0);
        if let Ok(r) = out {
            audit_path(w, &r.path, AUDIT_RES).unwrap();
        }
    }
}

#[test]
fn invalid_configuration_is_rejected() {
    let s = scene("box");
    let w = &s.world;
    let table = build_table(&w.object, &w.gripper, &w.table).unwrap();
    let bad = PlannerConfig {
        t_max_s: -1.0,
        ..Default::default()
    };
    assert!(matches!(
        plan(w, &table, &s.start, &s.goal, &bad),
        Err(PlanningError::InvalidConfig(_))
    ));
}
