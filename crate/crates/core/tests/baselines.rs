mod common;

use std::time::Instant;

use common::*;
use nalgebra::Vector3;
use regrasp::baselines::{dbmp_build, dbmp_plan, grasp_set, pmp_plan, DbmpConfig};
use regrasp::geometry::Transform;
use regrasp::paths::CompositeConfig;
use regrasp::planner::{audit_path, PlannerConfig, PlanningError};

fn cfg(seed: u64, t_max_s: f64) -> PlannerConfig {
    PlannerConfig {
        seed,
        t_max_s,
        ..Default::default()
    }
}

#[test]
fn pmp_identical_endpoints_give_the_empty_path() {
    let s = scene("box");
    let p = pmp_plan(&s.world, &s.start, &s.start, &cfg(0, 5.0), &Default::default()).unwrap();
    assert_eq!(p.domain_length(), 0);
}

#[test]
fn pmp_solves_the_direct_scene() {
    let s = scene("direct");
    let p = pmp_plan(&s.world, &s.start, &s.goal, &cfg(2, 60.0), &Default::default()).unwrap();
    assert!(p.is_irreducible());
    assert!(p.transitions().unwrap() >= 2);
    assert!(p.start().same_as(&s.start) && p.end().same_as(&s.goal));
    audit_path(&s.world, &p, 1e-3).unwrap();
}

#[test]
fn pmp_respects_the_time_budget() {
    let s = scene("box");
    let clock = Instant::now();
    let _ = pmp_plan(&s.world, &s.start, &s.goal, &cfg(0, 0.05), &Default::default());
    assert!(clock.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn dbmp_solves_the_direct_scene() {
    let s = scene("direct");
    let g = dbmp_build(
        &s.world,
        &DbmpConfig::default(),
        &[s.start.object_pose, s.goal.object_pose],
    )
    .unwrap();
    let p = dbmp_plan(&g, &s.world, &s.start, &s.goal, &cfg(0, 60.0)).unwrap();
    assert!(p.transitions().unwrap() >= 2);
    audit_path(&s.world, &p, 1e-3).unwrap();
}

#[test]
fn dbmp_reports_unreachable_goal_without_planning() {
    let mut s = scene("direct");
    s.world.table.size_xy_m = [3.0, 3.0];
    let shift = Transform::from_translation(Vector3::new(1.0, 0.0, 0.0));
    s.goal = CompositeConfig::new(s.goal.q_rad.clone(), shift * s.goal.object_pose);
    let config = DbmpConfig {
        rotations: 2,
        ..Default::default()
    };
    let g = dbmp_build(&s.world, &config, &[s.start.object_pose, s.goal.object_pose]).unwrap();
    let goal = g.find_placement(&s.goal.object_pose).unwrap();
    assert!(g.valid[goal].is_empty());
    let clock = Instant::now();
    assert_eq!(
        dbmp_plan(&g, &s.world, &s.start, &s.goal, &cfg(0, 60.0)).unwrap_err(),
        PlanningError::NoSolution
    );
    assert!(clock.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn grasp_sets_are_collision_free_and_distinct() {
    let s = scene("l-shape");
    let set = grasp_set(&s.world.object, &s.world.gripper);
    assert!(!set.is_empty());
    for (i, a) in set.iter().enumerate() {
        assert!(a.width_m > 0.0);
        for b in &set[i + 1..] {
            assert!(!a.gripper_in_object.approx_eq(&b.gripper_in_object, 1e-9));
        }
    }
}
