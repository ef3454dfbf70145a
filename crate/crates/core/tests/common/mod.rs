#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regrasp::geometry::{Cuboid, Transform, CONTACT_CLEARANCE};
use regrasp::gp_table::{GpTable, TableNode};
use regrasp::harness::{load_scene, Scene};
use regrasp::object_gripper::{
    grasp_sweep, grasp_width, gripper_pose, object_pose_from_placement, Grasp, GraspClass, GripperModel, ObjectModel,
    PlacementParams, Tabletop,
};
use regrasp::paths::{CompositeConfig, ManipulationPath, Mode, SingleModePath};
use serde_json::Value;

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

pub fn scene(name: &str) -> Scene {
    load_scene(asset(&format!("scenes/{name}.scene.json"))).expect("bundled scene loads")
}

pub fn box_object() -> ObjectModel {
    ObjectModel::new(
        "box",
        vec![Cuboid::centered(Vector3::new(0.14, 0.0245, 0.0125)).unwrap()],
    )
    .unwrap()
}

pub fn gripper() -> GripperModel {
    GripperModel::default()
}

pub fn wide_table() -> Tabletop {
    Tabletop::new([0.0, 0.0], [2.0, 2.0], 0.0)
}

/// The 14 nodes of the reference box table in its own labeling.
pub fn reference_box_nodes() -> Vec<(usize, usize)> {
    vec![
        (1, 1),
        (1, 2),
        (1, 3),
        (1, 5),
        (1, 6),
        (2, 2),
        (3, 3),
        (4, 2),
        (4, 3),
        (4, 4),
        (4, 5),
        (4, 6),
        (5, 5),
        (6, 6),
    ]
}

/// Placement relabeling from our class order to the reference one.
pub const BOX_PLACEMENT_MAP: [usize; 7] = [0, 3, 6, 2, 5, 1, 4];

pub fn relabeled(table: &GpTable, map: &[usize]) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = table.nodes().iter().map(|n| (map[n.p], n.g)).collect();
    v.sort();
    v
}

pub fn node(p: usize, g: usize) -> TableNode {
    TableNode::new(p, g)
}

/// Sorted per-column node counts.
pub fn column_counts(table: &GpTable) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=table.num_placement_classes())
        .map(|p| table.column(p).len())
        .collect();
    v.sort();
    v
}

fn vec3(v: &Value) -> Vector3<f64> {
    let a = v.as_array().expect("array");
    Vector3::new(a[0].as_f64().unwrap(), a[1].as_f64().unwrap(), a[2].as_f64().unwrap())
}

fn homogeneous(rot: Matrix3<f64>, t: Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

fn frame(v: &Value) -> Matrix4<f64> {
    let t = v.get("translation_m").map_or(Vector3::zeros(), vec3);
    let rot = match v.get("rotation_wxyz").and_then(Value::as_array) {
        Some(q) => {
            let q: Vec<f64> = q.iter().map(|x| x.as_f64().unwrap()).collect();
            UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
                .to_rotation_matrix()
                .into_inner()
        }
        None => Matrix3::identity(),
    };
    homogeneous(rot, t)
}

/// Rotation by `angle` about the unit vector `k`, from Rodrigues' formula.
fn rodrigues(k: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = k.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Tool pose of the bundled arm, computed from its json description with
/// plain homogeneous matrices.
pub struct FkOracle {
    base: Matrix4<f64>,
    joints: Vec<(Matrix4<f64>, Vector3<f64>)>,
    tool: Matrix4<f64>,
}

impl FkOracle {
    pub fn load() -> FkOracle {
        let text = std::fs::read_to_string(asset("denso-like.json")).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        FkOracle {
            base: doc.get("base_pose").map_or(Matrix4::identity(), frame),
            joints: doc["joints"]
                .as_array()
                .unwrap()
                .iter()
                .map(|j| (frame(&j["origin"]), vec3(&j["axis"])))
                .collect(),
            tool: frame(&doc["tool"]),
        }
    }

    pub fn tool(&self, q: &[f64]) -> Matrix4<f64> {
        let mut m = self.base;
        for ((origin, axis), v) in self.joints.iter().zip(q) {
            m = m * origin * homogeneous(rodrigues(*axis, *v), Vector3::zeros());
        }
        m * self.tool
    }
}

pub fn max_abs_diff(a: &Matrix4<f64>, t: &Transform) -> f64 {
    (a - t.to_homogeneous()).amax()
}

/// Recomputes a table from corner heights: a gripper body clears the table
/// top iff none of its corners sinks below it.
pub fn oracle_table(object: &ObjectModel, gripper: &GripperModel, table: &Tabletop) -> Vec<(usize, usize)> {
    let nominal = PlacementParams {
        x_m: table.center_xy_m[0],
        y_m: table.center_xy_m[1],
        theta_rad: 0.0,
    };
    let mut out = Vec::new();
    for pc in object.placement_classes().unwrap() {
        let pose = object_pose_from_placement(object, &pc, &nominal, table).unwrap();
        for g in 1..=object.num_grasp_classes() {
            let class = GraspClass::from_index(g, object.num_boxes()).unwrap();
            let Ok(sweep) = grasp_sweep(object, gripper, &class) else {
                continue;
            };
            let clears = sweep.into_iter().any(|params| {
                let hand = gripper_pose(object, gripper, &pose, &class, &params).unwrap();
                let width = grasp_width(object, &Grasp { class, params });
                gripper.bodies(width).iter().all(|b| {
                    let lowest = b
                        .corners()
                        .iter()
                        .map(|c| hand.apply(c).z)
                        .fold(f64::INFINITY, f64::min);
                    lowest >= table.height_m - CONTACT_CLEARANCE
                })
            });
            if clears {
                out.push((pc.index, g));
            }
        }
    }
    out.sort();
    out
}

/// Consecutive segments sharing endpoints; transit segments keep the object
/// still.
pub fn chain(spec: &[(bool, usize)], seed: u64) -> Vec<SingleModePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at = CompositeConfig::new(vec![0.0; 3], Transform::identity());
    let mut out = Vec::new();
    for &(transfer, n) in spec {
        let kind = if transfer { Mode::Transfer } else { Mode::Transit };
        let mut wps = vec![at.clone()];
        for _ in 1..n {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pose = if transfer {
                let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0);
                let t = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..1.0),
                );
                Transform::from_axis_angle(&axis, rng.gen_range(-3.0..3.0)) * Transform::from_translation(t)
            } else {
                at.object_pose
            };
            wps.push(CompositeConfig::new(q, pose));
        }
        at = wps.last().unwrap().clone();
        out.push(SingleModePath::new(kind, wps).unwrap());
    }
    out
}

pub fn path_of(segs: &[SingleModePath], anchor: &CompositeConfig) -> ManipulationPath {
    segs.iter().fold(ManipulationPath::empty(anchor.clone()), |acc, s| {
        acc.compose(&ManipulationPath::single(s.clone())).unwrap()
    })
}

/// Three consecutive pieces of one chain.
pub fn split3(spec: &[(bool, usize)], seed: u64, i: usize, j: usize) -> [ManipulationPath; 3] {
    let segs = chain(spec, seed);
    let (i, j) = (i.min(segs.len()), j.min(segs.len()));
    let (i, j) = (i.min(j), i.max(j));
    let start = CompositeConfig::new(vec![0.0; 3], Transform::identity());
    let at = |k: usize| {
        if k == 0 {
            start.clone()
        } else {
            segs[k - 1].end().clone()
        }
    };
    [
        path_of(&segs[..i], &at(0)),
        path_of(&segs[i..j], &at(i)),
        path_of(&segs[j..], &at(j)),
    ]
}
