use nalgebra::{Matrix6, SMatrix, Vector3, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::KinematicsError;
use crate::geometry::{Cuboid, Transform};

/// Joint-limit slack accepted by [`RobotModel::check_limits`].
const LIMIT_TOL: f64 = 1e-9;

/// One revolute joint and the link it drives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    /// Joint frame relative to the previous joint frame (or the base) at q = 0.
    pub origin: Transform,
    /// Rotation axis in the joint frame.
    pub axis: [f64; 3],
    pub limits_rad: [f64; 2],
    /// Collision box of the link, in the joint frame after rotation.
    pub link_box: Cuboid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    /// Robot base in the world.
    #[serde(default)]
    pub base_pose: Transform,
    /// Fixed pedestal, in the base frame.
    pub base_box: Option<Cuboid>,
    pub joints: Vec<Joint>,
    /// Gripper frame relative to the last joint frame.
    pub tool: Transform,
    /// Margin added to every link box in collision checks (m).
    #[serde(default = "default_inflation")]
    pub link_inflation_m: f64,
}

fn default_inflation() -> f64 {
    0.002
}

/// Bundled 6R arm description.
pub const DENSO_LIKE_JSON: &str = include_str!("../../assets/denso-like.json");

/// Damped least-squares settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkConfig {
    pub damping: f64,
    pub max_step_rad: f64,
    pub max_iterations: usize,
    pub seeds: usize,
    /// Convergence threshold on position (m) and orientation (rad) error.
    pub tolerance: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        IkConfig {
            damping: 1e-2,
            max_step_rad: 0.2,
            max_iterations: 300,
            seeds: 16,
            tolerance: 1e-10,
        }
    }
}

/// Acceptance thresholds for a returned IK solution.
pub const IK_POSITION_TOL: f64 = 1e-4;
pub const IK_ORIENTATION_TOL: f64 = 1e-3;

impl RobotModel {
    pub fn denso_like() -> RobotModel {
        serde_json::from_str(DENSO_LIKE_JSON).expect("bundled robot parses")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.joints.is_empty() {
            return Err("robot needs at least one joint".into());
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.limits_rad[0] < j.limits_rad[1]) {
                return Err(format!("joints[{i}].limits_rad must satisfy lower < upper"));
            }
            if Vector3::from(j.axis).norm() < 1e-12 {
                return Err(format!("joints[{i}].axis must be nonzero"));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn limits(&self) -> Vec<[f64; 2]> {
        self.joints.iter().map(|j| j.limits_rad).collect()
    }

    pub fn check_limits(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::Dimension {
                expected: self.dof(),
                got: q.len(),
            });
        }
        for (i, (v, j)) in q.iter().zip(&self.joints).enumerate() {
            if !(*v >= j.limits_rad[0] - LIMIT_TOL && *v <= j.limits_rad[1] + LIMIT_TOL) {
                return Err(KinematicsError::JointLimit { joint: i, value: *v });
            }
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        self.check_limits(q).is_ok()
    }

    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.joints
            .iter()
            .map(|j| rng.gen_range(j.limits_rad[0]..=j.limits_rad[1]))
            .collect()
    }

    /// Joint frames after rotation, world coordinates, without limit checks.
    pub fn joint_frames(&self, q: &[f64]) -> Vec<Transform> {
        let mut t = self.base_pose;
        self.joints
            .iter()
            .zip(q)
            .map(|(j, v)| {
                t = t * j.origin * Transform::from_axis_angle(&Vector3::from(j.axis), *v);
                t
            })
            .collect()
    }

    /// Tool pose without limit checks.
    pub fn tool_pose(&self, q: &[f64]) -> Transform {
        let frames = self.joint_frames(q);
        frames.last().copied().unwrap_or(self.base_pose) * self.tool
    }

    /// Forward kinematics of the tool frame.
    pub fn fk(&self, q: &[f64]) -> Result<Transform, KinematicsError> {
        self.check_limits(q)?;
        Ok(self.tool_pose(q))
    }

    /// Geometric Jacobian: rows 0..3 linear velocity of the tool origin,
    /// rows 3..6 angular velocity, both in world coordinates.
    pub fn jacobian(&self, q: &[f64]) -> Result<SMatrix<f64, 6, 6>, KinematicsError> {
        self.check_limits(q)?;
        if self.dof() != 6 {
            return Err(KinematicsError::Dimension {
                expected: 6,
                got: self.dof(),
            });
        }
        Ok(self.jacobian_unchecked(q))
    }

    fn jacobian_unchecked(&self, q: &[f64]) -> Matrix6<f64> {
        let frames = self.joint_frames(q);
        let tip = *(frames[frames.len() - 1] * self.tool).translation();
        let mut jac = Matrix6::zeros();
        for (i, (f, j)) in frames.iter().zip(&self.joints).enumerate() {
            let z = f.apply_vector(&Vector3::from(j.axis).normalize());
            let lin = z.cross(&(tip - f.translation()));
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
        }
        jac
    }

    /// Position and orientation error of `q` with respect to `target`.
    pub fn pose_error(&self, q: &[f64], target: &Transform) -> (f64, f64) {
        self.tool_pose(q).distance_to(target)
    }

    /// Damped least-squares descent from `seed`. Returns the final joint vector
    /// if it meets the acceptance thresholds.
    pub fn ik_from(&self, target: &Transform, seed: &[f64], cfg: &IkConfig) -> Option<Vec<f64>> {
        let mut q = seed.to_vec();
        let lambda2 = cfg.damping * cfg.damping;
        for _ in 0..cfg.max_iterations {
            let current = self.tool_pose(&q);
            let dp = target.translation() - current.translation();
            let dr = (target.rotation() * current.rotation().inverse()).scaled_axis();
            if dp.norm() < cfg.tolerance && dr.norm() < cfg.tolerance {
                break;
            }
            let e = Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z);
            let jac = self.jacobian_unchecked(&q);
            let jjt = jac * jac.transpose() + Matrix6::identity() * lambda2;
            let step = jjt.cholesky().map(|c| jac.transpose() * c.solve(&e))?;
            let largest = step.amax();
            let scale = if largest > cfg.max_step_rad {
                cfg.max_step_rad / largest
            } else {
                1.0
            };
            for (i, j) in self.joints.iter().enumerate() {
                q[i] = (q[i] + step[i] * scale).clamp(j.limits_rad[0], j.limits_rad[1]);
            }
        }
        let (ep, eo) = self.pose_error(&q, target);
        (ep < IK_POSITION_TOL && eo < IK_ORIENTATION_TOL).then_some(q)
    }

    /// Solutions from `cfg.seeds` random seeds (after any `hints`), with
    /// near-duplicates (within 1e-3 rad) dropped. Empty means none was found.
    pub fn ik<R: Rng + ?Sized>(
        &self,
        target: &Transform,
        hints: &[Vec<f64>],
        cfg: &IkConfig,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let seeds: Vec<Vec<f64>> = hints
            .iter()
            .cloned()
            .chain((0..cfg.seeds).map(|_| self.random_config(rng)))
            .collect();
        for seed in seeds {
            if let Some(q) = self.ik_from(target, &seed, cfg) {
                let dup = out.iter().any(|o| o.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-3));
                if !dup {
                    out.push(q);
                }
            }
        }
        out
    }

    /// First solution found, trying `hints` before random seeds.
    pub fn ik_first<R: Rng + ?Sized>(
        &self,
        target: &Transform,
        hints: &[Vec<f64>],
        cfg: &IkConfig,
        rng: &mut R,
    ) -> Option<Vec<f64>> {
        for seed in hints {
            if let Some(q) = self.ik_from(target, seed, cfg) {
                return Some(q);
            }
        }
        (0..cfg.seeds).find_map(|_| {
            let seed = self.random_config(rng);
            self.ik_from(target, &seed, cfg)
        })
    }

    /// Posed collision boxes of the base and every link, inflated.
    pub fn link_boxes(&self, q: &[f64]) -> Vec<(Cuboid, Transform)> {
        let m = self.link_inflation_m;
        let mut out = Vec::with_capacity(self.dof() + 1);
        if let Some(b) = &self.base_box {
            out.push((b.inflated(m), self.base_pose));
        }
        for (f, j) in self.joint_frames(q).into_iter().zip(&self.joints) {
            out.push((j.link_box.inflated(m), f));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Matrix4, UnitQuaternion};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn robot() -> RobotModel {
        RobotModel::denso_like()
    }

    fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
    }

    /// Product-of-exponentials FK built from the home configuration: screw
    /// axes are read off the zero pose, then `e^[S1]q1 ... e^[Sn]qn M`.
    fn poe_fk(r: &RobotModel, q: &[f64]) -> Matrix4<f64> {
        let zero = vec![0.0; r.dof()];
        let mut screws = Vec::new();
        let mut t = r.base_pose.to_homogeneous();
        for j in &r.joints {
            t *= j.origin.to_homogeneous();
            let w = t.fixed_view::<3, 3>(0, 0) * Vector3::from(j.axis).normalize();
            let p = t.fixed_view::<3, 1>(0, 3).into_owned();
            screws.push((w, -w.cross(&p)));
        }
        let m = r.tool_pose(&zero).to_homogeneous();
        let mut out: Matrix4<f64> = Matrix4::identity();
        for ((w, v), th) in screws.iter().zip(q) {
            let wh = hat(w);
            let rot = Matrix3::identity() + wh * th.sin() + wh * wh * (1.0 - th.cos());
            let g = (Matrix3::identity() * *th + wh * (1.0 - th.cos()) + wh * wh * (th - th.sin())) * v;
            let mut e = Matrix4::identity();
            e.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
            e.fixed_view_mut::<3, 1>(0, 3).copy_from(&g);
            out *= e;
        }
        out * m
    }

    #[test]
    fn home_pose_is_documented() {
        let r = robot();
        let t = r.fk(&[0.0; 6]).unwrap();
        // forearm points along +x at shoulder height, gripper approaching along +x
        assert!((t.translation() - Vector3::new(0.6, 0.0, 0.6)).norm() < 1e-12);
        assert!((t.apply_vector(&Vector3::z()) - Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn base_joint_rotates_about_world_z() {
        let r = robot();
        let mut q = [0.0; 6];
        q[1] = 0.3;
        q[2] = -0.7;
        let a = r.fk(&q).unwrap();
        q[0] = FRAC_PI_2;
        let b = r.fk(&q).unwrap();
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        assert!((rz * a.translation() - b.translation()).norm() < 1e-12);
    }

    #[test]
    fn fk_matches_product_of_exponentials() {
        let r = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let q = r.random_config(&mut rng);
            let diff = r.fk(&q).unwrap().to_homogeneous() - poe_fk(&r, &q);
            assert!(diff.amax() < 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let r = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for _ in 0..50 {
            let mut q = r.random_config(&mut rng);
            for (v, lim) in q.iter_mut().zip(r.limits()) {
                *v = v.clamp(lim[0] + 2.0 * h, lim[1] - 2.0 * h);
            }
            let jac = r.jacobian(&q).unwrap();
            let mut fd = Matrix6::zeros();
            for i in 0..6 {
                let (mut qp, mut qm) = (q.clone(), q.clone());
                qp[i] += h;
                qm[i] -= h;
                let (tp, tm) = (r.tool_pose(&qp), r.tool_pose(&qm));
                let lin = (tp.translation() - tm.translation()) / (2.0 * h);
                let ang = (tp.rotation() * tm.rotation().inverse()).scaled_axis() / (2.0 * h);
                fd.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
                fd.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
            }
            assert!((jac - fd).norm() / jac.norm() < 1e-5);
        }
    }

    #[test]
    fn stretched_arm_is_singular() {
        let r = robot();
        // upper arm and forearm aligned (elbow straight up)
        let q = [0.0, 0.0, -FRAC_PI_2, 0.0, 0.0, 0.0];
        let sv = r.jacobian(&q).unwrap().singular_values();
        assert!(sv.min() < 1e-9);
    }

    #[test]
    fn ik_round_trip() {
        let r = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = IkConfig::default();
        let mut ok = 0;
        for _ in 0..100 {
            let q0 = r.random_config(&mut rng);
            let target = r.tool_pose(&q0);
            let sols = r.ik(&target, &[], &cfg, &mut rng);
            for s in &sols {
                let (ep, eo) = r.pose_error(s, &target);
                assert!(ep < IK_POSITION_TOL && eo < IK_ORIENTATION_TOL && r.within_limits(s));
            }
            if !sols.is_empty() {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100");
    }

    #[test]
    fn far_target_has_no_solution() {
        let r = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = Transform::from_translation(Vector3::new(10.0, 0.0, 0.0));
        assert!(r.ik(&target, &[], &IkConfig::default(), &mut rng).is_empty());
    }

    #[test]
    fn distinct_postures_from_distinct_seeds() {
        let r = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q0 = [0.3, 0.4, 0.5, 0.2, -0.6, 0.1];
        let target = r.tool_pose(&q0);
        let sols = r.ik(&target, &[], &IkConfig::default(), &mut rng);
        assert!(sols.len() >= 2);
        let d = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        for i in 0..sols.len() {
            for j in i + 1..sols.len() {
                assert!(d(&sols[i], &sols[j]) > 1e-3);
            }
        }
        assert!(sols.iter().any(|a| sols.iter().any(|b| d(a, b) > 0.1)));
    }

    #[test]
    fn limits_are_enforced() {
        let r = robot();
        assert!(matches!(
            r.fk(&[4.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(KinematicsError::JointLimit { joint: 0, .. })
        ));
        assert!(matches!(r.fk(&[0.0; 5]), Err(KinematicsError::Dimension { .. })));
    }

    #[test]
    fn fk_is_continuous() {
        let r = robot();
        let q = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let mut qd = q;
        for v in qd.iter_mut() {
            *v += 1e-8;
        }
        let (dt, dr) = r.fk(&q).unwrap().distance_to(&r.fk(&qd).unwrap());
        assert!(dt < 1e-6 && dr < 1e-6);
    }
}
