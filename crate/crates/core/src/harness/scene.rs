use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{Cuboid, Transform};
use crate::kinematics::{RobotModel, WorldModel};
use crate::object_gripper::{object_pose_from_placement, GripperModel, ObjectModel, PlacementParams, Tabletop};
use crate::paths::CompositeConfig;
use crate::planner::PlannerConfig;

/// On-disk scene description. Lengths are meters and angles radians, as the
/// field suffixes say.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub name: String,
    pub object: ObjectModel,
    #[serde(default)]
    pub gripper: GripperModel,
    /// Robot description, relative to the scene file. Ignored when `robot`
    /// is given; the bundled arm is used when both are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotModel>,
    pub table: Tabletop,
    #[serde(default)]
    pub obstacles: Vec<Cuboid>,
    pub start: EndpointSpec,
    pub goal: EndpointSpec,
    #[serde(default)]
    pub planner: PlannerConfig,
}

/// A query endpoint: joint values plus the object either as an explicit
/// pose or as a placement on the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    pub q_rad: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_pose: Option<Transform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSpec {
    pub class: usize,
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub theta_rad: f64,
}

/// A validated scene: the world and the query.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub world: WorldModel,
    pub start: CompositeConfig,
    pub goal: CompositeConfig,
    pub planner: PlannerConfig,
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.into(),
        message: msg.into(),
    }
}

/// Parses scene json, reporting the field path of any schema violation.
pub fn parse_scene(json: &str) -> Result<SceneFile, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            invalid(field, inner.to_string())
        } else {
            HarnessError::Parse(format!("{field}: {inner}"))
        }
    })
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let file = parse_scene(&text)?;
    file.resolve(path.parent())
}

impl SceneFile {
    /// Validates the scene and builds the world. `base_dir` anchors
    /// `robot_file`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scene, HarnessError> {
        let robot = match (&self.robot, &self.robot_file) {
            (Some(r), _) => r.clone(),
            (None, Some(f)) => {
                let p: PathBuf = base_dir.map_or_else(|| PathBuf::from(f), |d| d.join(f));
                if !p.is_file() {
                    return Err(invalid("robot_file", format!("file not found: {}", p.display())));
                }
                let text =
                    std::fs::read_to_string(&p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(de)
                    .map_err(|e| invalid(format!("robot_file:{}", e.path()), e.into_inner().to_string()))?
            }
            (None, None) => RobotModel::denso_like(),
        };
        robot.validate().map_err(|m| invalid("robot", m))?;
        self.gripper.validate().map_err(|m| invalid("gripper", m))?;
        self.table.validate().map_err(|m| invalid("table", m))?;
        self.planner.validate().map_err(|e| invalid("planner", e.to_string()))?;
        let world = WorldModel {
            robot,
            gripper: self.gripper.clone(),
            table: self.table,
            obstacles: self.obstacles.clone(),
            object: self.object.clone(),
        };
        let start = endpoint(&world, &self.start, "start")?;
        let goal = endpoint(&world, &self.goal, "goal")?;
        Ok(Scene {
            name: self.name.clone(),
            world,
            start,
            goal,
            planner: self.planner.clone(),
        })
    }
}

impl EndpointSpec {
    /// The composite configuration this endpoint names in `world`; errors
    /// report fields under `field`.
    pub fn resolve(&self, world: &WorldModel, field: &str) -> Result<CompositeConfig, HarnessError> {
        endpoint(world, self, field)
    }
}

fn endpoint(world: &WorldModel, spec: &EndpointSpec, field: &str) -> Result<CompositeConfig, HarnessError> {
    let dof = world.robot.dof();
    if spec.q_rad.len() != dof {
        return Err(invalid(
            format!("{field}.q_rad"),
            format!("expected {dof} joint values, got {}", spec.q_rad.len()),
        ));
    }
    if let Err(e) = world.robot.check_limits(&spec.q_rad) {
        return Err(invalid(format!("{field}.q_rad"), e.to_string()));
    }
    let pose = match (&spec.object_pose, &spec.placement) {
        (Some(p), None) => *p,
        (None, Some(p)) => {
            let classes = world
                .object
                .placement_classes()
                .map_err(|e| invalid("object", e.to_string()))?;
            let class = classes.iter().find(|c| c.index == p.class).ok_or_else(|| {
                invalid(
                    format!("{field}.placement.class"),
                    format!("no placement class {}", p.class),
                )
            })?;
            let params = PlacementParams {
                x_m: p.x_m,
                y_m: p.y_m,
                theta_rad: p.theta_rad,
            };
            object_pose_from_placement(&world.object, class, &params, &world.table)
                .map_err(|e| invalid(format!("{field}.placement"), e.to_string()))?
        }
        _ => return Err(invalid(field, "exactly one of object_pose and placement is required")),
    };
    Ok(CompositeConfig::new(spec.q_rad.clone(), pose))
}

impl Scene {
    /// Self-contained file form: the robot inline and explicit object poses.
    pub fn to_file(&self) -> SceneFile {
        let ep = |c: &CompositeConfig| EndpointSpec {
            q_rad: c.q_rad.clone(),
            object_pose: Some(c.object_pose),
            placement: None,
        };
        SceneFile {
            name: self.name.clone(),
            object: self.world.object.clone(),
            gripper: self.world.gripper.clone(),
            robot_file: None,
            robot: Some(self.world.robot.clone()),
            table: self.world.table,
            obstacles: self.world.obstacles.clone(),
            start: ep(&self.start),
            goal: ep(&self.goal),
            planner: self.planner.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scene serializes")
    }
}
