//! The grasp-placement table: an undirected graph over (placement class,
//! grasp class) pairs.
//!
//! Nodes in the same column (same placement class) are joined by transit
//! edges, nodes in the same row (same grasp class) by transfer edges. Class 0
//! marks query nodes that have no grasp (`(p, 0)`, object resting with the
//! gripper away) or no placement (`(0, g)`, object held in the air).

mod export;

pub use export::{export_table, import_table, TableFormat};

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{obb_overlap, Transform};
use crate::object_gripper::{
    grasp_sweep, grasp_width, gripper_pose, object_pose_from_placement, Grasp, GraspClass, GripperModel, ObjectError,
    ObjectModel, PlacementParams, Tabletop,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("node ({}, {}) is not in the table", .0.p, .0.g)]
    UnknownNode(TableNode),
    #[error("configuration is neither a stable placement nor a grasp")]
    UnclassifiableConfig,
    #[error("malformed table document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Object(#[from] ObjectError),
}

/// `(placement class, grasp class)`; either index may be 0 for query nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableNode {
    pub p: usize,
    pub g: usize,
}

impl TableNode {
    pub const fn new(p: usize, g: usize) -> Self {
        TableNode { p, g }
    }

    /// A transit self-loop moves the robot while the object rests in placement `p`.
    pub fn has_transit_loop(&self) -> bool {
        self.p != 0
    }

    /// A transfer self-loop moves the object in the air with grasp `g`.
    pub fn has_transfer_loop(&self) -> bool {
        self.g != 0
    }
}

impl std::fmt::Display for TableNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.g)
    }
}

/// Vertical edges are transit motions, horizontal edges transfer motions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Transit,
    Transfer,
}

impl EdgeKind {
    pub fn other(self) -> EdgeKind {
        match self {
            EdgeKind::Transit => EdgeKind::Transfer,
            EdgeKind::Transfer => EdgeKind::Transit,
        }
    }
}

/// Kind of the edge joining two distinct nodes, if any.
pub fn edge_kind(a: &TableNode, b: &TableNode) -> Option<EdgeKind> {
    if a == b {
        None
    } else if a.p == b.p && a.p != 0 {
        Some(EdgeKind::Transit)
    } else if a.g == b.g && a.g != 0 {
        Some(EdgeKind::Transfer)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GpTable {
    nodes: BTreeSet<TableNode>,
    num_placement_classes: usize,
    num_grasp_classes: usize,
}

/// How a query endpoint is classified: placement class if the object rests
/// stably, grasp class if the gripper holds it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub placement: Option<usize>,
    pub grasp: Option<usize>,
}

impl QuerySpec {
    pub fn node(&self) -> Result<TableNode, TableError> {
        match (self.placement, self.grasp) {
            (None, None) => Err(TableError::UnclassifiableConfig),
            (p, g) => Ok(TableNode::new(p.unwrap_or(0), g.unwrap_or(0))),
        }
    }
}

impl GpTable {
    pub fn new(
        nodes: impl IntoIterator<Item = TableNode>,
        num_placement_classes: usize,
        num_grasp_classes: usize,
    ) -> Self {
        GpTable {
            nodes: nodes.into_iter().filter(|n| n.p != 0 || n.g != 0).collect(),
            num_placement_classes,
            num_grasp_classes,
        }
    }

    pub fn nodes(&self) -> &BTreeSet<TableNode> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, n: &TableNode) -> bool {
        self.nodes.contains(n)
    }

    pub fn num_placement_classes(&self) -> usize {
        self.num_placement_classes
    }

    pub fn num_grasp_classes(&self) -> usize {
        self.num_grasp_classes
    }

    /// Grasp classes present in placement column `p`.
    pub fn column(&self, p: usize) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter(|n| n.p == p && n.g != 0)
            .map(|n| n.g)
            .collect()
    }

    /// Placement classes present in grasp row `g`.
    pub fn row(&self, g: usize) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter(|n| n.g == g && n.p != 0)
            .map(|n| n.p)
            .collect()
    }

    /// Nodes sharing a row or column with `n`, excluding `n` itself.
    pub fn neighbors(&self, n: &TableNode) -> Result<BTreeSet<TableNode>, TableError> {
        if !self.contains(n) {
            return Err(TableError::UnknownNode(*n));
        }
        Ok(self
            .nodes
            .iter()
            .filter(|m| edge_kind(n, m).is_some())
            .copied()
            .collect())
    }

    /// Neighbors joined to `n` by an edge of the given kind.
    pub fn neighbors_of_kind(&self, n: &TableNode, kind: EdgeKind) -> Vec<TableNode> {
        self.nodes
            .iter()
            .filter(|m| edge_kind(n, m) == Some(kind))
            .copied()
            .collect()
    }

    /// All undirected edges `(a, b, kind)` with `a < b`.
    pub fn edges(&self) -> Vec<(TableNode, TableNode, EdgeKind)> {
        let mut out = Vec::new();
        for a in &self.nodes {
            for b in self.nodes.range(a..).skip(1) {
                if let Some(k) = edge_kind(a, b) {
                    out.push((*a, *b, k));
                }
            }
        }
        out
    }

    /// Table extended with the nodes of a start and goal query. Endpoints
    /// already classified into a table node leave the table unchanged.
    pub fn add_query_nodes(&self, start: &QuerySpec, goal: &QuerySpec) -> Result<GpTable, TableError> {
        let mut t = self.clone();
        t.nodes.insert(start.node()?);
        t.nodes.insert(goal.node()?);
        Ok(t)
    }
}

fn gripper_clears_table(
    object: &ObjectModel,
    gripper: &GripperModel,
    table: &Tabletop,
    object_pose: &Transform,
    class: &GraspClass,
) -> Result<bool, ObjectError> {
    let slab = table.slab();
    let sweep = match grasp_sweep(object, gripper, class) {
        Ok(s) => s,
        Err(ObjectError::InfeasibleGrasp { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    for params in sweep {
        let pose = gripper_pose(object, gripper, object_pose, class, &params)?;
        let width = grasp_width(object, &Grasp { class: *class, params });
        let hit = gripper
            .bodies(width)
            .iter()
            .any(|b| obb_overlap(b, &pose, &slab, &Transform::identity()));
        if !hit {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Builds the table with every placement at the center of the table, `θ = 0`.
pub fn build_table(object: &ObjectModel, gripper: &GripperModel, table: &Tabletop) -> Result<GpTable, TableError> {
    let nominal = PlacementParams {
        x_m: table.center_xy_m[0],
        y_m: table.center_xy_m[1],
        theta_rad: 0.0,
    };
    build_table_at(object, gripper, table, &nominal)
}

/// Builds the table with every placement at the given nominal location.
pub fn build_table_at(
    object: &ObjectModel,
    gripper: &GripperModel,
    table: &Tabletop,
    nominal: &PlacementParams,
) -> Result<GpTable, TableError> {
    let classes = object.placement_classes()?;
    let columns: Result<Vec<Vec<TableNode>>, ObjectError> = classes
        .par_iter()
        .map(|pc| {
            let pose = object_pose_from_placement(object, pc, nominal, table)?;
            let mut column = Vec::new();
            for g in 1..=object.num_grasp_classes() {
                let class = GraspClass::from_index(g, object.num_boxes())?;
                if gripper_clears_table(object, gripper, table, &pose, &class)? {
                    column.push(TableNode::new(pc.index, g));
                }
            }
            Ok(column)
        })
        .collect();
    Ok(GpTable::new(
        columns?.into_iter().flatten(),
        classes.len(),
        object.num_grasp_classes(),
    ))
}
