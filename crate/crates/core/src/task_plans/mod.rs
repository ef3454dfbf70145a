//! Task plans over the grasp-placement table and the layered guidance graph
//! built from them.
//!
//! A plan is a walk through the table whose edge kinds strictly alternate
//! between transit and transfer. Besides ordinary edges a plan may use a
//! node's self-loop (a transit loop re-grasps within one placement class, a
//! transfer loop re-places within one grasp class), but never more than one
//! loop per visit and never revisits a node otherwise.

mod guidance;

pub use guidance::{GuidanceGraph, QEdge, QNode};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp_table::{edge_kind, EdgeKind, GpTable, TableNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("node {0} is not in the table")]
    UnknownNode(TableNode),
    #[error("no task plan connects {0} and {1}")]
    Disconnected(TableNode, TableNode),
    #[error("task plans have different lengths or endpoints")]
    MixedPlanLengths,
    #[error("edge is not in the guidance graph")]
    UnknownEdge,
}

/// A sequence of table nodes with the kind of each step. `kinds[i]` joins
/// `nodes[i]` and `nodes[i + 1]`; equal consecutive nodes denote a self-loop.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskPlan {
    pub nodes: Vec<TableNode>,
    pub kinds: Vec<EdgeKind>,
}

impl TaskPlan {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn first(&self) -> TableNode {
        self.nodes[0]
    }

    pub fn last(&self) -> TableNode {
        *self.nodes.last().expect("plans have at least one node")
    }

    /// Checks every step against the table and the alternation and
    /// revisiting rules.
    pub fn is_valid_in(&self, table: &GpTable) -> bool {
        if self.nodes.len() != self.kinds.len() + 1 || !self.nodes.iter().all(|n| table.contains(n)) {
            return false;
        }
        for (i, k) in self.kinds.iter().enumerate() {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let ok = if a == b {
                loop_allowed(&a, *k)
            } else {
                edge_kind(&a, &b) == Some(*k)
            };
            if !ok || (i > 0 && self.kinds[i - 1] == *k) {
                return false;
            }
        }
        // each node occupies one contiguous run of at most two entries; a
        // plan may return to its first node at the very end
        let mut seen = BTreeSet::new();
        let mut i = 0;
        let mut runs = Vec::new();
        while i < self.nodes.len() {
            let mut j = i + 1;
            while j < self.nodes.len() && self.nodes[j] == self.nodes[i] {
                j += 1;
            }
            runs.push((self.nodes[i], j - i));
            i = j;
        }
        let cyclic = runs.len() > 1 && runs[0].0 == runs[runs.len() - 1].0;
        let body = if cyclic { &runs[..runs.len() - 1] } else { &runs[..] };
        if cyclic && runs[runs.len() - 1].1 != 1 {
            return false;
        }
        body.iter().all(|(node, len)| *len <= 2 && seen.insert(*node))
    }
}

impl std::fmt::Display for TaskPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.nodes[0])?;
        for (n, k) in self.nodes[1..].iter().zip(&self.kinds) {
            let arrow = match k {
                EdgeKind::Transit => "-v->",
                EdgeKind::Transfer => "-h->",
            };
            write!(f, " {arrow} {n}")?;
        }
        Ok(())
    }
}

fn loop_allowed(n: &TableNode, kind: EdgeKind) -> bool {
    match kind {
        EdgeKind::Transit => n.has_transit_loop(),
        EdgeKind::Transfer => n.has_transfer_loop(),
    }
}

fn bfs_distances(table: &GpTable, from: &TableNode) -> BTreeMap<TableNode, usize> {
    let mut dist = BTreeMap::from([(*from, 0)]);
    let mut queue = VecDeque::from([*from]);
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        for m in table.nodes() {
            if edge_kind(&n, m).is_some() && !dist.contains_key(m) {
                dist.insert(*m, d + 1);
                queue.push_back(*m);
            }
        }
    }
    dist
}

/// Breadth-first distance between two table nodes.
pub fn shortest_plan_length(table: &GpTable, a: &TableNode, b: &TableNode) -> Result<usize, PlanError> {
    for n in [a, b] {
        if !table.contains(n) {
            return Err(PlanError::UnknownNode(*n));
        }
    }
    bfs_distances(table, a)
        .get(b)
        .copied()
        .ok_or(PlanError::Disconnected(*a, *b))
}

/// All plans with exactly `k` edges from `a` to `b`, in lexicographic order.
pub fn plans_of_length(table: &GpTable, k: usize, a: &TableNode, b: &TableNode) -> Vec<TaskPlan> {
    if !table.contains(a) || !table.contains(b) {
        return Vec::new();
    }
    let to_goal = bfs_distances(table, b);
    let mut out = Vec::new();
    let mut plan = TaskPlan {
        nodes: vec![*a],
        kinds: Vec::new(),
    };
    let mut visited = BTreeSet::from([*a]);
    extend(table, k, b, &to_goal, &mut plan, &mut visited, &mut out);
    out.sort();
    out
}

fn extend(
    table: &GpTable,
    k: usize,
    goal: &TableNode,
    to_goal: &BTreeMap<TableNode, usize>,
    plan: &mut TaskPlan,
    visited: &mut BTreeSet<TableNode>,
    out: &mut Vec<TaskPlan>,
) {
    let here = plan.last();
    let left = k - plan.len();
    if left == 0 {
        if here == *goal {
            out.push(plan.clone());
        }
        return;
    }
    match to_goal.get(&here) {
        Some(d) if *d <= left => {}
        _ => return,
    }
    let kinds: &[EdgeKind] = match plan.kinds.last() {
        Some(EdgeKind::Transit) => &[EdgeKind::Transfer],
        Some(EdgeKind::Transfer) => &[EdgeKind::Transit],
        None => &[EdgeKind::Transit, EdgeKind::Transfer],
    };
    let looped = plan.nodes.len() >= 2 && plan.nodes[plan.nodes.len() - 2] == here;
    for &kind in kinds {
        if !looped && loop_allowed(&here, kind) {
            plan.nodes.push(here);
            plan.kinds.push(kind);
            extend(table, k, goal, to_goal, plan, visited, out);
            plan.nodes.pop();
            plan.kinds.pop();
        }
        for next in table.neighbors_of_kind(&here, kind) {
            let closes_cycle = left == 1 && next == *goal && next == plan.nodes[0];
            if visited.contains(&next) && !closes_cycle {
                continue;
            }
            visited.insert(next);
            plan.nodes.push(next);
            plan.kinds.push(kind);
            extend(table, k, goal, to_goal, plan, visited, out);
            plan.nodes.pop();
            plan.kinds.pop();
            if !closes_cycle {
                visited.remove(&next);
            }
        }
    }
}
