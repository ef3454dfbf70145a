use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{PlanError, TaskPlan};
use crate::gp_table::{EdgeKind, TableNode};

/// A guidance-graph node: table node `c` at level `d` of the plans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QNode {
    pub d: usize,
    pub c: TableNode,
}

/// Directed edge from `(d, from)` to `(d + 1, to)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QEdge {
    pub d: usize,
    pub from: TableNode,
    pub to: TableNode,
    pub kind: EdgeKind,
}

impl QEdge {
    pub fn tail(&self) -> QNode {
        QNode {
            d: self.d,
            c: self.from,
        }
    }

    pub fn head(&self) -> QNode {
        QNode {
            d: self.d + 1,
            c: self.to,
        }
    }
}

/// Layered directed graph holding every plan of one length, with a failure
/// counter per edge.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GuidanceGraph {
    depth: usize,
    nodes: BTreeSet<QNode>,
    #[serde(serialize_with = "edges_as_list")]
    edges: BTreeMap<QEdge, u32>,
}

fn edges_as_list<S: serde::Serializer>(edges: &BTreeMap<QEdge, u32>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(edges.len()))?;
    for e in edges.keys() {
        seq.serialize_element(e)?;
    }
    seq.end()
}

impl GuidanceGraph {
    /// Merges plans of equal length and shared endpoints into one graph.
    pub fn from_plans(plans: &[TaskPlan]) -> Result<GuidanceGraph, PlanError> {
        let Some(first) = plans.first() else {
            return Ok(GuidanceGraph::default());
        };
        let mut g = GuidanceGraph {
            depth: first.len(),
            ..Default::default()
        };
        for p in plans {
            if p.len() != first.len() || p.first() != first.first() || p.last() != first.last() {
                return Err(PlanError::MixedPlanLengths);
            }
            for (d, c) in p.nodes.iter().enumerate() {
                g.nodes.insert(QNode { d, c: *c });
            }
            for (d, kind) in p.kinds.iter().enumerate() {
                g.edges.insert(
                    QEdge {
                        d,
                        from: p.nodes[d],
                        to: p.nodes[d + 1],
                        kind: *kind,
                    },
                    0,
                );
            }
        }
        Ok(g)
    }

    /// Plan length `k`; the goal sits at level `k`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &BTreeSet<QNode> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = &QEdge> {
        self.edges.keys()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, n: &QNode) -> bool {
        self.nodes.contains(n)
    }

    pub fn out_edges(&self, n: &QNode) -> Vec<QEdge> {
        self.edges.keys().filter(|e| e.tail() == *n).copied().collect()
    }

    pub fn in_edges(&self, n: &QNode) -> Vec<QEdge> {
        self.edges.keys().filter(|e| e.head() == *n).copied().collect()
    }

    pub fn failures(&self, e: &QEdge) -> Option<u32> {
        self.edges.get(e).copied()
    }

    /// Counts one failed attempt along `e`; removes the edge once the count
    /// exceeds `threshold`. Returns true if the edge was removed.
    pub fn record_failure(&mut self, e: &QEdge, threshold: u32) -> bool {
        let Some(count) = self.edges.get_mut(e) else {
            return false;
        };
        *count += 1;
        if *count > threshold {
            let _ = self.remove_edge(e);
            true
        } else {
            false
        }
    }

    /// Removes `e` and prunes everything no longer on a start-to-goal path.
    pub fn remove_edge(&mut self, e: &QEdge) -> Result<(), PlanError> {
        if self.edges.remove(e).is_none() {
            return Err(PlanError::UnknownEdge);
        }
        self.prune();
        Ok(())
    }

    fn prune(&mut self) {
        let start: BTreeSet<QNode> = self.nodes.iter().filter(|n| n.d == 0).copied().collect();
        let goal: BTreeSet<QNode> = self.nodes.iter().filter(|n| n.d == self.depth).copied().collect();
        let mut forward = start;
        for d in 0..self.depth {
            let next: Vec<QNode> = self
                .edges
                .keys()
                .filter(|e| e.d == d && forward.contains(&e.tail()))
                .map(|e| e.head())
                .collect();
            forward.extend(next);
        }
        let mut backward = goal;
        for d in (0..self.depth).rev() {
            let prev: Vec<QNode> = self
                .edges
                .keys()
                .filter(|e| e.d == d && backward.contains(&e.head()))
                .map(|e| e.tail())
                .collect();
            backward.extend(prev);
        }
        let alive: BTreeSet<QNode> = forward.intersection(&backward).copied().collect();
        self.edges
            .retain(|e, _| alive.contains(&e.tail()) && alive.contains(&e.head()));
        self.nodes = alive;
    }

    /// True while some start-to-goal path survives.
    pub fn has_path(&self) -> bool {
        self.nodes.iter().any(|n| n.d == 0) && self.nodes.iter().any(|n| n.d == self.depth)
    }

    /// All start-to-goal paths, as plans.
    pub fn level_paths(&self) -> Vec<TaskPlan> {
        let mut out = Vec::new();
        for s in self.nodes.iter().filter(|n| n.d == 0) {
            let mut plan = TaskPlan {
                nodes: vec![s.c],
                kinds: Vec::new(),
            };
            self.walk(*s, &mut plan, &mut out);
        }
        out.sort();
        out
    }

    fn walk(&self, at: QNode, plan: &mut TaskPlan, out: &mut Vec<TaskPlan>) {
        if at.d == self.depth {
            out.push(plan.clone());
            return;
        }
        for e in self.out_edges(&at) {
            plan.nodes.push(e.to);
            plan.kinds.push(e.kind);
            self.walk(e.head(), plan, out);
            plan.nodes.pop();
            plan.kinds.pop();
        }
    }
}

impl std::fmt::Display for GuidanceGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "Q: depth {}, {} nodes, {} edges",
            self.depth,
            self.nodes.len(),
            self.edges.len()
        )?;
        for e in self.edges.keys() {
            let kind = match e.kind {
                EdgeKind::Transit => "transit",
                EdgeKind::Transfer => "transfer",
            };
            writeln!(f, "  ({}, {}) -> ({}, {})  {kind}", e.d, e.from, e.d + 1, e.to)?;
        }
        Ok(())
    }
}
