use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::gp_table::TableNode;
use crate::kinematics::HeldObject;
use crate::paths::{CompositeConfig, SingleModePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeDirection {
    /// Rooted at the start; grows toward higher levels.
    Forward,
    /// Rooted at the goal; grows toward level 0.
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeVertex {
    pub config: CompositeConfig,
    pub node: TableNode,
    pub level: usize,
    pub held: Option<HeldObject>,
    pub parent: Option<usize>,
    /// Path joining this vertex and its parent, oriented in execution order
    /// (parent to child in a forward tree, child to parent in a backward one).
    pub segment: Option<SingleModePath>,
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    pub direction: TreeDirection,
    /// Level of the goal in the guidance graph.
    pub depth: usize,
    vertices: Vec<TreeVertex>,
}

impl SearchTree {
    pub fn new(direction: TreeDirection, depth: usize, root: TreeVertex) -> SearchTree {
        SearchTree {
            direction,
            depth,
            vertices: vec![root],
        }
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &TreeVertex {
        &self.vertices[i]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn add(&mut self, v: TreeVertex) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    /// Levels advanced from the root.
    pub fn progress(&self, i: usize) -> usize {
        match self.direction {
            TreeDirection::Forward => self.vertices[i].level,
            TreeDirection::Backward => self.depth - self.vertices[i].level,
        }
    }

    /// Level of the opposite tree's root.
    pub fn far_level(&self) -> usize {
        match self.direction {
            TreeDirection::Forward => self.depth,
            TreeDirection::Backward => 0,
        }
    }

    /// Level reached by one step from `level`, if it exists.
    pub fn next_level(&self, level: usize) -> Option<usize> {
        match self.direction {
            TreeDirection::Forward => (level < self.depth).then_some(level + 1),
            TreeDirection::Backward => level.checked_sub(1),
        }
    }

    /// Vertex indices from `i` up to the root.
    fn ancestry(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![i];
        while let Some(p) = self.vertices[i].parent {
            out.push(p);
            i = p;
        }
        out
    }

    /// Segments between the root and `i` in execution order.
    pub fn branch_segments(&self, i: usize) -> Vec<SingleModePath> {
        let mut segs: Vec<SingleModePath> = self
            .ancestry(i)
            .iter()
            .filter_map(|&j| self.vertices[j].segment.clone())
            .collect();
        if self.direction == TreeDirection::Forward {
            segs.reverse();
        }
        segs
    }

    /// Table nodes between the root and `i` in execution order.
    pub fn branch_nodes(&self, i: usize) -> Vec<TableNode> {
        let mut nodes: Vec<TableNode> = self.ancestry(i).iter().map(|&j| self.vertices[j].node).collect();
        if self.direction == TreeDirection::Forward {
            nodes.reverse();
        }
        nodes
    }
}

/// Draws a vertex with probability proportional to `(progress + 1)^exponent`.
pub fn sample_tree<R: Rng + ?Sized>(tree: &SearchTree, exponent: f64, rng: &mut R) -> usize {
    if tree.len() == 1 {
        return 0;
    }
    let weights: Vec<f64> = (0..tree.len())
        .map(|i| ((tree.progress(i) + 1) as f64).powf(exponent))
        .collect();
    WeightedIndex::new(&weights).expect("positive weights").sample(rng)
}
