use rand::Rng;

use super::split::SplitFinder;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Training rows reaching the leaf, per class.
        counts: [u32; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART tree in an arena; node 0 is the root. `x[feature] <= threshold`
/// goes left.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

pub(crate) struct GrowParams {
    pub mtry: usize,
    pub min_node_size: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [u32; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Leaf majority; an even leaf votes negative.
    pub fn vote(&self, x: &[f64]) -> u8 {
        let c = self.leaf_counts(x);
        u8::from(c[1] > c[0])
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    /// Grows on `rows` (indices into `x`, repeats allowed). A fresh subset
    /// of `mtry` features is drawn at every node; nodes of at most
    /// `min_node_size` rows, pure nodes and nodes without an improving
    /// split become leaves.
    pub(crate) fn grow<R: Rng>(x: &Matrix, y: &[u8], mut rows: Vec<usize>, params: &GrowParams, rng: &mut R) -> Tree {
        let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
        let mut stack = vec![(0usize, 0usize, rows.len())];
        let mut finder = SplitFinder::default();
        let mut left_buf = Vec::new();
        let mut right_buf = Vec::new();
        while let Some((id, lo, hi)) = stack.pop() {
            let seg = &mut rows[lo..hi];
            let mut counts = [0u32; 2];
            for &r in seg.iter() {
                counts[y[r] as usize] += 1;
            }
            if counts[0] == 0 || counts[1] == 0 || seg.len() <= params.min_node_size {
                nodes[id] = Node::Leaf { counts };
                continue;
            }
            let mut features = rand::seq::index::sample(rng, x.cols(), params.mtry).into_vec();
            features.sort_unstable();
            let Some(split) = finder.best(x, y, seg, &features) else {
                nodes[id] = Node::Leaf { counts };
                continue;
            };
            left_buf.clear();
            right_buf.clear();
            for &r in seg.iter() {
                if x.get(r, split.feature) <= split.threshold {
                    left_buf.push(r);
                } else {
                    right_buf.push(r);
                }
            }
            let mid = lo + left_buf.len();
            seg[..left_buf.len()].copy_from_slice(&left_buf);
            seg[left_buf.len()..].copy_from_slice(&right_buf);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { counts: [0, 0] });
            nodes.push(Node::Leaf { counts: [0, 0] });
            nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, mid, hi));
            stack.push((left, lo, mid));
        }
        Tree { nodes }.into_preorder()
    }

    /// Renumbers nodes so that each parent precedes its left subtree, which
    /// precedes its right subtree.
    fn into_preorder(self) -> Tree {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        let mut new_index = vec![0usize; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| match self.nodes[old].clone() {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => Node::Split {
                    feature,
                    threshold,
                    left: new_index[left],
                    right: new_index[right],
                },
                leaf => leaf,
            })
            .collect();
        Tree { nodes }
    }
}
