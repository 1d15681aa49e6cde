use std::cmp::Ordering;
use std::sync::Arc;

use crate::lp::Basis;

/// A branch-and-bound subproblem: the root bounds plus a list of fixings.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: u64,
    pub depth: u32,
    /// LP bound inherited from the parent (the node's own LP is not solved yet).
    pub bound: f64,
    /// `(column, lower, upper)` overrides, applied in order.
    pub fixings: Vec<(usize, f64, f64)>,
    pub(crate) warm: Option<Arc<Basis>>,
}

impl Node {
    pub fn root(bound: f64) -> Self {
        Node { id: 0, depth: 0, bound, fixings: Vec::new(), warm: None }
    }

    /// Column bounds of this node given the root bounds.
    pub fn bounds(&self, root_lower: &[f64], root_upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut lo = root_lower.to_vec();
        let mut hi = root_upper.to_vec();
        for &(j, l, u) in &self.fixings {
            lo[j] = l;
            hi[j] = u;
        }
        (lo, hi)
    }
}

/// Split `node` on binary `column`: the first child fixes it to 0, the second
/// to 1. Both inherit the parent bound and warm start; ids are `next_id` and
/// `next_id + 1`.
pub fn branch(node: &Node, column: usize, next_id: u64) -> (Node, Node) {
    let child = |id: u64, v: f64| {
        let mut fixings = node.fixings.clone();
        fixings.push((column, v, v));
        Node { id, depth: node.depth + 1, bound: node.bound, fixings, warm: node.warm.clone() }
    };
    (child(next_id, 0.0), child(next_id + 1, 1.0))
}

/// Heap key: smallest bound first, then smallest id.
#[derive(Debug)]
pub(crate) struct Queued(pub Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Reversed so that `BinaryHeap` pops the best node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then_with(|| other.0.id.cmp(&self.0.id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BinaryHeap;

    #[test]
    fn branch_fixes_column_both_ways() {
        let root = Node::root(-7.0);
        let (down, up) = branch(&root, 1, 1);
        let (lo, hi) = down.bounds(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!((lo[1], hi[1]), (0.0, 0.0));
        let (lo, hi) = up.bounds(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!((lo[1], hi[1]), (1.0, 1.0));
        assert_eq!((down.bound, up.bound), (-7.0, -7.0));
        assert_eq!((down.depth, up.id), (1, 2));
    }

    #[test]
    fn heap_pops_best_bound_then_smallest_id() {
        let mk = |id, bound| Queued(Node { id, depth: 0, bound, fixings: vec![], warm: None });
        let mut h = BinaryHeap::new();
        for q in [mk(3, 1.0), mk(1, 2.0), mk(2, 1.0), mk(4, 0.5)] {
            h.push(q);
        }
        let order: Vec<u64> = std::iter::from_fn(|| h.pop().map(|q| q.0.id)).collect();
        assert_eq!(order, vec![4, 2, 3, 1]);
    }
}
