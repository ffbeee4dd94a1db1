//! A* over a dense, integer-indexed node set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::atlas::NodeId;

/// Accumulated path cost. The representation may be exact (step counts) as
/// long as [`SearchSpace::cost_value`] maps it to meters.
pub(crate) trait SearchSpace {
    type Cost: Copy + Default;

    fn node_count(&self) -> usize;
    fn index(&self, node: NodeId) -> usize;
    fn successors(&self, node: NodeId, out: &mut Vec<(NodeId, Self::Cost)>);
    fn extend(&self, cost: Self::Cost, step: Self::Cost) -> Self::Cost;
    fn cost_value(&self, cost: Self::Cost) -> f64;
    fn heuristic(&self, node: NodeId) -> f64;
}

pub(crate) struct Found<C> {
    pub nodes: Vec<NodeId>,
    pub cost: C,
    pub expanded: usize,
}

pub(crate) enum Outcome<C> {
    Found(Found<C>),
    Unreachable { expanded: usize },
}

struct Entry<C> {
    f: f64,
    h: f64,
    node: NodeId,
    g: C,
    g_value: f64,
}

impl<C> Entry<C> {
    fn key(&self) -> (f64, f64, usize, usize) {
        (self.f, self.h, self.node.row, self.node.col)
    }
}

impl<C> PartialEq for Entry<C> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<C> Eq for Entry<C> {}

impl<C> PartialOrd for Entry<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<C> Ord for Entry<C> {
    // BinaryHeap is a max-heap: reverse so the smallest (f, h, row, col) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| b.3.cmp(&a.3))
    }
}

/// Best-first search ordered by `(f, h, row, col)`. Nodes are re-opened when a
/// strictly cheaper route appears, so an admissible but inconsistent
/// heuristic still yields an optimal path.
pub(crate) fn astar<S: SearchSpace>(space: &S, start: NodeId, goal: NodeId) -> Outcome<S::Cost> {
    let n = space.node_count();
    let mut best: Vec<Option<(S::Cost, f64)>> = vec![None; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let mut scratch = Vec::with_capacity(8);
    let mut expanded = 0;

    let zero = S::Cost::default();
    best[space.index(start)] = Some((zero, 0.0));
    let h0 = space.heuristic(start);
    heap.push(Entry {
        f: h0,
        h: h0,
        node: start,
        g: zero,
        g_value: 0.0,
    });

    while let Some(Entry { node, g, g_value, .. }) = heap.pop() {
        let i = space.index(node);
        if matches!(best[i], Some((_, v)) if g_value > v) {
            continue;
        }
        if node == goal {
            let mut nodes = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[space.index(cur)] {
                nodes.push(p);
                cur = p;
            }
            nodes.reverse();
            return Outcome::Found(Found {
                nodes,
                cost: g,
                expanded,
            });
        }
        expanded += 1;
        scratch.clear();
        space.successors(node, &mut scratch);
        for &(next, step) in &scratch {
            let ng = space.extend(g, step);
            let nv = space.cost_value(ng);
            let j = space.index(next);
            if best[j].is_none_or(|(_, v)| nv < v) {
                best[j] = Some((ng, nv));
                parent[j] = Some(node);
                let h = space.heuristic(next);
                heap.push(Entry {
                    f: nv + h,
                    h,
                    node: next,
                    g: ng,
                    g_value: nv,
                });
            }
        }
    }
    Outcome::Unreachable { expanded }
}
