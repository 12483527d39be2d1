//! Root-side shortest trust paths over the link-cost graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct HeapItem {
    cost: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over non-negative link costs; returns per-node path cost from
/// the source (infinite when unreachable) and counts relaxations in `ops`.
pub fn shortest_path_costs(
    adjacency: &[Vec<(usize, f64)>],
    source: usize,
    ops: &mut u64,
) -> Vec<f64> {
    let n = adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem {
        cost: 0.0,
        node: source,
    });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        *ops += 1;
        if cost > dist[node] {
            continue;
        }
        for (next, weight) in &adjacency[node] {
            debug_assert!(*weight >= 0.0);
            let candidate = cost + weight;
            *ops += 1;
            if candidate < dist[*next] {
                dist[*next] = candidate;
                heap.push(HeapItem {
                    cost: candidate,
                    node: *next,
                });
            }
        }
    }
    dist
}
