//! Min-cost flow by successive shortest paths with Johnson potentials.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i128,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Network {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(nodes: usize) -> Self {
        Network { arcs: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    /// Adds `from -> to` and returns its id. The reverse residual arc is
    /// `id ^ 1`.
    pub fn add(&mut self, from: usize, to: usize, cap: i64, cost: i128) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc { to: from, cap: 0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently on arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.arcs[id ^ 1].cap
    }

    /// Sends as much flow as possible from `source` to `sink` at minimum
    /// cost. The network must have no negative cycle. Returns
    /// `(flow, cost)`.
    pub fn min_cost_max_flow(&mut self, source: usize, sink: usize) -> (i64, i128) {
        let n = self.adj.len();
        let mut potential = self.bellman_ford(source);
        let mut total_flow = 0;
        let mut total_cost = 0;
        let mut dist = vec![i128::MAX; n];
        let mut via = vec![usize::MAX; n];
        loop {
            dist.fill(i128::MAX);
            via.fill(usize::MAX);
            dist[source] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i128, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &id in &self.adj[u] {
                    let arc = &self.arcs[id];
                    if arc.cap == 0 || potential[arc.to] == i128::MAX {
                        continue;
                    }
                    let reduced = arc.cost + potential[u] - potential[arc.to];
                    let nd = d + reduced;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        via[arc.to] = id;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[sink] == i128::MAX {
                break;
            }
            let reach = dist[sink];
            for v in 0..n {
                if potential[v] != i128::MAX {
                    potential[v] += dist[v].min(reach);
                }
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let id = via[v];
                push = push.min(self.arcs[id].cap);
                v = self.arcs[id ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let id = via[v];
                self.arcs[id].cap -= push;
                self.arcs[id ^ 1].cap += push;
                total_cost += self.arcs[id].cost * push as i128;
                v = self.arcs[id ^ 1].to;
            }
            total_flow += push;
        }
        (total_flow, total_cost)
    }

    fn bellman_ford(&self, source: usize) -> Vec<i128> {
        let n = self.adj.len();
        let mut dist = vec![i128::MAX; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &id in &self.adj[u] {
                let arc = &self.arcs[id];
                if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[u] + arc.cost;
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        queue.push_back(arc.to);
                    }
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_route() {
        // 0 -> 1 -> 3 costs 1+1, 0 -> 2 -> 3 costs 5+0, both capacity 2.
        let mut net = Network::new(4);
        net.add(0, 1, 2, 1);
        net.add(1, 3, 2, 1);
        let a = net.add(0, 2, 2, 5);
        net.add(2, 3, 2, 0);
        assert_eq!(net.min_cost_max_flow(0, 3), (4, 14));
        assert_eq!(net.flow(a), 2);
    }

    #[test]
    fn negative_arcs_are_preferred() {
        let mut net = Network::new(3);
        net.add(0, 1, 3, 0);
        let cheap = net.add(1, 2, 1, -100);
        net.add(1, 2, 5, 2);
        assert_eq!(net.min_cost_max_flow(0, 2), (3, -96));
        assert_eq!(net.flow(cheap), 1);
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // Classic case where the first shortest path must be partly undone.
        let mut net = Network::new(4);
        net.add(0, 1, 1, 1);
        net.add(0, 2, 1, 2);
        net.add(1, 2, 1, 0);
        net.add(1, 3, 1, 2);
        net.add(2, 3, 1, 1);
        assert_eq!(net.min_cost_max_flow(0, 3), (2, 6));
    }
}
