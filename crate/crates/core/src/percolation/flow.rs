//! Edmonds-Karp maximum flow on small integer-capacity networks.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: u32,
    orig: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub(crate) fn new(nodes: usize) -> Self {
        FlowNetwork {
            edges: Vec::new(),
            out: vec![Vec::new(); nodes],
        }
    }

    /// Adds `u -> v` with capacity `cap` and its residual twin.
    pub(crate) fn add_edge(&mut self, u: usize, v: usize, cap: u32) {
        self.out[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap, orig: cap });
        self.out[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: 0, orig: 0 });
    }

    /// Saturates the network with shortest augmenting paths.
    pub(crate) fn max_flow(&mut self, source: usize, sink: usize) -> u32 {
        let mut total = 0;
        let mut via = vec![usize::MAX; self.out.len()];
        loop {
            via.fill(usize::MAX);
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &e in &self.out[u] {
                    let Edge { to, cap, .. } = self.edges[e];
                    if cap > 0 && to != source && via[to] == usize::MAX {
                        via[to] = e;
                        queue.push_back(to);
                    }
                }
            }
            if via[sink] == usize::MAX {
                return total;
            }
            let mut bottleneck = u32::MAX;
            let mut v = sink;
            while v != source {
                let e = via[v];
                bottleneck = bottleneck.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let e = via[v];
                self.edges[e].cap -= bottleneck;
                self.edges[e ^ 1].cap += bottleneck;
                v = self.edges[e ^ 1].to;
            }
            total += bottleneck;
        }
    }

    /// Forward edges out of `u` currently carrying flow.
    pub(crate) fn flow_targets(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[u]
            .iter()
            .map(|&e| &self.edges[e])
            .filter(|e| e.orig > 0 && e.cap < e.orig)
            .map(|e| e.to)
    }
}
