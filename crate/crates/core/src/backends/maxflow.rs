//! Max-flow / min-cut on sparse graphs with `f64` capacities.
//!
//! Dinic's algorithm: BFS level graphs and blocking flows found by iterative
//! DFS, so long augmenting paths on large grids do not recurse.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        FlowGraph {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds `u → v` with capacity `cap` and `v → u` with `rev_cap`. Edge ids
    /// come in pairs: `e ^ 1` is the reverse of `e`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        debug_assert!(cap >= 0.0 && rev_cap >= 0.0);
        let e = self.edges.len();
        self.edges.push(Edge { to: v, cap });
        self.edges.push(Edge { to: u, cap: rev_cap });
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let Edge { to, cap } = self.edges[e];
                if cap > 0.0 && level[to] == u32::MAX {
                    level[to] = level[u] + 1;
                    q.push_back(to);
                }
            }
        }
        (level[t] != u32::MAX).then_some(level)
    }

    fn blocking_flow(&mut self, s: usize, t: usize, level: &[u32]) -> f64 {
        let mut total = 0.0;
        let mut next = vec![0usize; self.adj.len()];
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path
                    .iter()
                    .map(|&e| self.edges[e].cap)
                    .fold(f64::INFINITY, f64::min);
                if !f.is_finite() {
                    return f64::INFINITY;
                }
                for &e in &path {
                    self.edges[e].cap -= f;
                    self.edges[e ^ 1].cap += f;
                }
                total += f;
                // Restart from the tail of the first saturated edge.
                let k = path
                    .iter()
                    .position(|&e| self.edges[e].cap <= 0.0)
                    .unwrap_or(0);
                path.truncate(k);
                u = if k == 0 { s } else { self.edges[path[k - 1]].to };
                continue;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let e = self.adj[u][next[u]];
                let Edge { to, cap } = self.edges[e];
                if cap > 0.0 && level[to] == level[u] + 1 {
                    path.push(e);
                    u = to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                // Dead end: retreat and skip this edge.
                let e = path.pop().unwrap();
                u = self.edges[e ^ 1].to;
                next[u] += 1;
            }
        }
    }

    /// Pushes the maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while let Some(level) = self.levels(s, t) {
            let f = self.blocking_flow(s, t, &level);
            flow += f;
            if !f.is_finite() {
                break;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph (the source side of a
    /// minimum cut once [`max_flow`](Self::max_flow) has run).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let Edge { to, cap } = self.edges[e];
                if cap > 0.0 && !seen[to] {
                    seen[to] = true;
                    q.push_back(to);
                }
            }
        }
        seen
    }
}
