//! Dinic max-flow on small integer-capacity graphs.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: u32,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct FlowGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl FlowGraph {
    pub fn new(n: usize) -> FlowGraph {
        FlowGraph { adj: vec![Vec::new(); n], edges: Vec::new() }
    }

    pub fn add_edge(&mut self, a: usize, b: usize, cap: u32) {
        self.adj[a].push(self.edges.len());
        self.edges.push(Edge { to: b, cap });
        self.adj[b].push(self.edges.len());
        self.edges.push(Edge { to: a, cap: 0 });
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let Edge { to, cap } = self.edges[e];
                if cap > 0 && level[to] == u32::MAX {
                    level[to] = level[v] + 1;
                    q.push_back(to);
                }
            }
        }
        (level[t] != u32::MAX).then_some(level)
    }

    fn augment(&mut self, s: usize, t: usize, level: &[u32], it: &mut [usize]) -> bool {
        // Iterative DFS along the level graph; pushes one unit.
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                for &e in &path {
                    self.edges[e].cap -= 1;
                    self.edges[e ^ 1].cap += 1;
                }
                return true;
            }
            let mut advanced = false;
            while it[v] < self.adj[v].len() {
                let e = self.adj[v][it[v]];
                let Edge { to, cap } = self.edges[e];
                if cap > 0 && level[to] == level[v] + 1 {
                    path.push(e);
                    v = to;
                    advanced = true;
                    break;
                }
                it[v] += 1;
            }
            if !advanced {
                match path.pop() {
                    Some(e) => {
                        v = self.edges[e ^ 1].to;
                        it[v] += 1;
                    }
                    None => return false,
                }
            }
        }
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        let mut total = 0;
        while let Some(level) = self.levels(s, t) {
            let mut it = vec![0; self.adj.len()];
            while self.augment(s, t, &level, &mut it) {
                total += 1;
            }
        }
        total
    }
}
