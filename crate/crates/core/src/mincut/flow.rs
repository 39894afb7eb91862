use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

/// Residual network with real capacities, solved with Dinic's algorithm.
/// Arc order is insertion order, which makes the traversal deterministic.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    eps: f64,
}

impl FlowNetwork {
    /// `scale` bounds the capacities; residuals below `1e-12 * scale` count
    /// as saturated.
    pub fn new(n_nodes: usize, scale: f64) -> Self {
        FlowNetwork { adj: vec![Vec::new(); n_nodes], eps: 1e-12 * scale.max(1.0) }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        if cap <= 0.0 || from == to {
            return;
        }
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, rev: rev_from });
        self.adj[to].push(Arc { to: from, cap: 0.0, rev: rev_to });
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.adj[v] {
                if a.cap > self.eps && level[a.to] == usize::MAX {
                    level[a.to] = level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, v: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if v == t {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let i = next[v];
            let (to, cap) = (self.adj[v][i].to, self.adj[v][i].cap);
            if cap > self.eps && level[to] == level[v] + 1 {
                let pushed = self.push(to, t, limit.min(cap), level, next);
                if pushed > 0.0 {
                    let rev = self.adj[v][i].rev;
                    self.adj[v][i].cap -= pushed;
                    self.adj[to][rev].cap += pushed;
                    return pushed;
                }
            }
            next[v] += 1;
        }
        0.0
    }

    /// Maximum flow from `s` to `t`; leaves the residual network in place.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.push(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }

    /// Nodes reachable from `s` in the residual network (the source side of
    /// a minimum cut after [`max_flow`](Self::max_flow)).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.adj[v] {
                if a.cap > self.eps && !seen[a.to] {
                    seen[a.to] = true;
                    queue.push_back(a.to);
                }
            }
        }
        seen
    }
}
