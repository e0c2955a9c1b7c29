//! Two-player safety games solved by backward attractor computation.
//!
//! [`GameGraph`] holds the arena shared by many games (successors,
//! predecessors, initial state, bad set). Ownership is supplied per solve,
//! so one graph can be solved under thousands of different ownerships
//! without copying. [`SafetyGame`] bundles a graph with a fixed ownership.

use crate::lts::{Lts, StateId};

/// Returned by an engraving function for states that keep all their edges.
pub const UNRESTRICTED: StateId = StateId::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    succ_off: Vec<u32>,
    succ: Vec<StateId>,
    pred_off: Vec<u32>,
    pred: Vec<StateId>,
    initial: StateId,
    bad: Vec<bool>,
}

impl GameGraph {
    /// Builds an arena from raw edges. Duplicate edges are merged and states
    /// without successors get a self-loop.
    pub fn new(
        num_states: usize,
        initial: StateId,
        bad: Vec<bool>,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> Self {
        assert_eq!(bad.len(), num_states);
        assert!((initial as usize) < num_states);
        let mut edges: Vec<(StateId, StateId)> = edges.into_iter().collect();
        let mut has_out = vec![false; num_states];
        for &(s, t) in &edges {
            assert!((s as usize) < num_states && (t as usize) < num_states);
            has_out[s as usize] = true;
        }
        for (s, out) in has_out.iter().enumerate() {
            if !out {
                edges.push((s as StateId, s as StateId));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted(num_states, initial, bad, &edges)
    }

    pub fn from_lts(ts: &Lts) -> Self {
        let n = ts.num_states();
        let mut edges = Vec::with_capacity(ts.num_transitions());
        for s in 0..n as StateId {
            edges.extend(ts.successors(s).iter().map(|&t| (s, t)));
        }
        Self::from_sorted(n, ts.initial(), ts.bad_mask().to_vec(), &edges)
    }

    fn from_sorted(
        n: usize,
        initial: StateId,
        bad: Vec<bool>,
        edges: &[(StateId, StateId)],
    ) -> Self {
        let mut succ_off = vec![0u32; n + 1];
        let mut pred_off = vec![0u32; n + 1];
        for &(s, t) in edges {
            succ_off[s as usize + 1] += 1;
            pred_off[t as usize + 1] += 1;
        }
        for i in 0..n {
            succ_off[i + 1] += succ_off[i];
            pred_off[i + 1] += pred_off[i];
        }
        let succ = edges.iter().map(|e| e.1).collect();
        let mut fill = pred_off.clone();
        let mut pred = vec![0; edges.len()];
        for &(s, t) in edges {
            pred[fill[t as usize] as usize] = s;
            fill[t as usize] += 1;
        }
        GameGraph {
            succ_off,
            succ,
            pred_off,
            pred,
            initial,
            bad,
        }
    }

    pub fn num_states(&self) -> usize {
        self.bad.len()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_bad(&self, s: StateId) -> bool {
        self.bad[s as usize]
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.succ[self.succ_off[s as usize] as usize..self.succ_off[s as usize + 1] as usize]
    }

    pub fn predecessors(&self, s: StateId) -> &[StateId] {
        &self.pred[self.pred_off[s as usize] as usize..self.pred_off[s as usize + 1] as usize]
    }

    fn out_degree(&self, s: StateId) -> u32 {
        self.succ_off[s as usize + 1] - self.succ_off[s as usize]
    }

    /// Computes the Reach-attractor of the bad set into `ws`.
    ///
    /// `safe(s)` tells whether Safe owns `s`. `engraved(s)` returns the single
    /// successor `s` is restricted to, or [`UNRESTRICTED`] if `s` keeps all its edges;
    /// an engraved edge must be an edge of the graph. With `stop_at_initial`
    /// the computation ends as soon as the initial state is attracted.
    /// Returns whether the initial state is attracted.
    pub fn attract(
        &self,
        ws: &mut Workspace,
        safe: impl Fn(StateId) -> bool,
        engraved: impl Fn(StateId) -> StateId,
        stop_at_initial: bool,
    ) -> bool {
        ws.reset(self.num_states());
        let stamp = ws.stamp;
        let mut initial_hit = false;
        for (s, &b) in self.bad.iter().enumerate() {
            if b {
                ws.attracted[s] = stamp;
                ws.queue.push(s as StateId);
                initial_hit |= s as StateId == self.initial;
            }
        }
        if initial_hit && stop_at_initial {
            return true;
        }
        let mut head = 0;
        while head < ws.queue.len() {
            let t = ws.queue[head];
            head += 1;
            for &p in self.predecessors(t) {
                if ws.attracted[p as usize] == stamp {
                    continue;
                }
                let e = engraved(p);
                let hit = if e != UNRESTRICTED {
                    e == t
                } else if !safe(p) {
                    true
                } else {
                    if ws.counted[p as usize] != stamp {
                        ws.counted[p as usize] = stamp;
                        ws.count[p as usize] = self.out_degree(p);
                    }
                    ws.count[p as usize] -= 1;
                    ws.count[p as usize] == 0
                };
                if hit {
                    ws.attracted[p as usize] = stamp;
                    ws.queue.push(p);
                    if p == self.initial {
                        initial_hit = true;
                        if stop_at_initial {
                            return true;
                        }
                    }
                }
            }
        }
        initial_hit
    }
}

/// Scratch space for [`GameGraph::attract`], reusable across solves.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    attracted: Vec<u32>,
    counted: Vec<u32>,
    count: Vec<u32>,
    queue: Vec<StateId>,
    stamp: u32,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.attracted.len() != n || self.stamp == u32::MAX {
            self.attracted = vec![0; n];
            self.counted = vec![0; n];
            self.count = vec![0; n];
            self.stamp = 0;
        }
        self.stamp += 1;
        self.queue.clear();
    }

    /// Whether `s` was attracted by the last solve.
    pub fn is_attracted(&self, s: StateId) -> bool {
        self.attracted[s as usize] == self.stamp
    }
}

/// A safety game: an arena together with the states owned by Safe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyGame {
    graph: GameGraph,
    safe: Vec<bool>,
}

impl SafetyGame {
    pub fn new(graph: GameGraph, safe: Vec<bool>) -> Self {
        assert_eq!(safe.len(), graph.num_states());
        SafetyGame { graph, safe }
    }

    pub fn graph(&self) -> &GameGraph {
        &self.graph
    }

    pub fn num_states(&self) -> usize {
        self.graph.num_states()
    }

    pub fn initial(&self) -> StateId {
        self.graph.initial
    }

    pub fn is_bad(&self, s: StateId) -> bool {
        self.graph.is_bad(s)
    }

    pub fn is_safe(&self, s: StateId) -> bool {
        self.safe[s as usize]
    }

    pub fn safe_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&s| self.safe[s as usize])
    }

    pub fn reach_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&s| !self.safe[s as usize])
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        self.graph.successors(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningRegion {
    pub safe_wins: Vec<bool>,
}

impl WinningRegion {
    pub fn contains(&self, s: StateId) -> bool {
        self.safe_wins[s as usize]
    }
}

/// Complement of the Reach-attractor of the bad states.
pub fn solve(g: &SafetyGame) -> WinningRegion {
    let mut ws = Workspace::new();
    g.graph
        .attract(&mut ws, |s| g.safe[s as usize], |_| UNRESTRICTED, false);
    WinningRegion {
        safe_wins: (0..g.num_states() as StateId)
            .map(|s| !ws.is_attracted(s))
            .collect(),
    }
}

/// Whether Safe wins from the initial state.
pub fn value(g: &SafetyGame) -> bool {
    let mut ws = Workspace::new();
    !g.graph
        .attract(&mut ws, |s| g.safe[s as usize], |_| UNRESTRICTED, true)
}

/// For every Safe state in the winning region, its smallest successor that
/// stays in the region.
pub fn extract_strategy(g: &SafetyGame, w: &WinningRegion) -> Vec<Option<StateId>> {
    (0..g.num_states() as StateId)
        .map(|s| {
            if g.is_safe(s) && w.contains(s) {
                g.successors(s).iter().copied().find(|&t| w.contains(t))
            } else {
                None
            }
        })
        .collect()
}
