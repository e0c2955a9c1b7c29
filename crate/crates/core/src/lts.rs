//! Explicit labeled transition systems.
//!
//! Successor lists are stored in compressed rows sorted by target. Every
//! state has at least one outgoing transition and bad states are absorbing:
//! [`LtsBuilder::build`] removes the outgoing edges of bad states and adds a
//! self-loop labeled [`STUTTER`] to bad and deadlocked states.

use std::collections::HashMap;

pub type StateId = u32;

/// Label of the self-loops added to bad and deadlocked states.
pub const STUTTER: &str = "__loop";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
}

/// Variable assignments attached to the states of a system built from a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    pub vars: Vec<StateVar>,
    values: Vec<i64>,
}

impl Valuation {
    pub fn new(vars: Vec<StateVar>, values: Vec<i64>) -> Self {
        assert!(vars.is_empty() || values.len() % vars.len() == 0);
        Valuation { vars, values }
    }

    pub fn state(&self, s: StateId) -> &[i64] {
        let w = self.vars.len();
        &self.values[s as usize * w..(s as usize + 1) * w]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn num_states(&self) -> usize {
        if self.vars.is_empty() {
            0
        } else {
            self.values.len() / self.vars.len()
        }
    }

    /// Renders a state as `x=1&y=2`.
    pub fn format_state(&self, s: StateId) -> String {
        self.vars
            .iter()
            .zip(self.state(s))
            .map(|(v, x)| format!("{}={x}", v.name))
            .collect::<Vec<_>>()
            .join("&")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    actions: Vec<String>,
    offsets: Vec<u32>,
    targets: Vec<StateId>,
    labels: Vec<u32>,
    initial: StateId,
    bad: Vec<bool>,
    valuation: Option<Valuation>,
}

impl Lts {
    pub fn num_states(&self) -> usize {
        self.bad.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.targets.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_bad(&self, s: StateId) -> bool {
        self.bad[s as usize]
    }

    pub fn bad_mask(&self) -> &[bool] {
        &self.bad
    }

    pub fn bad_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.bad
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i as StateId)
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        let (a, b) = self.row(s);
        &self.targets[a..b]
    }

    pub fn successor_labels(&self, s: StateId) -> &[u32] {
        let (a, b) = self.row(s);
        &self.labels[a..b]
    }

    /// `(target, action id)` pairs of `s`, sorted by target.
    pub fn edges(&self, s: StateId) -> impl Iterator<Item = (StateId, u32)> + '_ {
        let (a, b) = self.row(s);
        self.targets[a..b]
            .iter()
            .copied()
            .zip(self.labels[a..b].iter().copied())
    }

    pub fn has_edge(&self, s: StateId, t: StateId) -> bool {
        self.successors(s).binary_search(&t).is_ok()
    }

    fn row(&self, s: StateId) -> (usize, usize) {
        (
            self.offsets[s as usize] as usize,
            self.offsets[s as usize + 1] as usize,
        )
    }

    /// Action names, sorted; action ids index this list.
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, id: u32) -> &str {
        &self.actions[id as usize]
    }

    pub fn action_id(&self, name: &str) -> Option<u32> {
        self.actions
            .binary_search_by(|a| a.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    pub fn valuation(&self) -> Option<&Valuation> {
        self.valuation.as_ref()
    }

    pub fn state_values(&self, s: StateId) -> Option<&[i64]> {
        self.valuation.as_ref().map(|v| v.state(s))
    }

    /// Looks a state up by its variable assignment.
    pub fn find_state(&self, values: &[i64]) -> Option<StateId> {
        let val = self.valuation.as_ref()?;
        if values.len() != val.vars.len() {
            return None;
        }
        let n = self.num_states();
        let sorted = (1..n).all(|i| val.state(i as StateId - 1) < val.state(i as StateId));
        if sorted {
            let (mut lo, mut hi) = (0usize, n);
            while lo < hi {
                let mid = (lo + hi) / 2;
                match val.state(mid as StateId).cmp(values) {
                    std::cmp::Ordering::Less => lo = mid + 1,
                    std::cmp::Ordering::Greater => hi = mid,
                    std::cmp::Ordering::Equal => return Some(mid as StateId),
                }
            }
            None
        } else {
            (0..n as StateId).find(|&s| val.state(s) == values)
        }
    }

    /// Non-bad states whose only transition is the added stutter self-loop.
    pub fn completed_deadlocks(&self) -> Vec<StateId> {
        let stutter = self.action_id(STUTTER);
        (0..self.num_states() as StateId)
            .filter(|&s| {
                !self.is_bad(s)
                    && self.successors(s) == [s]
                    && Some(self.successor_labels(s)[0]) == stutter
            })
            .collect()
    }

    /// Renders a state for diagnostics: its assignment if known, `#i` otherwise.
    pub fn describe_state(&self, s: StateId) -> String {
        match &self.valuation {
            Some(v) if !v.vars.is_empty() => v.format_state(s),
            _ => format!("#{s}"),
        }
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.initial];
        seen[self.initial as usize] = true;
        while let Some(s) = stack.pop() {
            for &t in self.successors(s) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }
}

/// Collects raw transitions and produces a normalized [`Lts`].
#[derive(Debug, Clone)]
pub struct LtsBuilder {
    num_states: usize,
    initial: StateId,
    bad: Vec<bool>,
    edges: Vec<(StateId, StateId, u32)>,
    names: Vec<String>,
    ids: HashMap<String, u32>,
    valuation: Option<Valuation>,
}

impl LtsBuilder {
    pub fn new(num_states: usize, initial: StateId) -> Self {
        assert!((initial as usize) < num_states, "initial state out of range");
        LtsBuilder {
            num_states,
            initial,
            bad: vec![false; num_states],
            edges: Vec::new(),
            names: Vec::new(),
            ids: HashMap::new(),
            valuation: None,
        }
    }

    pub fn intern(&mut self, action: &str) -> u32 {
        if let Some(&id) = self.ids.get(action) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(action.to_string());
        self.ids.insert(action.to_string(), id);
        id
    }

    pub fn set_bad(&mut self, s: StateId) {
        self.bad[s as usize] = true;
    }

    pub fn add_edge(&mut self, src: StateId, dst: StateId, action: &str) {
        let id = self.intern(action);
        self.add_edge_id(src, dst, id);
    }

    /// Adds an edge with an id previously returned by [`LtsBuilder::intern`].
    pub fn add_edge_id(&mut self, src: StateId, dst: StateId, action: u32) {
        assert!((src as usize) < self.num_states && (dst as usize) < self.num_states);
        self.edges.push((src, dst, action));
    }

    pub fn set_valuation(&mut self, valuation: Valuation) {
        assert_eq!(valuation.num_states(), self.num_states);
        self.valuation = Some(valuation);
    }

    pub fn build(mut self) -> Lts {
        let n = self.num_states;
        let stutter = self.intern(STUTTER);
        let bad = std::mem::take(&mut self.bad);
        self.edges.retain(|&(s, _, _)| !bad[s as usize]);
        let mut has_out = vec![false; n];
        for &(s, _, _) in &self.edges {
            has_out[s as usize] = true;
        }
        for s in 0..n {
            if bad[s] || !has_out[s] {
                self.edges.push((s as StateId, s as StateId, stutter));
            }
        }

        // Sorted action table; the smallest name wins when two actions share an edge.
        let mut order: Vec<u32> = (0..self.names.len() as u32).collect();
        order.sort_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize]));
        let mut rank = vec![0u32; self.names.len()];
        for (r, &id) in order.iter().enumerate() {
            rank[id as usize] = r as u32;
        }
        for e in self.edges.iter_mut() {
            e.2 = rank[e.2 as usize];
        }
        let mut edges = std::mem::take(&mut self.edges);
        edges.sort_unstable();
        edges.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);

        // Only actions that label some edge survive.
        let mut used = vec![false; order.len()];
        for e in &edges {
            used[e.2 as usize] = true;
        }
        let mut compact = vec![u32::MAX; order.len()];
        let mut actions = Vec::new();
        for (r, &id) in order.iter().enumerate() {
            if used[r] {
                compact[r] = actions.len() as u32;
                actions.push(self.names[id as usize].clone());
            }
        }

        let mut offsets = vec![0u32; n + 1];
        for e in &edges {
            offsets[e.0 as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.iter().map(|e| e.1).collect();
        let labels = edges.iter().map(|e| compact[e.2 as usize]).collect();
        Lts {
            actions,
            offsets,
            targets,
            labels,
            initial: self.initial,
            bad,
            valuation: self.valuation,
        }
    }
}
