//! Explicit-state semantics of reactive-modules programs and counterexamples.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::lts::{Lts, LtsBuilder, StateId, StateVar, Valuation, STUTTER};
use crate::rml::{
    eval_arith, eval_bool, parse_synthetic_action, synthetic_action, BoolExpr, EvalError, Program,
    VarInfo,
};

pub const DEFAULT_MAX_STATES: usize = 10_000_000;

/// Environment variable overriding the default state cap.
pub const MAX_STATES_ENV: &str = "RESPO_MAX_STATES";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub max_states: usize,
    /// Clamp out-of-domain updates to the nearest bound instead of failing.
    pub clamp: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_states: default_max_states(),
            clamp: false,
        }
    }
}

/// The state cap, honoring `RESPO_MAX_STATES` when it holds a number.
pub fn default_max_states() -> usize {
    std::env::var(MAX_STATES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_STATES)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("no safety invariant given (add `lightning = ...;` or use --property)")]
    MissingSafetyInvariant,
    #[error("state space exceeds the cap of {limit} states")]
    StateSpaceExceeded { limit: usize },
    #[error("action `{action}` in state {state} sets `{var}` to {value}, outside [{lower}..{upper}]")]
    UpdateOutOfRange {
        var: String,
        value: i64,
        lower: i64,
        upper: i64,
        state: String,
        action: String,
    },
    #[error("{source} while evaluating in state {state}")]
    Eval { state: String, source: EvalError },
    #[error("action name `{name}` is reserved")]
    ReservedAction { name: String },
}

/// One command, addressed by module and position within the module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommandRef {
    pub module: usize,
    pub command: usize,
}

/// An action together with one enabled command from every module that uses it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub action: String,
    pub commands: Vec<CommandRef>,
}

/// Commands grouped by action label; empty actions get their synthetic names.
struct ActionGroup {
    name: String,
    per_module: Vec<(usize, Vec<usize>)>,
}

fn action_groups(p: &Program) -> Vec<ActionGroup> {
    let mut groups: Vec<ActionGroup> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (mi, m) in p.modules.iter().enumerate() {
        for (ci, c) in m.commands.iter().enumerate() {
            let name = match &c.action {
                Some(a) => a.clone(),
                None => synthetic_action(mi, ci),
            };
            let g = *by_name.entry(name.clone()).or_insert_with(|| {
                groups.push(ActionGroup {
                    name,
                    per_module: Vec::new(),
                });
                groups.len() - 1
            });
            let per = &mut groups[g].per_module;
            match per.last_mut() {
                Some((last, cmds)) if *last == mi => cmds.push(ci),
                _ => per.push((mi, vec![ci])),
            }
        }
    }
    groups
}

fn check_reserved(p: &Program) -> Result<(), SemanticsError> {
    for m in &p.modules {
        for c in &m.commands {
            if let Some(a) = &c.action {
                if a == STUTTER || parse_synthetic_action(a).is_some() {
                    return Err(SemanticsError::ReservedAction { name: a.clone() });
                }
            }
        }
    }
    Ok(())
}

fn selections_in(
    p: &Program,
    groups: &[ActionGroup],
    s: &[i64],
) -> Result<Vec<(usize, Vec<CommandRef>)>, EvalError> {
    let mut out = Vec::new();
    'groups: for (gi, g) in groups.iter().enumerate() {
        let mut choices: Vec<Vec<CommandRef>> = Vec::with_capacity(g.per_module.len());
        for (mi, cmds) in &g.per_module {
            let mut enabled = Vec::new();
            for &ci in cmds {
                if eval_bool(&p.modules[*mi].commands[ci].guard, s)? {
                    enabled.push(CommandRef {
                        module: *mi,
                        command: ci,
                    });
                }
            }
            if enabled.is_empty() {
                continue 'groups;
            }
            choices.push(enabled);
        }
        let mut combos: Vec<Vec<CommandRef>> = vec![Vec::new()];
        for opts in &choices {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    opts.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.push(*c);
                        v
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().map(|c| (gi, c)));
    }
    Ok(out)
}

/// All selections enabled in `s`, where `s` holds one value per declared variable.
pub fn enabled_selections(p: &Program, s: &[i64]) -> Result<Vec<Selection>, EvalError> {
    let groups = action_groups(p);
    Ok(selections_in(p, &groups, s)?
        .into_iter()
        .map(|(g, commands)| Selection {
            action: groups[g].name.clone(),
            commands,
        })
        .collect())
}

fn format_values(vars: &[VarInfo], s: &[i64]) -> String {
    vars.iter()
        .zip(s)
        .map(|(v, x)| format!("{}={x}", v.name))
        .collect::<Vec<_>>()
        .join("&")
}

/// Applies the updates of `commands` simultaneously to `s`.
pub fn apply_selection(
    p: &Program,
    vars: &[VarInfo],
    s: &[i64],
    action: &str,
    commands: &[CommandRef],
    clamp: bool,
) -> Result<Vec<i64>, SemanticsError> {
    let mut next = s.to_vec();
    for c in commands {
        for u in &p.modules[c.module].commands[c.command].updates {
            let value = eval_arith(&u.value, s).map_err(|e| SemanticsError::Eval {
                state: format_values(vars, s),
                source: e,
            })?;
            let v = &vars[u.var.slot];
            next[u.var.slot] = if (v.lower..=v.upper).contains(&value) {
                value
            } else if clamp {
                value.clamp(v.lower, v.upper)
            } else {
                return Err(SemanticsError::UpdateOutOfRange {
                    var: v.name.clone(),
                    value,
                    lower: v.lower,
                    upper: v.upper,
                    state: format_values(vars, s),
                    action: display_action(p, action),
                });
            };
        }
    }
    Ok(next)
}

/// Builds the reachable fragment of the transition system of `p` against its
/// safety invariant.
///
/// States are numbered in lexicographic order of their assignments.
pub fn build_ts(p: &Program, opts: &BuildOptions) -> Result<Lts, SemanticsError> {
    let phi = p
        .safety_invariant
        .as_ref()
        .ok_or(SemanticsError::MissingSafetyInvariant)?;
    check_reserved(p)?;
    let vars = p.variables();
    let groups = action_groups(p);

    let init: Box<[i64]> = vars.iter().map(|v| v.init).collect();
    let mut states: Vec<Box<[i64]>> = vec![init.clone()];
    let mut index: HashMap<Box<[i64]>, StateId> = HashMap::from([(init, 0)]);
    let mut bad = Vec::new();
    let mut edges: Vec<(StateId, StateId, u32)> = Vec::new();
    let mut frontier: Vec<StateId> = vec![0];
    let limit = opts.max_states;
    if limit == 0 {
        return Err(SemanticsError::StateSpaceExceeded { limit });
    }

    while !frontier.is_empty() {
        let expanded: Vec<(bool, Vec<(u32, Vec<i64>)>)> = frontier
            .par_iter()
            .map(|&id| expand(p, &vars, &groups, phi, &states[id as usize], opts.clamp))
            .collect::<Result<_, _>>()?;
        let mut next = Vec::new();
        for (&src, (is_bad, succs)) in frontier.iter().zip(expanded) {
            if is_bad {
                bad.push(src);
                continue;
            }
            for (g, target) in succs {
                let target = target.into_boxed_slice();
                let dst = match index.get(&target) {
                    Some(&d) => d,
                    None => {
                        if states.len() >= limit {
                            return Err(SemanticsError::StateSpaceExceeded { limit });
                        }
                        let d = states.len() as StateId;
                        states.push(target.clone());
                        index.insert(target, d);
                        next.push(d);
                        d
                    }
                };
                edges.push((src, dst, g));
            }
        }
        frontier = next;
    }
    drop(index);

    let mut order: Vec<StateId> = (0..states.len() as StateId).collect();
    order.sort_unstable_by(|&a, &b| states[a as usize].cmp(&states[b as usize]));
    let mut rank = vec![0 as StateId; states.len()];
    for (r, &s) in order.iter().enumerate() {
        rank[s as usize] = r as StateId;
    }
    let mut b = LtsBuilder::new(states.len(), rank[0]);
    let ids: Vec<u32> = groups.iter().map(|g| b.intern(&g.name)).collect();
    for (s, t, g) in edges {
        b.add_edge_id(rank[s as usize], rank[t as usize], ids[g as usize]);
    }
    for s in bad {
        b.set_bad(rank[s as usize]);
    }
    let mut values = Vec::with_capacity(states.len() * vars.len());
    for &s in &order {
        values.extend_from_slice(&states[s as usize]);
    }
    b.set_valuation(Valuation::new(
        vars.iter()
            .map(|v| StateVar {
                name: v.name.clone(),
                lower: v.lower,
                upper: v.upper,
            })
            .collect(),
        values,
    ));
    Ok(b.build())
}

type Expansion = (bool, Vec<(u32, Vec<i64>)>);

fn expand(
    p: &Program,
    vars: &[VarInfo],
    groups: &[ActionGroup],
    phi: &BoolExpr,
    s: &[i64],
    clamp: bool,
) -> Result<Expansion, SemanticsError> {
    let eval_err = |e| SemanticsError::Eval {
        state: format_values(vars, s),
        source: e,
    };
    if eval_bool(phi, s).map_err(eval_err)? {
        return Ok((true, Vec::new()));
    }
    let mut succs = Vec::new();
    for (g, cmds) in selections_in(p, groups, s).map_err(eval_err)? {
        let t = apply_selection(p, vars, s, &groups[g].name, &cmds, clamp)?;
        succs.push((g as u32, t));
    }
    Ok((false, succs))
}

/// Renders an action for reports: synthetic names become `eps@Module#j`.
pub fn display_action(p: &Program, action: &str) -> String {
    match parse_synthetic_action(action) {
        Some((m, c)) if m < p.modules.len() => format!("eps@{}#{c}", p.modules[m].name),
        _ => action.to_string(),
    }
}

/// A loop-free path from the initial state into a bad state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub path: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterexampleError {
    #[error("path is not a run: {0}")]
    NotARun(String),
    #[error("state {0} occurs twice on the path")]
    NotLoopFree(String),
    #[error("path ends in state {0}, which is not bad")]
    DoesNotEndInBad(String),
    #[error("line {line}: unknown state `{text}`")]
    UnknownState { line: usize, text: String },
}

/// Shortest counterexample; among shortest ones the lexicographically
/// smallest sequence of state indices.
pub fn find_counterexample(ts: &Lts) -> Option<Counterexample> {
    let n = ts.num_states();
    let mut parent = vec![StateId::MAX; n];
    let init = ts.initial();
    parent[init as usize] = init;
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        if ts.is_bad(s) {
            let mut path = vec![s];
            let mut cur = s;
            while cur != init {
                cur = parent[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(Counterexample { path });
        }
        for &t in ts.successors(s) {
            if parent[t as usize] == StateId::MAX {
                parent[t as usize] = s;
                queue.push_back(t);
            }
        }
    }
    None
}

pub fn validate_counterexample(
    ts: &Lts,
    path: &[StateId],
) -> Result<Counterexample, CounterexampleError> {
    let n = ts.num_states() as StateId;
    if let Some(i) = path.iter().position(|&s| s >= n) {
        return Err(CounterexampleError::UnknownState {
            line: i + 1,
            text: format!("#{}", path[i]),
        });
    }
    match path.first() {
        None => return Err(CounterexampleError::NotARun("empty path".into())),
        Some(&s) if s != ts.initial() => {
            return Err(CounterexampleError::NotARun(format!(
                "starts in {} instead of the initial state",
                ts.describe_state(s)
            )))
        }
        _ => {}
    }
    for w in path.windows(2) {
        if !ts.has_edge(w[0], w[1]) {
            return Err(CounterexampleError::NotARun(format!(
                "no transition from {} to {}",
                ts.describe_state(w[0]),
                ts.describe_state(w[1])
            )));
        }
    }
    let mut seen = vec![false; n as usize];
    for &s in path {
        if std::mem::replace(&mut seen[s as usize], true) {
            return Err(CounterexampleError::NotLoopFree(ts.describe_state(s)));
        }
    }
    let last = *path.last().unwrap();
    if !ts.is_bad(last) {
        return Err(CounterexampleError::DoesNotEndInBad(ts.describe_state(last)));
    }
    Ok(Counterexample {
        path: path.to_vec(),
    })
}

/// Reads a counterexample file: one state per line, either `x=1&y=2` or a
/// plain state index. Blank lines and `#` comments are skipped.
pub fn parse_counterexample(ts: &Lts, text: &str) -> Result<Vec<StateId>, CounterexampleError> {
    let mut path = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let unknown = || CounterexampleError::UnknownState {
            line: i + 1,
            text: line.to_string(),
        };
        if let Ok(idx) = line.parse::<StateId>() {
            if (idx as usize) >= ts.num_states() {
                return Err(unknown());
            }
            path.push(idx);
            continue;
        }
        let val = ts.valuation().ok_or_else(unknown)?;
        let mut values = vec![None; val.vars.len()];
        for part in line.split('&') {
            let (name, value) = part.split_once('=').ok_or_else(unknown)?;
            let slot = val.var_index(name.trim()).ok_or_else(unknown)?;
            let value: i64 = value.trim().parse().map_err(|_| unknown())?;
            if values[slot].replace(value).is_some() {
                return Err(unknown());
            }
        }
        let values: Vec<i64> = values.into_iter().collect::<Option<_>>().ok_or_else(unknown)?;
        path.push(ts.find_state(&values).ok_or_else(unknown)?);
    }
    Ok(path)
}

/// Writes a path in the counterexample file format.
pub fn format_counterexample(ts: &Lts, path: &[StateId]) -> String {
    let mut out = String::new();
    for &s in path {
        match ts.valuation() {
            Some(v) if !v.vars.is_empty() => out.push_str(&v.format_state(s)),
            _ => out.push_str(&s.to_string()),
        }
        out.push('\n');
    }
    out
}
