//! Responsibility signatures derived from program structure: module-based
//! (through a scheduler module), value-based, action-based (through action
//! separation) and manual signature files.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::lts::{Lts, LtsBuilder, StateId, STUTTER};
use crate::responsibility::{Actor, Signature};
use crate::rml::{
    eval_bool, parse_bool_expr, validate, ArithExpr, BoolExpr, CmpOp, Command, Decl,
    FrontendError, Module, Pos, Program, Update, VarInfo, VarRef,
};
use crate::semantics::{enabled_selections, Counterexample};

pub const ACTIVE: &str = "active";
pub const SCHEDULER_MODULE: &str = "__scheduler";
/// Label of the internal edges of an action-separation gadget.
pub const SEPARATION_LABEL: &str = "__sep";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActorError {
    #[error("name `{0}` is already used by the program")]
    NameClash(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("the transition system has no variable valuations")]
    NoValuation,
    #[error("no variables given for value-based actors")]
    NoVariables,
    #[error("line {line}: {message}")]
    ManualFormat { line: usize, message: String },
    #[error("line {line}: {source}")]
    ManualExpr { line: usize, source: FrontendError },
    #[error("{0}")]
    Frontend(#[from] FrontendError),
    #[error("counterexample cannot be lifted: {0}")]
    Lift(String),
}

fn var(name: &str) -> ArithExpr {
    ArithExpr::Var(VarRef::new(name))
}

fn active_is(v: i64) -> BoolExpr {
    BoolExpr::cmp(CmpOp::Eq, var(ACTIVE), ArithExpr::Const(v))
}

fn is_sync(p: &Program, action: &Option<String>) -> bool {
    action
        .as_ref()
        .is_some_and(|a| p.modules_with_action(a).len() > 1)
}

/// Disjunction of the guards of the module's non-synchronising commands.
pub fn module_guard(p: &Program, module: usize) -> BoolExpr {
    BoolExpr::any(
        p.modules[module]
            .commands
            .iter()
            .filter(|c| !is_sync(p, &c.action))
            .map(|c| c.guard.clone()),
    )
}

/// Conjunction, over the modules using `action`, of the disjunction of their
/// `action` guards.
pub fn action_guard(p: &Program, action: &str) -> BoolExpr {
    BoolExpr::all(p.modules_with_action(action).into_iter().map(|m| {
        BoolExpr::any(
            p.modules[m]
                .commands
                .iter()
                .filter(|c| c.action.as_deref() == Some(action))
                .map(|c| c.guard.clone()),
        )
    }))
}

pub fn choose_action(name: &str) -> String {
    format!("__choose_{name}")
}

pub fn act_action(module: &str) -> String {
    format!("__act_{module}")
}

/// A program extended with a scheduler that picks one module or
/// synchronising action at a time through the variable `active`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulerProgram {
    pub program: Program,
    /// `active = i + 1` runs `modules[i]`.
    pub modules: Vec<String>,
    /// `active = modules.len() + j + 1` runs `sync_actions[j]`.
    pub sync_actions: Vec<String>,
}

impl SchedulerProgram {
    /// Report name of the actor owning the states with the given `active` value.
    pub fn actor_name(&self, active: i64) -> String {
        let n = self.modules.len() as i64;
        match active {
            0 => "scheduler".to_string(),
            i if i <= n => self.modules[(i - 1) as usize].clone(),
            i => format!("[{}]", self.sync_actions[(i - n - 1) as usize]),
        }
    }
}

pub fn with_scheduler(p: &Program) -> Result<SchedulerProgram, ActorError> {
    let n = p.modules.len();
    let sync = p.synchronising_actions();
    let m = sync.len();
    if p.variables().iter().any(|v| v.name == ACTIVE) {
        return Err(ActorError::NameClash(ACTIVE.into()));
    }
    if p.module_index(SCHEDULER_MODULE).is_some() {
        return Err(ActorError::NameClash(SCHEDULER_MODULE.into()));
    }
    let used: HashSet<String> = p.named_actions().into_iter().collect();
    let mut generated = Vec::new();
    for module in &p.modules {
        generated.push(choose_action(&module.name));
        generated.push(act_action(&module.name));
    }
    generated.extend(sync.iter().map(|a| choose_action(a)));
    let mut seen = HashSet::new();
    for g in &generated {
        if used.contains(g) || !seen.insert(g.clone()) {
            return Err(ActorError::NameClash(g.clone()));
        }
    }

    let mut modules: Vec<Module> = p
        .modules
        .iter()
        .map(|module| Module {
            commands: module
                .commands
                .iter()
                .map(|c| Command {
                    action: if is_sync(p, &c.action) {
                        c.action.clone()
                    } else {
                        Some(act_action(&module.name))
                    },
                    ..c.clone()
                })
                .collect(),
            ..module.clone()
        })
        .collect();

    let set_active = |v: i64| {
        vec![Update {
            var: VarRef::new(ACTIVE),
            value: ArithExpr::Const(v),
        }]
    };
    let command = |action: String, guard: BoolExpr, value: i64| Command {
        action: Some(action),
        guard,
        updates: set_active(value),
        pos: Pos::default(),
    };
    let mut commands = Vec::new();
    for (i, module) in p.modules.iter().enumerate() {
        let i = i as i64 + 1;
        commands.push(command(
            choose_action(&module.name),
            BoolExpr::and(active_is(0), module_guard(p, i as usize - 1)),
            i,
        ));
        commands.push(command(act_action(&module.name), active_is(i), 0));
    }
    for (j, a) in sync.iter().enumerate() {
        let v = (n + j + 1) as i64;
        commands.push(command(
            choose_action(a),
            BoolExpr::and(active_is(0), action_guard(p, a)),
            v,
        ));
        commands.push(command(a.clone(), active_is(v), 0));
    }
    modules.push(Module {
        name: SCHEDULER_MODULE.into(),
        decls: vec![Decl {
            name: ACTIVE.into(),
            lower: 0,
            upper: (n + m) as i64,
            init: 0,
            pos: Pos::default(),
        }],
        commands,
        pos: Pos::default(),
    });
    let program = validate(Program {
        safety_invariant: p.safety_invariant.clone(),
        modules,
    })?;
    Ok(SchedulerProgram {
        program,
        modules: p.modules.iter().map(|m| m.name.clone()).collect(),
        sync_actions: sync,
    })
}

/// Drops empty actors, returning a warning for each.
fn drop_empty(actors: Vec<Actor>, warnings: &mut Vec<String>) -> Vec<Actor> {
    actors
        .into_iter()
        .filter(|a| {
            if a.states.is_empty() {
                warnings.push(format!("actor `{}` has no reachable state and is dropped", a.name));
                false
            } else {
                true
            }
        })
        .collect()
}

/// One actor per value of `active`: the scheduler, each module and each
/// synchronising action.
pub fn module_signature(
    sp: &SchedulerProgram,
    ts: &Lts,
) -> Result<(Signature, Vec<String>), ActorError> {
    let val = ts.valuation().ok_or(ActorError::NoValuation)?;
    let slot = val
        .var_index(ACTIVE)
        .ok_or_else(|| ActorError::UnknownVariable(ACTIVE.into()))?;
    let count = 1 + sp.modules.len() + sp.sync_actions.len();
    let mut actors: Vec<Actor> = (0..count as i64)
        .map(|i| Actor {
            name: sp.actor_name(i),
            states: Vec::new(),
        })
        .collect();
    for s in 0..ts.num_states() as StateId {
        actors[val.state(s)[slot] as usize].states.push(s);
    }
    let mut warnings = Vec::new();
    let actors = drop_empty(actors, &mut warnings);
    Ok((
        Signature {
            actors,
            aux: vec![],
            adv: vec![],
        },
        warnings,
    ))
}

/// One actor per combination of values of `vars` that some state takes,
/// in ascending order of the value tuples.
pub fn value_signature(ts: &Lts, vars: &[String]) -> Result<Signature, ActorError> {
    if vars.is_empty() {
        return Err(ActorError::NoVariables);
    }
    let val = ts.valuation().ok_or(ActorError::NoValuation)?;
    let slots: Vec<usize> = vars
        .iter()
        .map(|v| {
            val.var_index(v)
                .ok_or_else(|| ActorError::UnknownVariable(v.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut groups: BTreeMap<Vec<i64>, Vec<StateId>> = BTreeMap::new();
    for s in 0..ts.num_states() as StateId {
        let values = val.state(s);
        groups
            .entry(slots.iter().map(|&i| values[i]).collect())
            .or_default()
            .push(s);
    }
    let actors = groups
        .into_iter()
        .map(|(tuple, states)| Actor {
            name: vars
                .iter()
                .zip(&tuple)
                .map(|(v, d)| format!("{v}={d}"))
                .collect::<Vec<_>>()
                .join(","),
            states,
        })
        .collect();
    Ok(Signature {
        actors,
        aux: vec![],
        adv: vec![],
    })
}

/// Order in which the actions of a state are offered in the separation gadget.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ActionOrder {
    #[default]
    Lexicographic,
    /// The given names first, in this order; others follow lexicographically.
    Declared(Vec<String>),
}

/// The action-separated system. For an original state `s` with actions
/// `α_1..α_k` the gadget occupies `2k+1` consecutive states: the `?`-states,
/// then the `!`-states, then `s_X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedSystem {
    pub ts: Lts,
    base: Vec<StateId>,
    act_off: Vec<u32>,
    /// Original action ids, per state in gadget order.
    acts: Vec<u32>,
    /// Original action names, indexed by original action id.
    names: Vec<String>,
}

impl SeparatedSystem {
    pub fn num_original_states(&self) -> usize {
        self.base.len()
    }

    fn k(&self, s: StateId) -> usize {
        (self.act_off[s as usize + 1] - self.act_off[s as usize]) as usize
    }

    /// Action names of `s`, in gadget order.
    pub fn actions_of(&self, s: StateId) -> Vec<&str> {
        let a = self.act_off[s as usize] as usize;
        self.acts[a..a + self.k(s)]
            .iter()
            .map(|&id| self.names[id as usize].as_str())
            .collect()
    }

    pub fn first(&self, s: StateId) -> StateId {
        self.base[s as usize]
    }

    fn position(&self, s: StateId, action: &str) -> Option<usize> {
        self.actions_of(s).iter().position(|a| *a == action)
    }

    pub fn query_state(&self, s: StateId, action: &str) -> Option<StateId> {
        self.position(s, action)
            .map(|i| self.base[s as usize] + i as StateId)
    }

    pub fn take_state(&self, s: StateId, action: &str) -> Option<StateId> {
        self.position(s, action)
            .map(|i| self.base[s as usize] + (self.k(s) + i) as StateId)
    }

    pub fn fallback_state(&self, s: StateId) -> StateId {
        self.base[s as usize] + 2 * self.k(s) as StateId
    }

    /// `t` as its original state plus `?α`, `!α` or `X`.
    pub fn describe(&self, original: &Lts, t: StateId) -> String {
        let s = self.origin(t);
        let i = (t - self.base[s as usize]) as usize;
        let k = self.k(s);
        let acts = self.actions_of(s);
        let role = if i < k {
            format!("?{}", acts[i])
        } else if i < 2 * k {
            format!("!{}", acts[i - k])
        } else {
            "X".to_string()
        };
        format!("{}[{role}]", original.describe_state(s))
    }

    /// The original state whose gadget contains `t`.
    pub fn origin(&self, t: StateId) -> StateId {
        (self.base.partition_point(|&b| b <= t) - 1) as StateId
    }
}

fn rank_actions(ts: &Lts, order: &ActionOrder) -> Vec<u32> {
    // Lts action ids are already in lexicographic order.
    let n = ts.actions().len() as u32;
    match order {
        ActionOrder::Lexicographic => (0..n).collect(),
        ActionOrder::Declared(names) => {
            let mut rank = vec![u32::MAX; n as usize];
            let mut next = 0;
            for name in names {
                if let Some(id) = ts.action_id(name) {
                    if rank[id as usize] == u32::MAX {
                        rank[id as usize] = next;
                        next += 1;
                    }
                }
            }
            for r in rank.iter_mut() {
                if *r == u32::MAX {
                    *r = next;
                    next += 1;
                }
            }
            rank
        }
    }
}

pub fn action_separate(ts: &Lts, order: &ActionOrder) -> SeparatedSystem {
    let n = ts.num_states();
    let rank = rank_actions(ts, order);
    let mut act_off = vec![0u32; n + 1];
    let mut acts = Vec::new();
    for s in 0..n as StateId {
        let mut here: Vec<u32> = ts.successor_labels(s).to_vec();
        here.sort_unstable_by_key(|&a| rank[a as usize]);
        here.dedup();
        acts.extend(here);
        act_off[s as usize + 1] = acts.len() as u32;
    }
    let mut base = vec![0 as StateId; n];
    let mut total = 0usize;
    for s in 0..n {
        base[s] = total as StateId;
        total += 2 * (act_off[s + 1] - act_off[s]) as usize + 1;
    }

    let mut b = LtsBuilder::new(total, base[ts.initial() as usize]);
    let sep = b.intern(SEPARATION_LABEL);
    let ids: Vec<u32> = ts.actions().iter().map(|a| b.intern(a)).collect();
    for s in 0..n as StateId {
        let off = act_off[s as usize] as usize;
        let here = &acts[off..act_off[s as usize + 1] as usize];
        let k = here.len() as StateId;
        let q = |i: StateId| base[s as usize] + i;
        let x = base[s as usize] + 2 * k;
        for (i, &alpha) in here.iter().enumerate() {
            let i = i as StateId;
            let next = if i + 1 < k { q(i + 1) } else { x };
            let take = q(k + i);
            b.add_edge_id(q(i), take, sep);
            b.add_edge_id(q(i), next, sep);
            b.add_edge_id(take, next, sep);
            for (t, label) in ts.edges(s) {
                if label == alpha {
                    b.add_edge_id(take, base[t as usize], ids[label as usize]);
                }
            }
        }
        for (t, label) in ts.edges(s) {
            b.add_edge_id(x, base[t as usize], ids[label as usize]);
        }
        if ts.is_bad(s) {
            b.set_bad(base[s as usize]);
        }
    }
    SeparatedSystem {
        ts: b.build(),
        base,
        act_off,
        acts,
        names: ts.actions().to_vec(),
    }
}

/// One actor per action owning its `?`-states; the `!`-states are auxiliary
/// and the fallback states adversarial. `display` renders action names.
///
/// The `?`-states of the stutter label added to bad and deadlocked states are
/// auxiliary as well, since that label is not an action of the program.
pub fn action_signature(sep: &SeparatedSystem, display: impl Fn(&str) -> String) -> Signature {
    let mut by_action: BTreeMap<u32, Vec<StateId>> = BTreeMap::new();
    let mut aux = Vec::new();
    let mut adv = Vec::new();
    for s in 0..sep.num_original_states() as StateId {
        let off = sep.act_off[s as usize] as usize;
        let k = sep.k(s);
        for i in 0..k {
            let q = sep.base[s as usize] + i as StateId;
            let id = sep.acts[off + i];
            if sep.names[id as usize] == STUTTER {
                aux.push(q);
            } else {
                by_action.entry(id).or_default().push(q);
            }
            aux.push(sep.base[s as usize] + (k + i) as StateId);
        }
        adv.push(sep.fallback_state(s));
    }
    aux.sort_unstable();
    Signature {
        actors: by_action
            .into_iter()
            .map(|(id, states)| Actor {
                name: display(&sep.names[id as usize]),
                states,
            })
            .collect(),
        aux,
        adv,
    }
}

/// Maps a counterexample of the original system into the separated one:
/// from each state, walk its `?`-states up to the action taken, take it,
/// and continue in the next gadget.
pub fn lift_to_separated(
    original: &Lts,
    sep: &SeparatedSystem,
    cex: &Counterexample,
) -> Result<Counterexample, ActorError> {
    let mut path = Vec::new();
    for w in cex.path.windows(2) {
        let (s, t) = (w[0], w[1]);
        let label = original
            .edges(s)
            .find(|&(x, _)| x == t)
            .map(|(_, a)| original.action_name(a))
            .ok_or_else(|| ActorError::Lift(format!("no transition from #{s} to #{t}")))?;
        let i = sep
            .position(s, label)
            .ok_or_else(|| ActorError::Lift(format!("action `{label}` missing in #{s}")))?;
        path.extend((0..=i as StateId).map(|j| sep.base[s as usize] + j));
        path.push(sep.take_state(s, label).unwrap());
    }
    if let Some(&last) = cex.path.last() {
        path.push(sep.first(last));
    }
    Ok(Counterexample { path })
}

/// The original states whose first `?`-state occurs on `path`, in order.
pub fn project_from_separated(sep: &SeparatedSystem, path: &[StateId]) -> Vec<StateId> {
    path.iter()
        .filter_map(|&t| {
            let s = sep.origin(t);
            (sep.first(s) == t).then_some(s)
        })
        .collect()
}

/// Maps a counterexample of `p` into the scheduled program: every step
/// `s → s'` becomes `s[active=0] → s[active=i] → s'[active=0]` where `i`
/// selects the module or synchronising action that produced the step
/// (the smallest such `i` if several did).
pub fn lift_to_scheduler(
    p: &Program,
    sp: &SchedulerProgram,
    original: &Lts,
    scheduled: &Lts,
    cex: &Counterexample,
) -> Result<Counterexample, ActorError> {
    let values = |s: StateId| -> Result<Vec<i64>, ActorError> {
        original
            .state_values(s)
            .map(|v| v.to_vec())
            .ok_or(ActorError::NoValuation)
    };
    let lookup = |v: &[i64], a: i64| -> Result<StateId, ActorError> {
        let mut full = v.to_vec();
        full.push(a);
        scheduled
            .find_state(&full)
            .ok_or_else(|| ActorError::Lift(format!("state {full:?} is not reachable")))
    };
    let n = sp.modules.len() as i64;
    let mut path = Vec::new();
    let vars = p.variables();
    for w in cex.path.windows(2) {
        let (s, t) = (values(w[0])?, values(w[1])?);
        let sels = enabled_selections(p, &s).map_err(|e| ActorError::Lift(e.to_string()))?;
        let mut chosen = None;
        for sel in sels {
            let next = crate::semantics::apply_selection(p, &vars, &s, &sel.action, &sel.commands, true)
                .map_err(|e| ActorError::Lift(e.to_string()))?;
            if next != t {
                continue;
            }
            let i = match sp.sync_actions.iter().position(|a| *a == sel.action) {
                Some(j) => n + 1 + j as i64,
                None => sel.commands[0].module as i64 + 1,
            };
            chosen = Some(chosen.map_or(i, |c: i64| c.min(i)));
        }
        let i = chosen.ok_or_else(|| ActorError::Lift("a step is not produced by any command".into()))?;
        path.push(lookup(&s, 0)?);
        path.push(lookup(&s, i)?);
    }
    if let Some(&last) = cex.path.last() {
        path.push(lookup(&values(last)?, 0)?);
    }
    Ok(Counterexample { path })
}

/// Reads a manual signature: one `name: <bexp>` line per actor, plus
/// optional `aux: <bexp>` and `adv: <bexp>` lines. Each actor receives the
/// states satisfying its expression. Blank lines and `//` comments are ignored.
pub fn manual_signature(ts: &Lts, text: &str) -> Result<(Signature, Vec<String>), ActorError> {
    let val = ts.valuation().ok_or(ActorError::NoValuation)?;
    let vars: Vec<VarInfo> = val
        .vars
        .iter()
        .map(|v| VarInfo {
            name: v.name.clone(),
            lower: v.lower,
            upper: v.upper,
            init: v.lower,
            module: 0,
        })
        .collect();
    let mut actors = Vec::new();
    let mut aux = None;
    let mut adv = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, expr) = line.split_once(':').ok_or_else(|| ActorError::ManualFormat {
            line: line_no,
            message: "expected `name: <expression>`".into(),
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(ActorError::ManualFormat {
                line: line_no,
                message: "missing actor name".into(),
            });
        }
        let e = parse_bool_expr(expr, &vars).map_err(|source| ActorError::ManualExpr {
            line: line_no,
            source,
        })?;
        let mut states = Vec::new();
        for s in 0..ts.num_states() as StateId {
            let holds = eval_bool(&e, val.state(s)).map_err(|err| ActorError::ManualFormat {
                line: line_no,
                message: err.to_string(),
            })?;
            if holds {
                states.push(s);
            }
        }
        let slot = match name {
            "aux" => &mut aux,
            "adv" => &mut adv,
            _ => {
                actors.push(Actor {
                    name: name.to_string(),
                    states,
                });
                continue;
            }
        };
        if slot.replace(states).is_some() {
            return Err(ActorError::ManualFormat {
                line: line_no,
                message: format!("`{name}` given twice"),
            });
        }
    }
    let mut warnings = Vec::new();
    let actors = drop_empty(actors, &mut warnings);
    Ok((
        Signature {
            actors,
            aux: aux.unwrap_or_default(),
            adv: adv.unwrap_or_default(),
        },
        warnings,
    ))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lts::tests::train_station;
    use crate::responsibility::{shapley_exact, CoalitionOracle, Coalition, SimpleGame};
    use crate::rml::parse_program;
    use crate::semantics::tests::{arb_program, FIG3};
    use crate::semantics::{build_ts, find_counterexample, validate_counterexample, BuildOptions};
    use proptest::prelude::*;

    pub(crate) const WINDOW: &str = include_str!("../../../models/window.rml");
    pub(crate) const PUZZLE: &str = include_str!("../../../models/puzzle_box.rml");

    fn opts() -> BuildOptions {
        BuildOptions {
            max_states: 100_000,
            clamp: true,
        }
    }

    #[test]
    fn guards() {
        let p = parse_program(FIG3).unwrap();
        assert_eq!(module_guard(&p, 0).to_string(), "x < 5");
        assert_eq!(action_guard(&p, "reset").to_string(), "x = 5 & y = 5");
        let q = parse_program("lightning=false; module M x:[0..1] init 0; [s] x=0 -> x:=1; endmodule module N [s] true -> true; endmodule").unwrap();
        assert_eq!(module_guard(&q, 0), BoolExpr::Const(false));
    }

    #[test]
    fn scheduler_shape() {
        let p = parse_program(FIG3).unwrap();
        let sp = with_scheduler(&p).unwrap();
        let sched = sp.program.modules.last().unwrap();
        assert_eq!(sched.decls[0].upper, 3);
        assert_eq!(sched.commands.len(), 6);
        assert_eq!(
            sp.program.modules[0].commands[0].action.as_deref(),
            Some("__act_A")
        );
        assert_eq!(sp.program.modules[0].commands[1].action.as_deref(), Some("reset"));
        // the transformed program prints and parses back to itself
        assert_eq!(parse_program(&sp.program.to_string()).unwrap(), sp.program);

        let one = parse_program("lightning=false; module M x:[0..1] init 0; [] x=0 -> x:=1; endmodule").unwrap();
        let sp1 = with_scheduler(&one).unwrap();
        let sched = sp1.program.modules.last().unwrap();
        assert_eq!((sched.decls[0].upper, sched.commands.len()), (1, 2));

        let w = with_scheduler(&parse_program(WINDOW).unwrap()).unwrap();
        assert_eq!(w.program.modules.last().unwrap().decls[0].upper, 7);
        assert_eq!(w.sync_actions, vec!["install", "a_throws", "j_throws"]);
    }

    #[test]
    fn scheduler_name_clashes() {
        let p = parse_program("lightning=false; module M active:[0..1] init 0; endmodule").unwrap();
        assert_eq!(with_scheduler(&p), Err(ActorError::NameClash("active".into())));
        let p = parse_program("lightning=false; module M x:[0..1] init 0; [__act_M] true -> true; endmodule").unwrap();
        assert_eq!(with_scheduler(&p), Err(ActorError::NameClash("__act_M".into())));
    }

    #[test]
    fn fig3_scheduler_states() {
        let sp = with_scheduler(&parse_program(FIG3).unwrap()).unwrap();
        let ts = build_ts(&sp.program, &opts()).unwrap();
        let (sig, warnings) = module_signature(&sp, &ts).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(sig.actor_names(), vec!["scheduler", "A", "B", "[reset]"]);
        let reset = &sig.actors[3].states;
        assert!(!reset.is_empty());
        for &s in reset {
            assert_eq!(ts.state_values(s).unwrap(), &[5, 5, 3]);
        }
        assert!(sig.validate(ts.num_states()).is_ok());
        // the value-based signature on `active` is the same partition
        let by_value = value_signature(&ts, &["active".into()]).unwrap();
        let states: Vec<_> = by_value.actors.iter().map(|a| a.states.clone()).collect();
        let expected: Vec<_> = sig.actors.iter().map(|a| a.states.clone()).collect();
        assert_eq!(states, expected);
    }

    #[test]
    fn window_module_based_backward() {
        let p = parse_program(WINDOW).unwrap();
        let sp = with_scheduler(&p).unwrap();
        let ts = build_ts(&sp.program, &opts()).unwrap();
        let (sig, warnings) = module_signature(&sp, &ts).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("`Window`"));
        let text = include_str!("../../../models/window.cex");
        let path = crate::semantics::parse_counterexample(&ts, text).unwrap();
        let cex = validate_counterexample(&ts, &path).unwrap();
        assert_eq!(cex.path.len(), 9);
        let oracle = CoalitionOracle::backward(&ts, &sig, &cex).unwrap();
        let exact = shapley_exact(&oracle, 30).unwrap();
        let values: Vec<String> = exact
            .values
            .iter()
            .map(crate::responsibility::format_rational)
            .collect();
        let names = sig.actor_names();
        let get = |n: &str| values[names.iter().position(|x| x == n).unwrap()].clone();
        assert_eq!(get("Rebeca"), "2/3");
        assert_eq!(get("Ada"), "1/6");
        assert_eq!(get("Julia"), "1/6");
        assert_eq!(get("scheduler"), "0");
        for a in ["[install]", "[a_throws]", "[j_throws]"] {
            assert_eq!(get(a), "0");
        }

        // the same counterexample, given over the original program, lifts to it
        let orig = build_ts(&p, &opts()).unwrap();
        let short: Vec<StateId> = cex
            .path
            .iter()
            .step_by(2)
            .map(|&s| {
                let v = ts.state_values(s).unwrap();
                orig.find_state(&v[..v.len() - 1]).unwrap()
            })
            .collect();
        let lifted = lift_to_scheduler(
            &p,
            &sp,
            &orig,
            &ts,
            &Counterexample { path: short },
        )
        .unwrap();
        assert_eq!(lifted, cex);
    }

    #[test]
    fn sweden_value_based() {
        let p = parse_program(include_str!("../../../models/sweden.rml")).unwrap();
        let ts = build_ts(&p, &opts()).unwrap();
        let sig = value_signature(&ts, &["t".into()]).unwrap();
        assert_eq!(sig.actors.len(), 13);
        assert_eq!(sig.actors[0].name, "t=8");
        let oracle = CoalitionOracle::forward(&ts, &sig).unwrap();
        let exact = shapley_exact(&oracle, 30).unwrap();
        let positive: Vec<&str> = sig
            .actors
            .iter()
            .zip(&exact.values)
            .filter(|(_, v)| **v > num_rational::BigRational::from_integer(0.into()))
            .map(|(a, _)| a.name.as_str())
            .collect();
        assert_eq!(positive, vec!["t=8", "t=9", "t=10", "t=13"]);
    }

    #[test]
    fn all_variables_give_singletons() {
        let p = parse_program(FIG3).unwrap();
        let ts = build_ts(&p, &opts()).unwrap();
        let sig = value_signature(&ts, &["x".into(), "y".into()]).unwrap();
        assert_eq!(sig.actors.len(), ts.num_states());
        assert!(sig.actors.iter().all(|a| a.states.len() == 1));
        assert_eq!(sig.actors[1].name, "x=0,y=1");
        assert_eq!(
            value_signature(&ts, &["z".into()]),
            Err(ActorError::UnknownVariable("z".into()))
        );
    }

    #[test]
    fn separation_gadget_shape() {
        let mut b = LtsBuilder::new(4, 0);
        b.add_edge(0, 1, "alpha");
        b.add_edge(0, 2, "beta");
        b.add_edge(0, 3, "gamma");
        let ts = b.build();
        let sep = action_separate(&ts, &ActionOrder::Lexicographic);
        assert_eq!(sep.fallback_state(0) - sep.first(0) + 1, 7);
        let gadget: usize = (0..7).map(|s| sep.ts.successors(s).len()).sum();
        assert_eq!(gadget, 15);
        assert_eq!(sep.actions_of(0), vec!["alpha", "beta", "gamma"]);
        let q = sep.query_state(0, "beta").unwrap();
        assert_eq!(sep.ts.successors(q), &[sep.query_state(0, "gamma").unwrap(), sep.take_state(0, "beta").unwrap()]);
        let x = sep.fallback_state(0);
        assert_eq!(sep.ts.successors(x), &[sep.first(1), sep.first(2), sep.first(3)]);
        let declared = action_separate(&ts, &ActionOrder::Declared(vec!["gamma".into()]));
        assert_eq!(declared.actions_of(0), vec!["gamma", "alpha", "beta"]);
        let sig = action_signature(&sep, |a| a.to_string());
        assert!(sig.validate(sep.ts.num_states()).is_ok());
        assert_eq!(sig.actor_names(), vec!["alpha", "beta", "gamma"]);
    }

    #[test]
    fn single_action_has_no_responsibility() {
        // every state has one outgoing transition: enabling it changes nothing
        let mut b = LtsBuilder::new(5, 0);
        b.add_edge(0, 1, "a");
        b.add_edge(1, 2, "b");
        b.add_edge(2, 3, "a");
        b.add_edge(3, 4, "c");
        b.set_bad(4);
        let ts = b.build();
        let sep = action_separate(&ts, &ActionOrder::Lexicographic);
        let sig = action_signature(&sep, |a| a.to_string());
        let oracle = CoalitionOracle::forward(&sep.ts, &sig).unwrap();
        let exact = shapley_exact(&oracle, 30).unwrap();
        assert!(exact.values.iter().all(|v| v == &num_rational::BigRational::from_integer(0.into())));

        // one label with several successors: the take state lets the coalition pick
        let ts = train_station();
        let sep = action_separate(&ts, &ActionOrder::Lexicographic);
        let sig = action_signature(&sep, |a| a.to_string());
        assert_eq!(sig.actor_names(), vec!["go"]);
        let oracle = CoalitionOracle::forward(&sep.ts, &sig).unwrap();
        let exact = shapley_exact(&oracle, 30).unwrap();
        assert_eq!(crate::responsibility::format_rational(&exact.values[0]), "1");
    }

    #[test]
    fn puzzle_box_action_based() {
        let p = parse_program(PUZZLE).unwrap();
        let ts = build_ts(&p, &opts()).unwrap();
        let sep = action_separate(&ts, &ActionOrder::Lexicographic);
        let sig = action_signature(&sep, |a| a.to_string());
        assert_eq!(sig.actor_names(), vec!["btn1", "btn2", "btn3"]);
        let oracle = CoalitionOracle::forward(&sep.ts, &sig).unwrap();
        let exact = shapley_exact(&oracle, 30).unwrap();
        let values: Vec<String> = exact.values.iter().map(crate::responsibility::format_rational).collect();
        assert_eq!(values, vec!["1/2", "0", "1/2"]);
        assert!(oracle.gamma(Coalition(0b101)));
        assert!(!oracle.gamma(Coalition(0b011)));
    }

    #[test]
    fn manual_signatures() {
        let p = parse_program(FIG3).unwrap();
        let ts = build_ts(&p, &opts()).unwrap();
        let text = "// split by x\nlow: x < 3\nhigh: x >= 3 & y < 6\nnone: x > 10\n";
        let (sig, warnings) = manual_signature(&ts, text).unwrap();
        assert_eq!(sig.actor_names(), vec!["low", "high"]);
        assert_eq!(warnings.len(), 1);
        assert!(sig.validate(ts.num_states()).is_ok());
        let (sig, _) = manual_signature(&ts, "a: x < 3\naux: x = 3\nadv: x > 3").unwrap();
        assert!(sig.validate(ts.num_states()).is_ok());
        assert!(matches!(
            manual_signature(&ts, "a: z < 3"),
            Err(ActorError::ManualExpr { line: 1, .. })
        ));
        assert!(matches!(
            manual_signature(&ts, "\njust text"),
            Err(ActorError::ManualFormat { line: 2, .. })
        ));
        let (overlap, _) = manual_signature(&ts, "a: x < 3\nb: x < 4").unwrap();
        assert!(overlap.validate(ts.num_states()).is_err());
    }

    fn bfs_bad_reachable(ts: &Lts) -> bool {
        let mut seen = vec![false; ts.num_states()];
        let mut queue = std::collections::VecDeque::from([ts.initial()]);
        seen[ts.initial() as usize] = true;
        while let Some(s) = queue.pop_front() {
            if ts.is_bad(s) {
                return true;
            }
            for &t in ts.successors(s) {
                if !std::mem::replace(&mut seen[t as usize], true) {
                    queue.push_back(t);
                }
            }
        }
        false
    }

    pub(crate) fn arb_lts(max_states: usize) -> impl Strategy<Value = Lts> {
        (2..=max_states).prop_flat_map(|n| {
            (
                prop::collection::vec((0..n as StateId, 0..n as StateId, 0..4u8), 0..3 * n),
                prop::collection::vec(prop::bool::weighted(0.05), n),
            )
                .prop_map(move |(edges, bad)| {
                    let mut b = LtsBuilder::new(n, 0);
                    for (s, t, a) in edges {
                        b.add_edge(s, t, &format!("a{a}"));
                    }
                    for (s, x) in bad.into_iter().enumerate() {
                        if x {
                            b.set_bad(s as StateId);
                        }
                    }
                    b.build()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn scheduler_soundness(p in arb_program()) {
            let ts = build_ts(&p, &opts()).unwrap();
            let sp = with_scheduler(&p).unwrap();
            let ts2 = build_ts(&sp.program, &opts()).unwrap();
            prop_assert_eq!(bfs_bad_reachable(&ts), bfs_bad_reachable(&ts2));
            let val2 = ts2.valuation().unwrap();
            let a = val2.var_index(ACTIVE).unwrap();
            let project = |s: StateId| {
                let v = ts2.state_values(s).unwrap();
                ts.find_state(&v[..a]).unwrap()
            };
            for s in 0..ts2.num_states() as StateId {
                let active = val2.state(s)[a];
                for &t in ts2.successors(s) {
                    let next = val2.state(t)[a];
                    if ts2.is_bad(s) || ts2.completed_deadlocks().contains(&s) {
                        continue;
                    }
                    // alternation between the scheduler and the chosen element
                    prop_assert!((active == 0) != (next == 0));
                    if active != 0 {
                        // a transformed step projects to an original step
                        let from = project(s);
                        prop_assert!(ts.has_edge(from, project(t)));
                    }
                }
            }
            // no new deadlocks
            let dead: Vec<StateId> = ts.completed_deadlocks();
            for s in ts2.completed_deadlocks() {
                prop_assert_eq!(val2.state(s)[a], 0);
                prop_assert!(dead.contains(&project(s)));
            }
            if let Some(cex) = find_counterexample(&ts) {
                let lifted = lift_to_scheduler(&p, &sp, &ts, &ts2, &cex).unwrap();
                prop_assert!(validate_counterexample(&ts2, &lifted.path).is_ok());
            }
        }

        #[test]
        fn separation_soundness(ts in arb_lts(200)) {
            let sep = action_separate(&ts, &ActionOrder::Lexicographic);
            prop_assert_eq!(bfs_bad_reachable(&ts), bfs_bad_reachable(&sep.ts));
            let sig = action_signature(&sep, |a| a.to_string());
            prop_assert!(sig.validate(sep.ts.num_states()).is_ok());
            for s in 0..ts.num_states() as StateId {
                let acts = sep.actions_of(s);
                for a in acts.iter().filter(|_| !ts.is_bad(s)) {
                    let q = sep.query_state(s, a).unwrap();
                    prop_assert_eq!(sep.ts.successors(q).len(), 2);
                }
                if !ts.is_bad(s) {
                    let x = sep.fallback_state(s);
                    let expected: Vec<StateId> = ts.successors(s).iter().map(|&t| sep.first(t)).collect();
                    let mut got = sep.ts.successors(x).to_vec();
                    got.sort_unstable();
                    let mut exp = expected.clone();
                    exp.sort_unstable();
                    prop_assert_eq!(got, exp);
                }
            }
            if let Some(cex) = find_counterexample(&ts) {
                let lifted = lift_to_separated(&ts, &sep, &cex).unwrap();
                prop_assert!(validate_counterexample(&sep.ts, &lifted.path).is_ok());
                prop_assert_eq!(project_from_separated(&sep, &lifted.path), cex.path.clone());
            }
            if let Some(cex) = find_counterexample(&sep.ts) {
                let back = project_from_separated(&sep, &cex.path);
                prop_assert!(validate_counterexample(&ts, &back).is_ok());
            }
        }

        #[test]
        fn separated_gamma_monotone(ts in arb_lts(25)) {
            let sep = action_separate(&ts, &ActionOrder::Lexicographic);
            let sig = action_signature(&sep, |a| a.to_string());
            let oracle = CoalitionOracle::forward(&sep.ts, &sig).unwrap();
            let n = oracle.players();
            for c in 0..1u64 << n {
                for a in 0..n {
                    prop_assert!(!oracle.gamma(Coalition(c)) || oracle.gamma(Coalition(c).with(a)));
                }
            }
        }
    }
}
