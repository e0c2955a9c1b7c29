//! Line-oriented text exchange format for transition systems and signatures.
//!
//! ```text
//! ts v1 states=9 init=0 transitions=15
//! var x 0 5            // optional valuation: variable declarations ...
//! val 0 3              // ... and one line per state
//! bad 8
//! edge 0 1 go
//! actor A 0 1
//! aux 7
//! adv 8
//! end
//! ```
//!
//! `transitions=` and `end` are written on export; when the header carries
//! `transitions=`, the importer insists on both, which catches truncated files.
//! `#` starts a comment. Bad states are made absorbing on import.

use std::fmt::Write as _;

use thiserror::Error;

use crate::lts::{Lts, LtsBuilder, StateId, StateVar, Valuation};
use crate::responsibility::{Actor, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("name `{0}` contains whitespace and cannot be exported")]
    Whitespace(String),
}

fn token(name: &str) -> Result<&str, ExportError> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        Err(ExportError::Whitespace(name.to_string()))
    } else {
        Ok(name)
    }
}

fn list(out: &mut String, head: &str, states: &[StateId]) {
    out.push_str(head);
    for s in states {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
}

pub fn export_ts(ts: &Lts, sig: &Signature) -> Result<String, ExportError> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ts v1 states={} init={} transitions={}",
        ts.num_states(),
        ts.initial(),
        ts.num_transitions()
    );
    if let Some(val) = ts.valuation() {
        for v in &val.vars {
            let _ = writeln!(out, "var {} {} {}", token(&v.name)?, v.lower, v.upper);
        }
    }
    let bad: Vec<StateId> = ts.bad_states().collect();
    if !bad.is_empty() {
        list(&mut out, "bad", &bad);
    }
    for a in ts.actions() {
        token(a)?;
    }
    for s in 0..ts.num_states() as StateId {
        for (t, a) in ts.edges(s) {
            let _ = writeln!(out, "edge {s} {t} {}", ts.action_name(a));
        }
    }
    if let Some(val) = ts.valuation() {
        for s in 0..ts.num_states() as StateId {
            let _ = write!(out, "val {s}");
            for v in val.state(s) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    for a in &sig.actors {
        list(&mut out, &format!("actor {}", token(&a.name)?), &a.states);
    }
    if !sig.aux.is_empty() {
        list(&mut out, "aux", &sig.aux);
    }
    if !sig.adv.is_empty() {
        list(&mut out, "adv", &sig.adv);
    }
    out.push_str("end\n");
    Ok(out)
}

struct Reader<'a> {
    line: usize,
    words: std::str::SplitWhitespace<'a>,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> FormatError {
        FormatError {
            line: self.line,
            message: message.into(),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, FormatError> {
        self.words
            .next()
            .ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn int<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, FormatError> {
        let w = self.word(what)?;
        w.parse()
            .map_err(|_| self.err(format!("invalid {what} `{w}`")))
    }

    fn state(&mut self, n: usize) -> Result<StateId, FormatError> {
        let s: StateId = self.int("state")?;
        if s as usize >= n {
            return Err(self.err(format!("state {s} out of range (states={n})")));
        }
        Ok(s)
    }

    fn states(&mut self, n: usize) -> Result<Vec<StateId>, FormatError> {
        let mut out = Vec::new();
        while self.words.clone().next().is_some() {
            out.push(self.state(n)?);
        }
        Ok(out)
    }

    fn done(&mut self) -> Result<(), FormatError> {
        match self.words.next() {
            Some(w) => Err(self.err(format!("unexpected `{w}`"))),
            None => Ok(()),
        }
    }
}

fn header_field<'a>(r: &mut Reader<'a>, key: &str) -> Result<&'a str, FormatError> {
    let w = r.word(key)?;
    w.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| r.err(format!("expected `{key}=...`, found `{w}`")))
}

pub fn import_ts(text: &str) -> Result<(Lts, Signature), FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, first) = lines.next().ok_or(FormatError {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut r = Reader {
        line,
        words: first.split_whitespace(),
    };
    if r.word("header")? != "ts" || r.word("version")? != "v1" {
        return Err(r.err("expected header `ts v1 states=<n> init=<i>`"));
    }
    let parse = |r: &Reader, v: &str, what: &str| -> Result<usize, FormatError> {
        v.parse()
            .map_err(|_| r.err(format!("invalid {what} `{v}`")))
    };
    let v = header_field(&mut r, "states")?;
    let n = parse(&r, v, "state count")?;
    if n == 0 {
        return Err(r.err("a transition system needs at least one state"));
    }
    let v = header_field(&mut r, "init")?;
    let init = parse(&r, v, "initial state")?;
    if init >= n {
        return Err(r.err(format!("initial state {init} out of range")));
    }
    let expected = match r.words.clone().next() {
        Some(_) => {
            let v = header_field(&mut r, "transitions")?;
            Some(parse(&r, v, "transition count")?)
        }
        None => None,
    };
    r.done()?;

    let mut b = LtsBuilder::new(n, init as StateId);
    let mut vars: Vec<StateVar> = Vec::new();
    let mut values: Vec<Option<Vec<i64>>> = Vec::new();
    let mut sig = Signature::default();
    let mut edges = 0usize;
    let mut ended = false;
    let mut last_line = line;
    for (line, text) in lines {
        last_line = line;
        let mut r = Reader {
            line,
            words: text.split_whitespace(),
        };
        if ended {
            return Err(r.err("content after `end`"));
        }
        match r.word("keyword")? {
            "var" => {
                if !values.is_empty() {
                    return Err(r.err("`var` must precede `val` lines"));
                }
                let name = r.word("variable name")?.to_string();
                let lower = r.int("lower bound")?;
                let upper = r.int("upper bound")?;
                vars.push(StateVar { name, lower, upper });
            }
            "val" => {
                if vars.is_empty() {
                    return Err(r.err("`val` without `var` declarations"));
                }
                if values.is_empty() {
                    values = vec![None; n];
                }
                let s = r.state(n)?;
                let vs: Vec<i64> = (0..vars.len())
                    .map(|_| r.int("value"))
                    .collect::<Result<_, _>>()?;
                for (v, x) in vars.iter().zip(&vs) {
                    if *x < v.lower || *x > v.upper {
                        return Err(r.err(format!("value {x} of `{}` out of range", v.name)));
                    }
                }
                if values[s as usize].replace(vs).is_some() {
                    return Err(r.err(format!("state {s} given twice")));
                }
            }
            "bad" => {
                for s in r.states(n)? {
                    b.set_bad(s);
                }
            }
            "edge" => {
                let s = r.state(n)?;
                let t = r.state(n)?;
                let a = r.word("action")?;
                b.add_edge(s, t, a);
                edges += 1;
            }
            "actor" => {
                let name = r.word("actor name")?.to_string();
                let states = r.states(n)?;
                sig.actors.push(Actor { name, states });
            }
            "aux" => sig.aux.extend(r.states(n)?),
            "adv" => sig.adv.extend(r.states(n)?),
            "end" => ended = true,
            other => return Err(r.err(format!("unknown keyword `{other}`"))),
        }
        r.done()?;
    }
    if let Some(k) = expected {
        if !ended {
            return Err(FormatError {
                line: last_line,
                message: "file is truncated (no `end` line)".into(),
            });
        }
        if k != edges {
            return Err(FormatError {
                line: last_line,
                message: format!("header announces {k} transitions, found {edges}"),
            });
        }
    }
    if !vars.is_empty() {
        let mut flat = Vec::with_capacity(n * vars.len());
        if values.is_empty() {
            return Err(FormatError {
                line: last_line,
                message: "`var` without `val` lines".into(),
            });
        }
        for (s, v) in values.into_iter().enumerate() {
            let v = v.ok_or(FormatError {
                line: last_line,
                message: format!("no `val` line for state {s}"),
            })?;
            flat.extend(v);
        }
        b.set_valuation(Valuation::new(vars, flat));
    }
    Ok((b.build(), sig))
}
