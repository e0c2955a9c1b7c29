//! Analysis pipeline behind the `respo` command: load a model, derive a
//! signature, compute responsibility and render the report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};
use thiserror::Error;

use respo::actors::{
    action_separate, action_signature, lift_to_scheduler, lift_to_separated, manual_signature,
    module_signature, value_signature, with_scheduler, ActionOrder, ActorError,
};
use respo::game::{extract_strategy, solve};
use respo::lts::{Lts, StateId};
use respo::responsibility::{
    build_backward_game, build_forward_game, format_rational, shapley_exact, shapley_sampled,
    Coalition, CoalitionOracle, Mode, ResponsibilityError, Signature, SimpleGame,
};
use respo::rml::{parse_bool_expr, parse_program, FrontendError, Program};
use respo::semantics::{
    build_ts, display_action, find_counterexample, parse_counterexample, validate_counterexample,
    BuildOptions, Counterexample, CounterexampleError, SemanticsError,
};
use respo::tsformat::{import_ts, FormatError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActorScheme {
    Module,
    Value(Vec<String>),
    Action,
    Manual(PathBuf),
    /// The signature stored in a TS exchange file.
    File,
}

impl std::str::FromStr for ActorScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "module" => Ok(ActorScheme::Module),
            "action" => Ok(ActorScheme::Action),
            "file" => Ok(ActorScheme::File),
            _ => {
                if let Some(vars) = s.strip_prefix("value:") {
                    let vars: Vec<String> = vars
                        .split(',')
                        .map(|v| v.trim().to_string())
                        .filter(|v| !v.is_empty())
                        .collect();
                    if vars.is_empty() {
                        return Err("value: needs at least one variable".into());
                    }
                    Ok(ActorScheme::Value(vars))
                } else if let Some(path) = s.strip_prefix("manual:") {
                    Ok(ActorScheme::Manual(PathBuf::from(path)))
                } else {
                    Err(format!(
                        "unknown actor scheme `{s}` (expected module, value:<vars>, action, manual:<path> or file)"
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CounterexampleSource {
    Auto,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Exact,
    Sample { samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub model: PathBuf,
    pub property: Option<String>,
    pub mode: Mode,
    pub counterexample: CounterexampleSource,
    /// `None` picks `file` for TS inputs and `module` otherwise.
    pub actors: Option<ActorScheme>,
    pub algorithm: Algorithm,
    pub max_states: usize,
    pub max_actors: usize,
    pub clamp: bool,
    pub action_order: ActionOrder,
    pub switching_pairs: bool,
    pub witness_strategies: bool,
}

impl AnalysisConfig {
    pub fn new(model: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            model: model.into(),
            property: None,
            mode: Mode::Forward,
            counterexample: CounterexampleSource::Auto,
            actors: None,
            algorithm: Algorithm::Exact,
            max_states: respo::semantics::default_max_states(),
            max_actors: respo::responsibility::DEFAULT_EXACT_CAP,
            clamp: false,
            action_order: ActionOrder::Lexicographic,
            switching_pairs: false,
            witness_strategies: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Frontend { path: String, source: FrontendError },
    #[error("--property: {0}")]
    Property(FrontendError),
    #[error("{path}:{source}")]
    Format { path: String, source: FormatError },
    #[error("{0}")]
    Semantics(#[from] SemanticsError),
    #[error("{0}")]
    Actors(#[from] ActorError),
    #[error("{0}")]
    Responsibility(#[from] ResponsibilityError),
    #[error("counterexample: {0}")]
    Counterexample(#[from] CounterexampleError),
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    /// 3 when a cap is exceeded, 1 for I/O failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } => 1,
            PipelineError::Semantics(SemanticsError::StateSpaceExceeded { .. })
            | PipelineError::Responsibility(ResponsibilityError::TooManyActors { .. }) => 3,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn is_ts_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "ts")
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActorValue {
    Exact {
        value: num_rational::BigRational,
        witness: Option<Vec<String>>,
    },
    Sampled {
        mean: f64,
        half_width: f64,
        samples: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorResult {
    pub name: String,
    pub value: ActorValue,
    /// Safe's choices in the game of the witness coalition plus this actor.
    pub strategy: Option<Vec<(String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleInfo {
    pub supplied: bool,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub mode: Mode,
    pub actors: Vec<ActorResult>,
    pub gamma_empty: bool,
    pub gamma_full: bool,
    pub coalitions_evaluated: u64,
    pub wall_ms: u64,
    pub warnings: Vec<String>,
    pub states: usize,
    pub transitions: usize,
    pub counterexample: Option<CounterexampleInfo>,
    /// `(coalition, actor)` pairs, when requested.
    pub switching_pairs: Option<Vec<(Vec<String>, String)>>,
}

/// A transition system ready for analysis.
pub struct Prepared {
    pub ts: Lts,
    pub signature: Signature,
    pub warnings: Vec<String>,
    counterexample: CexLoader,
}

enum CexLoader {
    Direct,
    Scheduler {
        program: Program,
        sp: respo::actors::SchedulerProgram,
        original: Lts,
    },
    Separated {
        original: Lts,
        sep: respo::actors::SeparatedSystem,
    },
}

pub fn load_program(path: &Path, property: Option<&str>) -> Result<(Program, Vec<String>), PipelineError> {
    let text = read(path)?;
    let mut p = parse_program(&text).map_err(|source| PipelineError::Frontend {
        path: path.display().to_string(),
        source,
    })?;
    let mut warnings = Vec::new();
    if let Some(prop) = property {
        let e = parse_bool_expr(prop, &p.variables()).map_err(PipelineError::Property)?;
        if p.safety_invariant.as_ref().is_some_and(|old| *old != e) {
            warnings.push("--property overrides the safety invariant given in the model".into());
        }
        p.safety_invariant = Some(e);
    }
    Ok((p, warnings))
}

fn deadlock_warning(ts: &Lts, warnings: &mut Vec<String>) {
    let dead = ts.completed_deadlocks();
    if dead.is_empty() {
        return;
    }
    let shown: Vec<String> = dead.iter().take(5).map(|&s| ts.describe_state(s)).collect();
    let more = if dead.len() > 5 {
        format!(" and {} more", dead.len() - 5)
    } else {
        String::new()
    };
    warnings.push(format!(
        "{} deadlocked state(s) completed with a self-loop: {}{more}",
        dead.len(),
        shown.join("; ")
    ));
}

pub fn prepare(cfg: &AnalysisConfig) -> Result<Prepared, PipelineError> {
    let opts = BuildOptions {
        max_states: cfg.max_states,
        clamp: cfg.clamp,
    };
    if is_ts_file(&cfg.model) {
        let text = read(&cfg.model)?;
        let (ts, file_sig) = import_ts(&text).map_err(|source| PipelineError::Format {
            path: cfg.model.display().to_string(),
            source,
        })?;
        if cfg.property.is_some() {
            return Err(PipelineError::Config(
                "--property needs a program; TS files carry their bad states".into(),
            ));
        }
        let mut warnings = Vec::new();
        deadlock_warning(&ts, &mut warnings);
        let scheme = cfg.actors.clone().unwrap_or(ActorScheme::File);
        return match scheme {
            ActorScheme::File => {
                if file_sig.actors.is_empty() {
                    return Err(PipelineError::Config(format!(
                        "{} defines no actors",
                        cfg.model.display()
                    )));
                }
                Ok(Prepared {
                    ts,
                    signature: file_sig,
                    warnings,
                    counterexample: CexLoader::Direct,
                })
            }
            ActorScheme::Value(vars) => Ok(Prepared {
                signature: value_signature(&ts, &vars)?,
                ts,
                warnings,
                counterexample: CexLoader::Direct,
            }),
            ActorScheme::Manual(path) => {
                let (signature, w) = manual_signature(&ts, &read(&path)?)?;
                warnings.extend(w);
                Ok(Prepared {
                    ts,
                    signature,
                    warnings,
                    counterexample: CexLoader::Direct,
                })
            }
            ActorScheme::Action => {
                let sep = action_separate(&ts, &cfg.action_order);
                let signature = action_signature(&sep, |a| a.to_string());
                Ok(Prepared {
                    ts: sep.ts.clone(),
                    signature,
                    warnings,
                    counterexample: CexLoader::Separated { original: ts, sep },
                })
            }
            ActorScheme::Module => Err(PipelineError::Config(
                "module-based actors need a program, not a TS file".into(),
            )),
        };
    }

    let (p, mut warnings) = load_program(&cfg.model, cfg.property.as_deref())?;
    match cfg.actors.clone().unwrap_or(ActorScheme::Module) {
        ActorScheme::Module => {
            let sp = with_scheduler(&p)?;
            let original = build_ts(&p, &opts)?;
            deadlock_warning(&original, &mut warnings);
            let ts = build_ts(&sp.program, &opts)?;
            let (signature, w) = module_signature(&sp, &ts)?;
            warnings.extend(w);
            Ok(Prepared {
                ts,
                signature,
                warnings,
                counterexample: CexLoader::Scheduler {
                    program: p,
                    sp,
                    original,
                },
            })
        }
        ActorScheme::Value(vars) => {
            let ts = build_ts(&p, &opts)?;
            deadlock_warning(&ts, &mut warnings);
            Ok(Prepared {
                signature: value_signature(&ts, &vars)?,
                ts,
                warnings,
                counterexample: CexLoader::Direct,
            })
        }
        ActorScheme::Action => {
            let original = build_ts(&p, &opts)?;
            deadlock_warning(&original, &mut warnings);
            let sep = action_separate(&original, &cfg.action_order);
            let signature = action_signature(&sep, |a| display_action(&p, a));
            Ok(Prepared {
                ts: sep.ts.clone(),
                signature,
                warnings,
                counterexample: CexLoader::Separated { original, sep },
            })
        }
        ActorScheme::Manual(path) => {
            let ts = build_ts(&p, &opts)?;
            deadlock_warning(&ts, &mut warnings);
            let (signature, w) = manual_signature(&ts, &read(&path)?)?;
            warnings.extend(w);
            Ok(Prepared {
                ts,
                signature,
                warnings,
                counterexample: CexLoader::Direct,
            })
        }
        ActorScheme::File => Err(PipelineError::Config(
            "the `file` actor scheme needs a TS file".into(),
        )),
    }
}

impl Prepared {
    pub fn describe_state(&self, s: StateId) -> String {
        match &self.counterexample {
            CexLoader::Separated { original, sep } => sep.describe(original, s),
            _ => self.ts.describe_state(s),
        }
    }

    /// Reads a counterexample file. Paths over the analysed system are used
    /// as they are; paths over the original program are lifted into the
    /// scheduled or action-separated system.
    pub fn load_counterexample(&self, text: &str) -> Result<Counterexample, PipelineError> {
        let direct = parse_counterexample(&self.ts, text)
            .map_err(PipelineError::from)
            .and_then(|path| Ok(validate_counterexample(&self.ts, &path)?));
        match &self.counterexample {
            CexLoader::Direct => direct,
            CexLoader::Scheduler {
                program,
                sp,
                original,
            } => direct.or_else(|first| {
                let Ok(path) = parse_counterexample(original, text) else {
                    return Err(first);
                };
                let cex = validate_counterexample(original, &path)?;
                Ok(lift_to_scheduler(program, sp, original, &self.ts, &cex)?)
            }),
            CexLoader::Separated { original, sep } => {
                let path = parse_counterexample(original, text)?;
                let cex = validate_counterexample(original, &path)?;
                Ok(lift_to_separated(original, sep, &cex)?)
            }
        }
    }
}

fn names(sig: &Signature, c: Coalition) -> Vec<String> {
    c.members().map(|a| sig.actors[a].name.clone()).collect()
}

/// Safe's strategy, restricted to the states reachable when Safe follows it.
fn strategy(
    prep: &Prepared,
    cex: Option<&Counterexample>,
    c: Coalition,
) -> Vec<(String, String)> {
    let ts = &prep.ts;
    let sig = &prep.signature;
    let game = match cex {
        None => build_forward_game(ts, sig, c),
        Some(cex) => build_backward_game(ts, sig, cex, c).expect("validated counterexample"),
    };
    let win = solve(&game);
    let choice = extract_strategy(&game, &win);
    let mut seen = vec![false; ts.num_states()];
    let mut stack = vec![game.initial()];
    seen[game.initial() as usize] = true;
    let mut out = Vec::new();
    while let Some(s) = stack.pop() {
        let next: Vec<StateId> = match choice[s as usize] {
            Some(t) => {
                out.push((s, t));
                vec![t]
            }
            None => game.successors(s).to_vec(),
        };
        for t in next {
            if !std::mem::replace(&mut seen[t as usize], true) {
                stack.push(t);
            }
        }
    }
    out.sort_unstable();
    out.into_iter()
        .map(|(s, t)| (prep.describe_state(s), prep.describe_state(t)))
        .collect()
}

pub fn run(cfg: &AnalysisConfig) -> Result<Report, PipelineError> {
    let start = Instant::now();
    let prep = prepare(cfg)?;
    let mut warnings = prep.warnings.clone();
    let ts = &prep.ts;
    let sig = &prep.signature;
    let (oracle, cex_info, cex) = match cfg.mode {
        Mode::Forward => {
            if let CounterexampleSource::File(_) = cfg.counterexample {
                warnings.push("forward mode ignores the counterexample".into());
            }
            (CoalitionOracle::forward(ts, sig)?, None, None)
        }
        Mode::Backward => {
            let (cex, supplied) = match &cfg.counterexample {
                CounterexampleSource::Auto => (
                    find_counterexample(ts).ok_or_else(|| {
                        PipelineError::Config(
                            "no bad state is reachable, so there is no counterexample".into(),
                        )
                    })?,
                    false,
                ),
                CounterexampleSource::File(path) => (prep.load_counterexample(&read(path)?)?, true),
            };
            let info = CounterexampleInfo {
                supplied,
                states: cex.path.iter().map(|&s| prep.describe_state(s)).collect(),
            };
            (CoalitionOracle::backward(ts, sig, &cex)?, Some(info), Some(cex))
        }
    };

    let n = oracle.players();
    let mut switching_pairs = None;
    let (actors, gamma_empty, gamma_full) = match cfg.algorithm {
        Algorithm::Exact => {
            let exact = shapley_exact(&oracle, cfg.max_actors)?;
            if cfg.switching_pairs {
                switching_pairs = Some(
                    exact
                        .table
                        .switching_pairs()
                        .into_iter()
                        .map(|(c, a)| (names(sig, c), sig.actors[a].name.clone()))
                        .collect(),
                );
            }
            let actors = (0..n)
                .map(|a| ActorResult {
                    name: sig.actors[a].name.clone(),
                    value: ActorValue::Exact {
                        value: exact.values[a].clone(),
                        witness: exact.witnesses[a].map(|c| names(sig, c)),
                    },
                    strategy: exact.witnesses[a]
                        .filter(|_| cfg.witness_strategies)
                        .map(|c| strategy(&prep, cex.as_ref(), c.with(a))),
                })
                .collect();
            (actors, exact.gamma_empty(), exact.gamma_full())
        }
        Algorithm::Sample { samples, seed } => {
            if samples == 0 {
                return Err(PipelineError::Config("--samples must be at least 1".into()));
            }
            let est = shapley_sampled(&oracle, samples, seed);
            let actors = (0..n)
                .map(|a| ActorResult {
                    name: sig.actors[a].name.clone(),
                    value: ActorValue::Sampled {
                        mean: est.mean[a],
                        half_width: est.half_width[a],
                        samples: est.samples,
                    },
                    strategy: None,
                })
                .collect();
            (
                actors,
                oracle.gamma(Coalition::EMPTY),
                oracle.gamma(Coalition::full(n)),
            )
        }
    };
    if !gamma_full {
        warnings.push("even the coalition of all actors cannot avoid the bad states".into());
    }
    if gamma_empty {
        warnings.push("the bad states are avoided without any actor".into());
    }
    Ok(Report {
        mode: cfg.mode,
        actors,
        gamma_empty,
        gamma_full,
        coalitions_evaluated: oracle.coalitions_evaluated(),
        wall_ms: start.elapsed().as_millis() as u64,
        warnings,
        states: ts.num_states(),
        transitions: ts.num_transitions(),
        counterexample: cex_info,
        switching_pairs,
    })
}

fn number(x: &num_bigint::BigInt) -> Value {
    match x.to_u64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

impl Report {
    pub fn to_json(&self) -> Value {
        let mut actors = Map::new();
        let mut witnesses = Map::new();
        let mut strategies = Map::new();
        for a in &self.actors {
            let v = match &a.value {
                ActorValue::Exact { value, witness } => {
                    witnesses.insert(a.name.clone(), json!(witness));
                    json!({
                        "value": format_rational(value),
                        "value_num": number(value.numer()),
                        "value_den": number(value.denom()),
                    })
                }
                ActorValue::Sampled {
                    mean,
                    half_width,
                    samples,
                } => json!({"mean": mean, "half_width": half_width, "samples": samples}),
            };
            actors.insert(a.name.clone(), v);
            if let Some(st) = &a.strategy {
                let moves: Vec<Value> = st.iter().map(|(s, t)| json!([s, t])).collect();
                strategies.insert(a.name.clone(), Value::Array(moves));
            }
        }
        let mut out = Map::new();
        out.insert("mode".into(), json!(self.mode.to_string()));
        out.insert("actors".into(), Value::Object(actors));
        out.insert("gamma_empty".into(), json!(self.gamma_empty as u8));
        out.insert("gamma_full".into(), json!(self.gamma_full as u8));
        out.insert("coalitions_evaluated".into(), json!(self.coalitions_evaluated));
        out.insert("wall_ms".into(), json!(self.wall_ms));
        out.insert("warnings".into(), json!(self.warnings));
        out.insert("states".into(), json!(self.states));
        out.insert("transitions".into(), json!(self.transitions));
        if !witnesses.is_empty() {
            out.insert("witnesses".into(), Value::Object(witnesses));
        }
        if !strategies.is_empty() {
            out.insert("strategies".into(), Value::Object(strategies));
        }
        if let Some(c) = &self.counterexample {
            out.insert(
                "counterexample".into(),
                json!({
                    "source": if c.supplied { "supplied" } else { "derived" },
                    "states": c.states,
                }),
            );
        }
        if let Some(pairs) = &self.switching_pairs {
            let list: Vec<Value> = pairs
                .iter()
                .map(|(c, a)| json!({"coalition": c, "actor": a}))
                .collect();
            out.insert("switching_pairs".into(), Value::Array(list));
        }
        Value::Object(out)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} responsibility ({} states, {} transitions)",
            self.mode, self.states, self.transitions
        );
        if let Some(c) = &self.counterexample {
            let _ = writeln!(
                out,
                "counterexample ({}, {} states): {}",
                if c.supplied { "supplied" } else { "derived" },
                c.states.len(),
                c.states.join(" -> ")
            );
        }
        let width = self
            .actors
            .iter()
            .map(|a| a.name.chars().count())
            .max()
            .unwrap_or(0)
            .max("actor".len());
        let _ = writeln!(out, "{:width$}  responsibility", "actor");
        for a in &self.actors {
            let v = match &a.value {
                ActorValue::Exact { value, witness } => {
                    let approx = value.to_f64().unwrap_or(f64::NAN);
                    match witness {
                        Some(w) => format!(
                            "{:<9} ({approx:.4})  witness {{{}}}",
                            format_rational(value),
                            w.join(", ")
                        ),
                        None => format!("{:<9} ({approx:.4})", format_rational(value)),
                    }
                }
                ActorValue::Sampled {
                    mean, half_width, ..
                } => format!("{mean:.4} ± {half_width:.4}"),
            };
            let _ = writeln!(out, "{:width$}  {v}", a.name);
            if let Some(st) = &a.strategy {
                for (s, t) in st {
                    let _ = writeln!(out, "{:width$}    {s} -> {t}", "");
                }
            }
        }
        if let Some(pairs) = &self.switching_pairs {
            let _ = writeln!(out, "switching pairs:");
            for (c, a) in pairs {
                let _ = writeln!(out, "  ({{{}}}, {a})", c.join(", "));
            }
        }
        let _ = writeln!(
            out,
            "gamma(none) = {}, gamma(all) = {}, {} coalitions evaluated, {} ms",
            self.gamma_empty as u8, self.gamma_full as u8, self.coalitions_evaluated, self.wall_ms
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
