use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use respo::actors::{action_separate, action_signature, with_scheduler, ActionOrder};
use respo::benchgen::{generate, BenchSpec, Family};
use respo::responsibility::Mode;
use respo::semantics::{build_ts, display_action, BuildOptions};
use respo::tsformat::{export_ts, import_ts};
use respo_cli::{
    is_ts_file, load_program, run, ActorScheme, Algorithm, AnalysisConfig, CounterexampleSource,
    PipelineError,
};

#[derive(Parser)]
#[command(name = "respo", version, about = "Actor-based responsibility analysis for reactive modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the responsibility of every actor.
    Analyze(AnalyzeArgs),
    /// Emit the scheduled program or the action-separated system.
    Transform(TransformArgs),
    /// Generate a synthetic benchmark in the TS exchange format.
    Gen(GenArgs),
    /// Parse and validate a model.
    Check(CheckArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Program (`.rml` or any other extension) or TS exchange file (`.ts`).
    model: PathBuf,
    /// Safety invariant, overriding the one in the model.
    #[arg(long)]
    property: Option<String>,
    /// Clamp out-of-range updates to the nearest bound instead of failing.
    #[arg(long)]
    clamp: bool,
    /// State cap for the explicit construction [default: $RESPO_MAX_STATES or 10000000].
    #[arg(long)]
    max_states: Option<usize>,
}

impl ModelArgs {
    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            max_states: self.max_states.unwrap_or_else(respo::semantics::default_max_states),
            clamp: self.clamp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Forward,
    Backward,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Exact,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Table,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "forward")]
    mode: ModeArg,
    /// `auto` or a file with one state per line (backward mode).
    #[arg(long, default_value = "auto")]
    counterexample: String,
    /// module | value:<v1,...> | action | manual:<path> | file [default: file for .ts, module otherwise]
    #[arg(long)]
    actors: Option<ActorScheme>,
    #[arg(long, value_enum, default_value = "exact")]
    algorithm: AlgorithmArg,
    /// Number of sampled orderings.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    output: OutputArg,
    /// Largest actor count for exact computation.
    #[arg(long, default_value_t = respo::responsibility::DEFAULT_EXACT_CAP)]
    max_actors: usize,
    /// Order of actions in separation gadgets: `lex` or a comma-separated list.
    #[arg(long, default_value = "lex")]
    action_order: String,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Report wall_ms as 0, for byte-identical output.
    #[arg(long)]
    no_timing: bool,
    /// List every switching pair.
    #[arg(long)]
    switching_pairs: bool,
    /// Print Safe's strategy for each witness coalition.
    #[arg(long)]
    witness_strategy: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformTarget {
    /// Program with the scheduler module.
    Scheduler,
    /// Action-separated TS with its action signature.
    Separated,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    to: TransformTarget,
    #[arg(long, default_value = "lex")]
    action_order: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// linear | random | tree
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step sizes of the linear family.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    steps: Vec<u32>,
    /// Out-degree of the random family.
    #[arg(long, default_value_t = respo::benchgen::DEFAULT_DEGREE)]
    degree: usize,
    /// Fraction of bad states in the random family.
    #[arg(long, default_value_t = respo::benchgen::DEFAULT_BAD_FRACTION)]
    bad_fraction: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Also build the transition system.
    #[arg(long)]
    build: bool,
}

fn action_order(s: &str) -> ActionOrder {
    if s == "lex" {
        ActionOrder::Lexicographic
    } else {
        ActionOrder::Declared(s.split(',').map(|a| a.trim().to_string()).collect())
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => print_stdout(text),
    }
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn print_stdout(text: &str) -> Result<(), PipelineError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(PipelineError::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<(), PipelineError> {
    if let Some(t) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    let cfg = AnalysisConfig {
        property: a.model.property.clone(),
        mode: match a.mode {
            ModeArg::Forward => Mode::Forward,
            ModeArg::Backward => Mode::Backward,
        },
        counterexample: match a.counterexample.as_str() {
            "auto" => CounterexampleSource::Auto,
            path => CounterexampleSource::File(path.into()),
        },
        actors: a.actors,
        algorithm: match a.algorithm {
            AlgorithmArg::Exact => Algorithm::Exact,
            AlgorithmArg::Sample => Algorithm::Sample {
                samples: a.samples,
                seed: a.seed,
            },
        },
        max_states: a.model.build_options().max_states,
        max_actors: a.max_actors,
        clamp: a.model.clamp,
        action_order: action_order(&a.action_order),
        switching_pairs: a.switching_pairs,
        witness_strategies: a.witness_strategy,
        ..AnalysisConfig::new(&a.model.model)
    };
    let mut report = run(&cfg)?;
    if a.no_timing {
        report.wall_ms = 0;
    }
    let text = match a.output {
        OutputArg::Table => report.to_table(),
        OutputArg::Json => {
            serde_json::to_string_pretty(&report.to_json()).expect("report serializes") + "\n"
        }
    };
    print_stdout(&text)
}

fn transform(t: TransformArgs) -> Result<(), PipelineError> {
    let opts = t.model.build_options();
    let text = match t.to {
        TransformTarget::Scheduler => {
            let (p, _) = load_program(&t.model.model, t.model.property.as_deref())?;
            with_scheduler(&p)?.program.to_string()
        }
        TransformTarget::Separated => {
            let order = action_order(&t.action_order);
            if is_ts_file(&t.model.model) {
                let text = std::fs::read_to_string(&t.model.model).map_err(|source| PipelineError::Io {
                    path: t.model.model.display().to_string(),
                    source,
                })?;
                let (ts, _) = import_ts(&text).map_err(|source| PipelineError::Format {
                    path: t.model.model.display().to_string(),
                    source,
                })?;
                let sep = action_separate(&ts, &order);
                export(&sep.ts, &action_signature(&sep, |a| a.to_string()))?
            } else {
                let (p, _) = load_program(&t.model.model, t.model.property.as_deref())?;
                let ts = build_ts(&p, &opts)?;
                let sep = action_separate(&ts, &order);
                export(&sep.ts, &action_signature(&sep, |a| display_action(&p, a)))?
            }
        }
    };
    emit(t.output.as_deref(), &text)
}

fn export(ts: &respo::lts::Lts, sig: &respo::responsibility::Signature) -> Result<String, PipelineError> {
    export_ts(ts, sig).map_err(|e| PipelineError::Config(e.to_string()))
}

fn gen(g: GenArgs) -> Result<(), PipelineError> {
    let spec = BenchSpec {
        seed: g.seed,
        steps: g.steps,
        degree: g.degree,
        bad_fraction: g.bad_fraction,
        ..BenchSpec::new(g.family, g.n, g.m)
    };
    let (ts, sig) = generate(&spec).map_err(|e| PipelineError::Config(e.to_string()))?;
    emit(g.output.as_deref(), &export(&ts, &sig)?)
}

fn check(c: CheckArgs) -> Result<(), PipelineError> {
    let path = &c.model.model;
    if is_ts_file(path) {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let (ts, sig) = import_ts(&text).map_err(|source| PipelineError::Format {
            path: path.display().to_string(),
            source,
        })?;
        if !sig.actors.is_empty() {
            sig.validate(ts.num_states())
                .map_err(|e| PipelineError::Config(format!("signature: {e}")))?;
        }
        println!(
            "{}: {} states, {} transitions, {} bad, {} actors",
            path.display(),
            ts.num_states(),
            ts.num_transitions(),
            ts.bad_states().count(),
            sig.actors.len()
        );
        return Ok(());
    }
    let (p, warnings) = load_program(path, c.model.property.as_deref())?;
    println!(
        "{}: {} modules, {} variables, {} named actions ({} synchronising), safety invariant {}",
        path.display(),
        p.modules.len(),
        p.variables().len(),
        p.named_actions().len(),
        p.synchronising_actions().len(),
        if p.safety_invariant.is_some() { "present" } else { "missing" }
    );
    if c.build {
        let ts = build_ts(&p, &c.model.build_options())?;
        println!(
            "{} states, {} transitions, {} bad, {} deadlocked",
            ts.num_states(),
            ts.num_transitions(),
            ts.bad_states().count(),
            ts.completed_deadlocks().len()
        );
    }
    for w in warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Transform(t) => transform(t),
        Command::Gen(g) => gen(g),
        Command::Check(c) => check(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
