use num_rational::BigRational;

use respo::actors::{action_separate, action_signature, module_signature, with_scheduler, ActionOrder};
use respo::responsibility::{format_rational, shapley_exact, CoalitionOracle, SimpleGame};
use respo::rml::parse_program;
use respo::semantics::{build_ts, find_counterexample, parse_counterexample, BuildOptions};
use respo::tsformat::import_ts;

const MODELS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");

fn read(name: &str) -> String {
    std::fs::read_to_string(format!("{MODELS}/{name}")).unwrap()
}

fn formatted(values: &[BigRational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

#[test]
fn train_station_file() {
    let (ts, sig) = import_ts(&read("train_station.ts")).unwrap();
    let oracle = CoalitionOracle::forward(&ts, &sig).unwrap();
    assert_eq!(formatted(&shapley_exact(&oracle, 30).unwrap().values), ["2/3", "1/6", "1/6"]);
}

#[test]
fn window_with_supplied_counterexample() {
    let p = with_scheduler(&parse_program(&read("window.rml")).unwrap()).unwrap();
    let ts = build_ts(&p.program, &BuildOptions::default()).unwrap();
    let path = parse_counterexample(&ts, &read("window.cex")).unwrap();
    let cex = respo::semantics::Counterexample { path };
    let (sig, _) = module_signature(&p, &ts).unwrap();
    let oracle = CoalitionOracle::backward(&ts, &sig, &cex).unwrap();
    let exact = shapley_exact(&oracle, 30).unwrap();
    let by_name: Vec<(String, String)> = sig
        .actor_names()
        .into_iter()
        .zip(formatted(&exact.values))
        .collect();
    for (name, v) in [("Rebeca", "2/3"), ("Ada", "1/6"), ("Julia", "1/6")] {
        assert!(by_name.contains(&(name.to_string(), v.to_string())), "{by_name:?}");
    }
}

#[test]
fn puzzle_box_by_action() {
    let p = parse_program(&read("puzzle_box.rml")).unwrap();
    let opts = BuildOptions {
        clamp: true,
        ..BuildOptions::default()
    };
    let ts = build_ts(&p, &opts).unwrap();
    assert!(find_counterexample(&ts).is_some());
    let sep = action_separate(&ts, &ActionOrder::Lexicographic);
    let sig = action_signature(&sep, |a| a.to_string());
    let oracle = CoalitionOracle::forward(&sep.ts, &sig).unwrap();
    assert_eq!(oracle.players(), 3);
    assert_eq!(formatted(&shapley_exact(&oracle, 30).unwrap().values), ["1/2", "0", "1/2"]);
}

#[test]
fn puzzle_box_needs_clamping() {
    let p = parse_program(&read("puzzle_box.rml")).unwrap();
    assert!(build_ts(&p, &BuildOptions::default()).is_err());
}
