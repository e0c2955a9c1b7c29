//! Synthetic model families for scaling experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lts::{Lts, LtsBuilder, StateId};
use crate::responsibility::{Actor, Signature};

pub const DEFAULT_STEPS: &[u32] = &[1, 2, 3];
pub const DEFAULT_DEGREE: usize = 6;
pub const DEFAULT_BAD_FRACTION: f64 = 0.01;
pub const TREE_BAD_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    Random,
    Tree,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Family::Linear),
            "random" => Ok(Family::Random),
            "tree" => Ok(Family::Tree),
            _ => Err(format!("unknown family `{s}` (expected linear, random or tree)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Step sizes of the linear family.
    pub steps: Vec<u32>,
    /// Out-degree of the random family.
    pub degree: usize,
    /// Fraction of bad states in the random family.
    pub bad_fraction: f64,
}

impl BenchSpec {
    pub fn new(family: Family, n: usize, m: usize) -> Self {
        BenchSpec {
            family,
            n,
            m,
            seed: 0,
            steps: DEFAULT_STEPS.to_vec(),
            degree: DEFAULT_DEGREE,
            bad_fraction: DEFAULT_BAD_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("need n >= m >= 1, got n={n}, m={m}")]
    Sizes { n: usize, m: usize },
    #[error("the random family needs n > degree ({degree}), got n={n}")]
    TooSmall { n: usize, degree: usize },
    #[error("the tree family needs n >= 2")]
    TreeTooSmall,
    #[error("step sizes must be positive")]
    Steps,
}

pub fn generate(spec: &BenchSpec) -> Result<(Lts, Signature), BenchError> {
    if spec.m == 0 || spec.n < spec.m {
        return Err(BenchError::Sizes {
            n: spec.n,
            m: spec.m,
        });
    }
    match spec.family {
        Family::Linear => gen_linear_with(spec.n, spec.m, &spec.steps),
        Family::Random => gen_random_with(spec.n, spec.m, spec.seed, spec.degree, spec.bad_fraction),
        Family::Tree => gen_tree(spec.n, spec.m),
    }
}

/// States `0..=n`; `i → min(i+k, n)` for each step `k`; `n` is bad; actor `j`
/// holds the states congruent to `j` modulo `m`.
pub fn gen_linear(n: usize, m: usize) -> (Lts, Signature) {
    gen_linear_with(n, m, DEFAULT_STEPS).expect("default steps are valid")
}

pub fn gen_linear_with(n: usize, m: usize, steps: &[u32]) -> Result<(Lts, Signature), BenchError> {
    if steps.is_empty() || steps.contains(&0) {
        return Err(BenchError::Steps);
    }
    let mut b = LtsBuilder::new(n + 1, 0);
    let labels: Vec<u32> = steps.iter().map(|k| b.intern(&format!("step{k}"))).collect();
    for i in 0..n {
        for (&k, &label) in steps.iter().zip(&labels) {
            b.add_edge_id(i as StateId, (i + k as usize).min(n) as StateId, label);
        }
    }
    b.set_bad(n as StateId);
    let mut actors: Vec<Actor> = (0..m)
        .map(|j| Actor {
            name: format!("a{j}"),
            states: Vec::new(),
        })
        .collect();
    for i in 0..=n {
        actors[i % m].states.push(i as StateId);
    }
    Ok((b.build(), plain(actors)))
}

pub fn gen_random(n: usize, m: usize, seed: u64) -> Result<(Lts, Signature), BenchError> {
    gen_random_with(n, m, seed, DEFAULT_DEGREE, DEFAULT_BAD_FRACTION)
}

/// `degree` distinct random successors per state, a `bad_fraction` of bad
/// states (at least one, never the initial state), extra edges until bad is
/// reachable, and a shuffled partition into `m` near-equal actors.
pub fn gen_random_with(
    n: usize,
    m: usize,
    seed: u64,
    degree: usize,
    bad_fraction: f64,
) -> Result<(Lts, Signature), BenchError> {
    if n <= degree {
        return Err(BenchError::TooSmall { n, degree });
    }
    if m == 0 || n < m {
        return Err(BenchError::Sizes { n, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bad_count = ((n as f64 * bad_fraction).round() as usize).clamp(1, n - 1);
    let mut bad = vec![false; n];
    for s in rand::seq::index::sample(&mut rng, n - 1, bad_count) {
        bad[s + 1] = true;
    }
    let mut succ: Vec<Vec<StateId>> = (0..n)
        .map(|s| {
            if bad[s] {
                return Vec::new();
            }
            rand::seq::index::sample(&mut rng, n - 1, degree)
                .into_iter()
                .map(|t| (if t >= s { t + 1 } else { t }) as StateId)
                .collect()
        })
        .collect();
    // Link a random reachable state to a random bad state until bad is reachable.
    loop {
        let reach = reachable_from(0, &succ);
        if (0..n).any(|s| reach[s] && bad[s]) {
            break;
        }
        let from: Vec<usize> = (0..n).filter(|&s| reach[s]).collect();
        let to: Vec<usize> = (0..n).filter(|&s| bad[s]).collect();
        let s = from[rng.gen_range(0..from.len())];
        let t = to[rng.gen_range(0..to.len())];
        succ[s].push(t as StateId);
    }
    let mut b = LtsBuilder::new(n, 0);
    let label = b.intern("go");
    for (s, ts) in succ.iter().enumerate() {
        for &t in ts {
            b.add_edge_id(s as StateId, t, label);
        }
        if bad[s] {
            b.set_bad(s as StateId);
        }
    }
    let mut order: Vec<StateId> = (0..n as StateId).collect();
    order.shuffle(&mut rng);
    let actors = chunks(&order, m);
    Ok((b.build(), plain(actors)))
}

/// Binary tree in heap order (children of `i` are `2i+1`, `2i+2`) truncated
/// to `n` states. Leaves loop on themselves; every tenth leaf from the left
/// (leaf index 9, 19, ...) is bad. Actors are contiguous index ranges.
pub fn gen_tree(n: usize, m: usize) -> Result<(Lts, Signature), BenchError> {
    if n < 2 {
        return Err(BenchError::TreeTooSmall);
    }
    if m == 0 || n < m {
        return Err(BenchError::Sizes { n, m });
    }
    let mut b = LtsBuilder::new(n, 0);
    let left = b.intern("left");
    let right = b.intern("right");
    let stay = b.intern("stay");
    let mut leaves = 0;
    for i in 0..n {
        let s = i as StateId;
        if 2 * i + 1 >= n {
            if leaves % TREE_BAD_EVERY == TREE_BAD_EVERY - 1 {
                b.set_bad(s);
            }
            b.add_edge_id(s, s, stay);
            leaves += 1;
            continue;
        }
        b.add_edge_id(s, (2 * i + 1) as StateId, left);
        if 2 * i + 2 < n {
            b.add_edge_id(s, (2 * i + 2) as StateId, right);
        }
    }
    let order: Vec<StateId> = (0..n as StateId).collect();
    Ok((b.build(), plain(chunks(&order, m))))
}

fn plain(actors: Vec<Actor>) -> Signature {
    Signature {
        actors,
        aux: vec![],
        adv: vec![],
    }
}

/// Splits `states` into `m` consecutive parts whose sizes differ by at most one.
fn chunks(states: &[StateId], m: usize) -> Vec<Actor> {
    let n = states.len();
    (0..m)
        .map(|j| {
            let mut part = states[j * n / m..(j + 1) * n / m].to_vec();
            part.sort_unstable();
            Actor {
                name: format!("a{j}"),
                states: part,
            }
        })
        .collect()
}

fn reachable_from(init: usize, succ: &[Vec<StateId>]) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![init];
    seen[init] = true;
    while let Some(s) = stack.pop() {
        for &t in &succ[s] {
            if !std::mem::replace(&mut seen[t as usize], true) {
                stack.push(t as usize);
            }
        }
    }
    seen
}
