//! Forward and backward responsibility as Shapley values of simple
//! cooperative games over coalitions of actors.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};
use std::sync::{Mutex, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameGraph, SafetyGame, Workspace, UNRESTRICTED};
use crate::lts::{Lts, StateId};
use crate::semantics::{validate_counterexample, Counterexample, CounterexampleError};

/// Largest actor count accepted by exact computations unless configured otherwise.
pub const DEFAULT_EXACT_CAP: usize = 30;

/// Coalitions are bitmasks, so no game can have more actors than this.
pub const MAX_ACTORS: usize = 64;

pub const AUX_SLOT: u32 = u32::MAX - 1;
pub const ADV_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub name: String,
    pub states: Vec<StateId>,
}

/// Actors plus the always-cooperating (`aux`) and always-adversarial (`adv`) states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub actors: Vec<Actor>,
    pub aux: Vec<StateId>,
    pub adv: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("state {state} belongs to both {first} and {second}")]
    Overlap {
        state: StateId,
        first: String,
        second: String,
    },
    #[error("state {0} is in no actor and in neither aux nor adv")]
    Uncovered(StateId),
    #[error("actor `{0}` has no states")]
    EmptyActor(String),
    #[error("state {state} of {owner} does not exist")]
    OutOfRange { state: StateId, owner: String },
    #[error("actor name `{0}` is used twice")]
    DuplicateName(String),
}

impl Signature {
    fn owner_name(&self, slot: u32) -> String {
        match slot {
            AUX_SLOT => "aux".into(),
            ADV_SLOT => "adv".into(),
            a => format!("actor `{}`", self.actors[a as usize].name),
        }
    }

    /// Maps each state to its actor index, [`AUX_SLOT`] or [`ADV_SLOT`],
    /// checking the partition invariants on the way.
    pub fn slots(&self, num_states: usize) -> Result<Vec<u32>, SignatureError> {
        const FREE: u32 = u32::MAX - 2;
        let mut slot = vec![FREE; num_states];
        let mut names = std::collections::HashSet::new();
        let groups = self
            .actors
            .iter()
            .enumerate()
            .map(|(i, a)| (i as u32, &a.states))
            .chain([(AUX_SLOT, &self.aux), (ADV_SLOT, &self.adv)]);
        for a in &self.actors {
            if a.states.is_empty() {
                return Err(SignatureError::EmptyActor(a.name.clone()));
            }
            if !names.insert(a.name.as_str()) {
                return Err(SignatureError::DuplicateName(a.name.clone()));
            }
        }
        for (owner, states) in groups {
            for &s in states {
                let Some(cur) = slot.get_mut(s as usize) else {
                    return Err(SignatureError::OutOfRange {
                        state: s,
                        owner: self.owner_name(owner),
                    });
                };
                if *cur != FREE {
                    return Err(SignatureError::Overlap {
                        state: s,
                        first: self.owner_name(*cur),
                        second: self.owner_name(owner),
                    });
                }
                *cur = owner;
            }
        }
        if let Some(s) = slot.iter().position(|&x| x == FREE) {
            return Err(SignatureError::Uncovered(s as StateId));
        }
        Ok(slot)
    }

    pub fn validate(&self, num_states: usize) -> Result<(), SignatureError> {
        self.slots(num_states).map(|_| ())
    }

    pub fn actor_names(&self) -> Vec<String> {
        self.actors.iter().map(|a| a.name.clone()).collect()
    }

    /// Renders a coalition as `{A,B}`.
    pub fn format_coalition(&self, c: Coalition) -> String {
        let names: Vec<&str> = c.members().map(|a| self.actors[a].name.as_str()).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// A set of actors, as a bitmask over actor indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(pub u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ACTORS);
        Coalition(if n == 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn singleton(a: usize) -> Self {
        Coalition(1 << a)
    }

    pub fn contains(self, a: usize) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn with(self, a: usize) -> Self {
        Coalition(self.0 | 1 << a)
    }

    pub fn without(self, a: usize) -> Self {
        Coalition(self.0 & !(1 << a))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let a = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(a)
        })
    }
}

/// Union of the state sets of the actors in `c`, sorted.
pub fn flatten(sig: &Signature, c: Coalition) -> Vec<StateId> {
    let mut out: Vec<StateId> = c
        .members()
        .flat_map(|a| sig.actors[a].states.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

fn safe_mask(ts: &Lts, sig: &Signature, c: Coalition) -> Vec<bool> {
    let mut safe = vec![false; ts.num_states()];
    for s in flatten(sig, c).into_iter().chain(sig.aux.iter().copied()) {
        safe[s as usize] = true;
    }
    safe
}

/// Safe owns the coalition's states and the auxiliary states.
pub fn build_forward_game(ts: &Lts, sig: &Signature, c: Coalition) -> SafetyGame {
    SafetyGame::new(GameGraph::from_lts(ts), safe_mask(ts, sig, c))
}

/// Like the forward game, but every counterexample state before the last one
/// that Safe does not own keeps only its edge along the counterexample.
pub fn build_backward_game(
    ts: &Lts,
    sig: &Signature,
    cex: &Counterexample,
    c: Coalition,
) -> Result<SafetyGame, CounterexampleError> {
    validate_counterexample(ts, &cex.path)?;
    let safe = safe_mask(ts, sig, c);
    let next = engraving(ts.num_states(), cex);
    let mut edges = Vec::with_capacity(ts.num_transitions());
    for s in 0..ts.num_states() as StateId {
        let e = next[s as usize];
        if e != UNRESTRICTED && !safe[s as usize] {
            edges.push((s, e));
        } else {
            edges.extend(ts.successors(s).iter().map(|&t| (s, t)));
        }
    }
    let graph = GameGraph::new(ts.num_states(), ts.initial(), ts.bad_mask().to_vec(), edges);
    Ok(SafetyGame::new(graph, safe))
}

fn engraving(n: usize, cex: &Counterexample) -> Vec<StateId> {
    let mut next = vec![UNRESTRICTED; n];
    for w in cex.path.windows(2) {
        next[w[0] as usize] = w[1];
    }
    next
}

/// A monotone simple game over `players()` actors.
pub trait SimpleGame: Sync {
    fn players(&self) -> usize;
    fn gamma(&self, c: Coalition) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Forward,
    Backward,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Forward => "forward",
            Mode::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponsibilityError {
    #[error("{actors} actors exceed the limit of {limit}")]
    TooManyActors { actors: usize, limit: usize },
    #[error("invalid signature: {0}")]
    Signature(#[from] SignatureError),
    #[error("invalid counterexample: {0}")]
    Counterexample(#[from] CounterexampleError),
}

const DENSE_MEMO_MAX_ACTORS: usize = 24;

enum Memo {
    // 0 = unknown, 1 = lost, 2 = won
    Dense(Vec<AtomicU8>),
    Sparse(RwLock<HashMap<u64, bool>>),
}

/// Evaluates the forward or backward cooperative game of a transition
/// system and signature, memoizing one game solve per coalition.
pub struct CoalitionOracle {
    mode: Mode,
    graph: GameGraph,
    slot: Vec<u32>,
    next: Option<Vec<StateId>>,
    n: usize,
    memo: Memo,
    evaluated: AtomicU64,
    pool: Mutex<Vec<Workspace>>,
}

impl CoalitionOracle {
    pub fn forward(ts: &Lts, sig: &Signature) -> Result<Self, ResponsibilityError> {
        Self::new(Mode::Forward, ts, sig, None)
    }

    pub fn backward(
        ts: &Lts,
        sig: &Signature,
        cex: &Counterexample,
    ) -> Result<Self, ResponsibilityError> {
        validate_counterexample(ts, &cex.path)?;
        Self::new(Mode::Backward, ts, sig, Some(engraving(ts.num_states(), cex)))
    }

    fn new(
        mode: Mode,
        ts: &Lts,
        sig: &Signature,
        next: Option<Vec<StateId>>,
    ) -> Result<Self, ResponsibilityError> {
        let n = sig.actors.len();
        if n > MAX_ACTORS {
            return Err(ResponsibilityError::TooManyActors {
                actors: n,
                limit: MAX_ACTORS,
            });
        }
        let slot = sig.slots(ts.num_states())?;
        let memo = if n <= DENSE_MEMO_MAX_ACTORS {
            Memo::Dense((0..1usize << n).map(|_| AtomicU8::new(0)).collect())
        } else {
            Memo::Sparse(RwLock::new(HashMap::new()))
        };
        Ok(CoalitionOracle {
            mode,
            graph: GameGraph::from_lts(ts),
            slot,
            next,
            n,
            memo,
            evaluated: AtomicU64::new(0),
            pool: Mutex::new(Vec::new()),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of distinct coalitions whose game has been solved.
    pub fn coalitions_evaluated(&self) -> u64 {
        self.evaluated.load(Ordering::Relaxed)
    }

    fn solve(&self, c: Coalition) -> bool {
        let mut ws = self.pool.lock().unwrap().pop().unwrap_or_default();
        let slot = &self.slot;
        let bits = c.0;
        let safe = |s: StateId| {
            let k = slot[s as usize];
            k == AUX_SLOT || (k < 64 && bits >> k & 1 == 1)
        };
        let lost = match &self.next {
            None => self.graph.attract(&mut ws, safe, |_| UNRESTRICTED, true),
            Some(next) => self.graph.attract(
                &mut ws,
                safe,
                |s| {
                    let e = next[s as usize];
                    if e != UNRESTRICTED && !safe(s) {
                        e
                    } else {
                        UNRESTRICTED
                    }
                },
                true,
            ),
        };
        self.pool.lock().unwrap().push(ws);
        !lost
    }
}

impl SimpleGame for CoalitionOracle {
    fn players(&self) -> usize {
        self.n
    }

    fn gamma(&self, c: Coalition) -> bool {
        match &self.memo {
            Memo::Dense(cells) => {
                let cell = &cells[c.0 as usize];
                match cell.load(Ordering::Acquire) {
                    1 => false,
                    2 => true,
                    _ => {
                        let v = self.solve(c);
                        if cell
                            .compare_exchange(0, 1 + v as u8, Ordering::AcqRel, Ordering::Acquire)
                            .is_ok()
                        {
                            self.evaluated.fetch_add(1, Ordering::Relaxed);
                        }
                        v
                    }
                }
            }
            Memo::Sparse(map) => {
                if let Some(&v) = map.read().unwrap().get(&c.0) {
                    return v;
                }
                let v = self.solve(c);
                if map.write().unwrap().insert(c.0, v).is_none() {
                    self.evaluated.fetch_add(1, Ordering::Relaxed);
                }
                v
            }
        }
    }
}

/// γ over every coalition of an `n`-actor game, one bit per coalition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaTable {
    n: usize,
    bits: Vec<u64>,
}

impl GammaTable {
    pub fn players(&self) -> usize {
        self.n
    }

    pub fn get(&self, c: Coalition) -> bool {
        self.bits[(c.0 >> 6) as usize] >> (c.0 & 63) & 1 == 1
    }

    /// All switching pairs `(C, a)`: γ(C) = 0 and γ(C ∪ {a}) = 1 with `a ∉ C`.
    pub fn switching_pairs(&self) -> Vec<(Coalition, usize)> {
        let mut out = Vec::new();
        for c in 0..1u64 << self.n {
            let c = Coalition(c);
            if self.get(c) {
                continue;
            }
            for a in 0..self.n {
                if !c.contains(a) && self.get(c.with(a)) {
                    out.push((c, a));
                }
            }
        }
        out
    }
}

fn check_cap(n: usize, cap: usize) -> Result<(), ResponsibilityError> {
    let limit = cap.min(MAX_ACTORS - 1);
    if n > limit {
        return Err(ResponsibilityError::TooManyActors { actors: n, limit });
    }
    Ok(())
}

const GRAY_CHUNK: u64 = 256;

/// Evaluates γ on all coalitions, walking each chunk in Gray-code order.
pub fn gamma_table<G: SimpleGame + ?Sized>(
    g: &G,
    cap: usize,
) -> Result<GammaTable, ResponsibilityError> {
    let n = g.players();
    check_cap(n, cap)?;
    let total = 1u64 << n;
    let chunks = total.div_ceil(GRAY_CHUNK);
    let results: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * GRAY_CHUNK;
            let hi = (lo + GRAY_CHUNK).min(total);
            (lo..hi)
                .map(|i| i ^ (i >> 1))
                .filter(|&c| g.gamma(Coalition(c)))
                .collect()
        })
        .collect();
    let mut bits = vec![0u64; total.div_ceil(64) as usize];
    for c in results.into_iter().flatten() {
        bits[(c >> 6) as usize] |= 1 << (c & 63);
    }
    Ok(GammaTable { n, bits })
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// Exact Shapley values with, per actor, the first switching coalition by
/// ascending size (ties broken by bitmask).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactShapley {
    pub values: Vec<BigRational>,
    pub witnesses: Vec<Option<Coalition>>,
    pub table: GammaTable,
}

impl ExactShapley {
    pub fn gamma_empty(&self) -> bool {
        self.table.get(Coalition::EMPTY)
    }

    pub fn gamma_full(&self) -> bool {
        self.table.get(Coalition::full(self.table.n))
    }
}

/// Counts switching pairs per coalition size for each actor and weighs them
/// by `k!(n-k-1)!/n!`.
pub fn shapley_from_table(t: &GammaTable) -> ExactShapley {
    let n = t.n;
    let mut counts = vec![vec![0u64; n.max(1)]; n];
    let mut witnesses: Vec<Option<Coalition>> = vec![None; n];
    for c in 0..1u64 << n {
        let c = Coalition(c);
        if t.get(c) {
            continue;
        }
        let k = c.len();
        for a in 0..n {
            if !c.contains(a) && t.get(c.with(a)) {
                counts[a][k] += 1;
                let better = match witnesses[a] {
                    None => true,
                    Some(w) => (k, c.0) < (w.len(), w.0),
                };
                if better {
                    witnesses[a] = Some(c);
                }
            }
        }
    }
    let denom = factorial(n);
    let weights: Vec<BigInt> = (0..n).map(|k| factorial(k) * factorial(n - k - 1)).collect();
    let values = counts
        .iter()
        .map(|per_size| {
            let num: BigInt = per_size
                .iter()
                .zip(&weights)
                .map(|(&cnt, w)| w * cnt)
                .sum();
            BigRational::new(num, denom.clone())
        })
        .collect();
    ExactShapley {
        values,
        witnesses,
        table: t.clone(),
    }
}

pub fn shapley_exact<G: SimpleGame + ?Sized>(
    g: &G,
    cap: usize,
) -> Result<ExactShapley, ResponsibilityError> {
    Ok(shapley_from_table(&gamma_table(g, cap)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledShapley {
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
    pub samples: u64,
}

/// Ordering number `index` of `0..n` for `seed`. Orderings come in pairs:
/// an even index draws a uniform permutation from its own random stream and
/// the following odd index is that permutation reversed.
pub fn sample_permutation(n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index / 2);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    if index % 2 == 1 {
        perm.reverse();
    }
    perm
}

/// Permutation-sampling estimate of the Shapley values. Each actor's marginal
/// contribution is averaged over `samples` orderings from [`sample_permutation`],
/// each of which is uniformly distributed.
pub fn shapley_sampled<G: SimpleGame + ?Sized>(
    g: &G,
    samples: u64,
    seed: u64,
) -> SampledShapley {
    assert!(samples >= 1);
    let n = g.players();
    let (sum, sumsq) = (0..samples)
        .into_par_iter()
        .fold(
            || (vec![0i64; n], vec![0i64; n]),
            |(mut sum, mut sumsq), j| {
                let mut pred = Coalition::EMPTY;
                let mut prev = g.gamma(pred) as i64;
                for a in sample_permutation(n, seed, j) {
                    pred = pred.with(a);
                    let cur = g.gamma(pred) as i64;
                    let d = cur - prev;
                    sum[a] += d;
                    sumsq[a] += d * d;
                    prev = cur;
                }
                (sum, sumsq)
            },
        )
        .reduce(
            || (vec![0i64; n], vec![0i64; n]),
            |(mut s1, mut q1), (s2, q2)| {
                for a in 0..n {
                    s1[a] += s2[a];
                    q1[a] += q2[a];
                }
                (s1, q1)
            },
        );
    let nf = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / nf).collect();
    let half_width = (0..n)
        .map(|a| {
            if samples < 2 {
                return 0.0;
            }
            let var = (sumsq[a] as f64 - nf * mean[a] * mean[a]) / (nf - 1.0);
            1.96 * var.max(0.0).sqrt() / nf.sqrt()
        })
        .collect();
    SampledShapley {
        mean,
        half_width,
        samples,
    }
}

/// Coalitions of the other actors in ascending size, bitmask order within a size.
fn coalitions_without(n: usize, a: usize) -> impl Iterator<Item = Coalition> {
    let m = n - 1;
    let low = (1u64 << a) - 1;
    (0..=m).flat_map(move |k| {
        let mut next = if k == 0 { Some(0u64) } else { Some((1u64 << k) - 1) };
        std::iter::from_fn(move || {
            let x = next?;
            if m < 64 && x >> m != 0 {
                return None;
            }
            next = if x == 0 {
                None
            } else {
                // Gosper's hack: next larger mask with the same popcount.
                let c = x & x.wrapping_neg();
                let r = x.wrapping_add(c);
                if r == 0 {
                    None
                } else {
                    Some((((r ^ x) >> 2) / c) | r)
                }
            };
            Some(Coalition((x & low) | ((x & !low) << 1)))
        })
    })
}

/// Whether actor `a` has a switching pair, with the first one found.
pub fn positivity<G: SimpleGame + ?Sized>(
    g: &G,
    a: usize,
    cap: usize,
) -> Result<(bool, Option<Coalition>), ResponsibilityError> {
    check_cap(g.players(), cap)?;
    for c in coalitions_without(g.players(), a) {
        if !g.gamma(c) && g.gamma(c.with(a)) {
            return Ok((true, Some(c)));
        }
    }
    Ok((false, None))
}

/// Exact Shapley value of a single actor.
pub fn shapley_value<G: SimpleGame + ?Sized>(
    g: &G,
    a: usize,
    cap: usize,
) -> Result<BigRational, ResponsibilityError> {
    let n = g.players();
    check_cap(n, cap)?;
    let mut counts = vec![0u64; n];
    for c in coalitions_without(n, a) {
        if !g.gamma(c) && g.gamma(c.with(a)) {
            counts[c.len()] += 1;
        }
    }
    let num: BigInt = (0..n)
        .map(|k| factorial(k) * factorial(n - k - 1) * counts[k])
        .sum();
    Ok(BigRational::new(num, factorial(n)))
}

/// Whether the responsibility of `a` is at least `q`.
pub fn threshold<G: SimpleGame + ?Sized>(
    g: &G,
    a: usize,
    q: &BigRational,
    cap: usize,
) -> Result<bool, ResponsibilityError> {
    Ok(&shapley_value(g, a, cap)? >= q)
}

/// Renders a value as a reduced fraction, or `0` / `1`.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_zero() {
        "0".into()
    } else if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::game::tests::naive_safe_wins;
    use crate::lts::tests::train_station;
    use crate::lts::LtsBuilder;
    use crate::semantics::find_counterexample;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    pub(crate) fn station_signature() -> Signature {
        let actor = |name: &str, states: &[StateId]| Actor {
            name: name.into(),
            states: states.to_vec(),
        };
        Signature {
            actors: vec![actor("A", &[0, 1]), actor("B", &[2, 3]), actor("C", &[4, 5, 6])],
            aux: vec![],
            adv: vec![7, 8],
        }
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    struct Table<F: Fn(Coalition) -> bool + Sync>(usize, F);

    impl<F: Fn(Coalition) -> bool + Sync> SimpleGame for Table<F> {
        fn players(&self) -> usize {
            self.0
        }
        fn gamma(&self, c: Coalition) -> bool {
            (self.1)(c)
        }
    }

    /// Shapley values straight from the definition, summing over every
    /// coalition with weights 1/(n·C(n-1,|C|)).
    pub(crate) fn shapley_by_definition<G: SimpleGame + ?Sized>(g: &G) -> Vec<BigRational> {
        let n = g.players();
        let binom = |n: usize, k: usize| -> BigInt {
            let mut r = BigInt::one();
            for i in 0..k {
                r = r * (n - i) / (i + 1);
            }
            r
        };
        (0..n)
            .map(|a| {
                let mut total = BigRational::zero();
                for c in 0..1u64 << n {
                    let c = Coalition(c);
                    if c.contains(a) {
                        continue;
                    }
                    let marginal = g.gamma(c.with(a)) as i64 - g.gamma(c) as i64;
                    let w = BigRational::new(BigInt::one(), binom(n - 1, c.len()) * n);
                    total += w * BigInt::from(marginal);
                }
                total
            })
            .collect()
    }

    #[test]
    fn signature_validation() {
        let sig = station_signature();
        assert!(sig.validate(9).is_ok());
        let mut bad = sig.clone();
        bad.adv = vec![7];
        assert_eq!(bad.validate(9), Err(SignatureError::Uncovered(8)));
        bad.adv = vec![7, 8, 0];
        assert!(matches!(bad.validate(9), Err(SignatureError::Overlap { state: 0, .. })));
        bad.adv = vec![7, 8, 9];
        assert!(matches!(bad.validate(9), Err(SignatureError::OutOfRange { state: 9, .. })));
        bad = sig.clone();
        bad.actors[1].states.clear();
        bad.adv.extend([2, 3]);
        assert_eq!(bad.validate(9), Err(SignatureError::EmptyActor("B".into())));
    }

    #[test]
    fn flatten_examples() {
        let sig = station_signature();
        assert!(flatten(&sig, Coalition::EMPTY).is_empty());
        assert_eq!(flatten(&sig, Coalition::singleton(0)), vec![0, 1]);
        assert_eq!(flatten(&sig, Coalition::full(3)), (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn forward_game_ownership() {
        let ts = train_station();
        let sig = station_signature();
        let g = build_forward_game(&ts, &sig, Coalition::singleton(0));
        assert_eq!(g.safe_states().collect::<Vec<_>>(), vec![0, 1]);
        let none = Signature {
            actors: vec![],
            aux: vec![],
            adv: (0..9).collect(),
        };
        assert_eq!(build_forward_game(&ts, &none, Coalition::EMPTY).safe_states().count(), 0);
    }

    #[test]
    fn train_station_forward() {
        let ts = train_station();
        let sig = station_signature();
        let oracle = CoalitionOracle::forward(&ts, &sig).unwrap();
        assert!(!oracle.gamma(Coalition::EMPTY));
        assert!(oracle.gamma(Coalition::singleton(0)));
        assert!(!oracle.gamma(Coalition::singleton(1)));
        assert!(oracle.gamma(Coalition(0b110)));
        let exact = shapley_exact(&oracle, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(exact.values, vec![q(2, 3), q(1, 6), q(1, 6)]);
        assert_eq!(exact.values, shapley_by_definition(&oracle));
        assert_eq!(oracle.coalitions_evaluated(), 8);
        let pairs = exact.table.switching_pairs();
        let expected = vec![
            (Coalition(0), 0),
            (Coalition(0b010), 0),
            (Coalition(0b010), 2),
            (Coalition(0b100), 0),
            (Coalition(0b100), 1),
        ];
        assert_eq!(pairs, expected);
        assert_eq!(format_rational(&exact.values[0]), "2/3");
        assert_eq!(exact.witnesses[0], Some(Coalition::EMPTY));
        assert_eq!(exact.witnesses[1], Some(Coalition(0b100)));
    }

    #[test]
    fn train_station_queries() {
        let ts = train_station();
        let oracle = CoalitionOracle::forward(&ts, &station_signature()).unwrap();
        assert_eq!(positivity(&oracle, 0, 30).unwrap(), (true, Some(Coalition::EMPTY)));
        assert!(threshold(&oracle, 0, &q(1, 2), 30).unwrap());
        assert!(threshold(&oracle, 1, &q(1, 6), 30).unwrap());
        assert!(!threshold(&oracle, 1, &q(1, 5), 30).unwrap());
        assert!(threshold(&oracle, 2, &q(0, 1), 30).unwrap());
        assert_eq!(shapley_value(&oracle, 2, 30).unwrap(), q(1, 6));
        assert!(matches!(
            positivity(&oracle, 0, 2),
            Err(ResponsibilityError::TooManyActors { actors: 3, limit: 2 })
        ));
    }

    #[test]
    fn train_station_sampled() {
        let ts = train_station();
        let oracle = CoalitionOracle::forward(&ts, &station_signature()).unwrap();
        for seed in [1, 2, 3] {
            let est = shapley_sampled(&oracle, 10_000, seed);
            for (m, exact) in est.mean.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
                assert!((m - exact).abs() < 0.05, "{m} vs {exact}");
            }
            assert_eq!(est, shapley_sampled(&oracle, 10_000, seed));
        }
    }

    #[test]
    fn synthetic_games() {
        let dictator = Table(3, |c: Coalition| c.contains(1));
        let exact = shapley_exact(&dictator, 30).unwrap();
        assert_eq!(exact.values, vec![q(0, 1), q(1, 1), q(0, 1)]);
        assert_eq!(positivity(&dictator, 1, 30).unwrap(), (true, Some(Coalition::EMPTY)));
        assert_eq!(positivity(&dictator, 0, 30).unwrap(), (false, None));

        let both = Table(2, |c: Coalition| c.len() == 2);
        let est = shapley_sampled(&both, 1000, 7);
        assert_eq!(est.mean, vec![0.5, 0.5]);

        let single = Table(1, |c: Coalition| c.contains(0));
        for seed in 0..5 {
            let est = shapley_sampled(&single, 10, seed);
            assert_eq!(est.mean, vec![1.0]);
            assert_eq!(est.half_width, vec![0.0]);
        }
    }

    #[test]
    fn coalition_order() {
        let got: Vec<u64> = coalitions_without(4, 1).map(|c| c.0).collect();
        assert_eq!(got, vec![0, 1, 4, 8, 5, 9, 12, 13]);
    }

    #[test]
    fn backward_examples() {
        let ts = train_station();
        let sig = station_signature();
        let cex = find_counterexample(&ts).unwrap();
        let empty = Signature {
            actors: vec![Actor {
                name: "all".into(),
                states: (0..9).collect(),
            }],
            aux: vec![],
            adv: vec![],
        };
        let g = build_backward_game(&ts, &empty, &cex, Coalition::EMPTY).unwrap();
        for w in cex.path.windows(2) {
            assert_eq!(g.successors(w[0]), &[w[1]]);
        }
        assert!(!crate::game::value(&g));
        let oracle = CoalitionOracle::backward(&ts, &empty, &cex).unwrap();
        assert!(!oracle.gamma(Coalition::EMPTY));
        let full = build_backward_game(&ts, &empty, &cex, Coalition::full(1)).unwrap();
        assert_eq!(full, build_forward_game(&ts, &empty, Coalition::full(1)));

        // Along s0 s1 s4 bad, A can leave the path at s0 or s1.
        let bw = CoalitionOracle::backward(&ts, &sig, &cex).unwrap();
        let exact = shapley_exact(&bw, 30).unwrap();
        assert!(bw.gamma(Coalition::singleton(0)));
        assert!(bw.gamma(Coalition::singleton(2)));
        assert_eq!(exact.values, shapley_by_definition(&bw));
        assert!(build_backward_game(&ts, &sig, &Counterexample { path: vec![0, 1] }, Coalition::EMPTY)
            .is_err());
    }

    /// A random transition system with a random signature.
    #[derive(Debug, Clone)]
    pub(crate) struct Instance {
        pub ts: Lts,
        pub sig: Signature,
    }

    pub(crate) fn arb_instance(
        max_states: usize,
        max_actors: usize,
        with_aux_adv: bool,
    ) -> impl Strategy<Value = Instance> {
        (3..=max_states, 1..=max_actors).prop_flat_map(move |(n, m)| {
            let m = m.min(n);
            (
                prop::collection::vec((0..n as StateId, 0..n as StateId), n..3 * n),
                prop::collection::vec(prop::bool::weighted(0.08), n),
                prop::collection::vec(0..m as u32 + if with_aux_adv { 2 } else { 0 }, n),
            )
                .prop_map(move |(edges, bad, owner)| {
                    let mut b = LtsBuilder::new(n, 0);
                    for (s, t) in edges {
                        b.add_edge(s, t, "a");
                    }
                    for (s, &x) in bad.iter().enumerate() {
                        if x && s != 0 {
                            b.set_bad(s as StateId);
                        }
                    }
                    let mut sig = Signature {
                        actors: (0..m)
                            .map(|i| Actor {
                                name: format!("a{i}"),
                                states: vec![],
                            })
                            .collect(),
                        aux: vec![],
                        adv: vec![],
                    };
                    for (s, &o) in owner.iter().enumerate() {
                        let s = s as StateId;
                        match o as usize {
                            o if o < m => sig.actors[o].states.push(s),
                            o if o == m => sig.aux.push(s),
                            _ => sig.adv.push(s),
                        }
                    }
                    sig.actors.retain(|a| !a.states.is_empty());
                    Instance { ts: b.build(), sig }
                })
        })
    }

    fn naive_gamma(ts: &Lts, sig: &Signature, c: Coalition) -> bool {
        let g = build_forward_game(ts, sig, c);
        naive_safe_wins(&g)[g.initial() as usize]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn exact_properties(inst in arb_instance(40, 6, true)) {
            let oracle = CoalitionOracle::forward(&inst.ts, &inst.sig).unwrap();
            let n = oracle.players();
            let exact = shapley_exact(&oracle, 30).unwrap();
            // efficiency
            let total: BigRational = exact.values.iter().sum();
            let expected = exact.gamma_full() as i64 - exact.gamma_empty() as i64;
            prop_assert_eq!(total, q(expected, 1));
            // dual route
            prop_assert_eq!(&exact.values, &shapley_by_definition(&oracle));
            prop_assert_eq!(oracle.coalitions_evaluated(), 1u64 << n);
            for a in 0..n {
                let v = &exact.values[a];
                prop_assert!(*v >= q(0, 1) && *v <= q(1, 1));
                let (pos, w) = positivity(&oracle, a, 30).unwrap();
                prop_assert_eq!(pos, !v.is_zero());
                prop_assert_eq!(w, exact.witnesses[a]);
            }
            for c in 0..1u64 << n {
                let c = Coalition(c);
                prop_assert_eq!(exact.table.get(c), naive_gamma(&inst.ts, &inst.sig, c));
                for a in 0..n {
                    prop_assert!(!exact.table.get(c) || exact.table.get(c.with(a)));
                }
            }
        }

        #[test]
        fn symmetric_actors_share_value(inst in arb_instance(30, 5, false)) {
            let oracle = CoalitionOracle::forward(&inst.ts, &inst.sig).unwrap();
            let n = oracle.players();
            let exact = shapley_exact(&oracle, 30).unwrap();
            let swap = |c: Coalition, a: usize, b: usize| {
                let mut d = c.without(a).without(b);
                if c.contains(a) { d = d.with(b); }
                if c.contains(b) { d = d.with(a); }
                d
            };
            for a in 0..n {
                for b in a + 1..n {
                    let symmetric = (0..1u64 << n)
                        .all(|c| exact.table.get(Coalition(c)) == exact.table.get(swap(Coalition(c), a, b)));
                    if symmetric {
                        prop_assert_eq!(&exact.values[a], &exact.values[b]);
                    }
                }
            }
        }

        #[test]
        fn backward_matches_forward_at_full_coalition(inst in arb_instance(40, 6, false)) {
            if let Some(cex) = find_counterexample(&inst.ts) {
                let fw = CoalitionOracle::forward(&inst.ts, &inst.sig).unwrap();
                let bw = CoalitionOracle::backward(&inst.ts, &inst.sig, &cex).unwrap();
                let full = Coalition::full(fw.players());
                prop_assert_eq!(fw.gamma(full), bw.gamma(full));
                let exact = shapley_exact(&bw, 30).unwrap();
                prop_assert!(!exact.gamma_empty());
                let total: BigRational = exact.values.iter().sum();
                prop_assert_eq!(total, q(exact.gamma_full() as i64, 1));
                for c in 0..1u64 << bw.players() {
                    let g = build_backward_game(&inst.ts, &inst.sig, &cex, Coalition(c)).unwrap();
                    prop_assert_eq!(bw.gamma(Coalition(c)), naive_safe_wins(&g)[g.initial() as usize]);
                }
            }
        }

        #[test]
        fn sampled_is_deterministic_and_close(inst in arb_instance(20, 4, true), seed in any::<u64>()) {
            let oracle = CoalitionOracle::forward(&inst.ts, &inst.sig).unwrap();
            let est = shapley_sampled(&oracle, 2000, seed);
            prop_assert_eq!(&est, &shapley_sampled(&oracle, 2000, seed));
            let exact = shapley_exact(&oracle, 30).unwrap();
            for (m, v) in est.mean.iter().zip(&exact.values) {
                prop_assert!((m - v.to_f64().unwrap()).abs() < 0.1);
            }
        }
    }
}
