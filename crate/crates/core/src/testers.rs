//! Canonical, tolerant and piecewise-canonical testers, the two piecewise
//! samplers, the constructions between tester classes, and the sample-based
//! test for earthmover-resilient string properties.
//!
//! A tester never sees the input directly: a driver draws its query, reads
//! the induced values (the "key") and hands only those back.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use num_traits::{One, ToPrimitive, Zero};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{capacity, param, Error, Result};
use crate::math::{binomial, int, pairs, ratio, to_f64, trial_rng, wilson, Combinations, Rational};
use crate::metrics::{half_l1, structure_statistic, DistributionVector, QMode};
use crate::properties::Property;
use crate::structures::{
    apply_permutation, encode_base_graph, pair_index, IntervalPartition, OrderedGraph, OrderedString,
    OrderedStructure, Permutation, StructureKind, Symbol,
};

/// How a key is laid out: one value per queried element (strings) or one per
/// queried pair in pair order (graphs, and images through their encoding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Entries,
    Pairs,
}

impl KeyKind {
    pub fn of(kind: StructureKind) -> Self {
        match kind {
            StructureKind::String => KeyKind::Entries,
            _ => KeyKind::Pairs,
        }
    }

    pub fn key_len(self, q: usize) -> usize {
        match self {
            KeyKind::Entries => q,
            KeyKind::Pairs => pairs(q),
        }
    }

    /// Key of the elements `idx` (list order) inside a key over `total` elements.
    pub fn sub_key(self, key: &[Symbol], total: usize, idx: &[usize]) -> Vec<Symbol> {
        match self {
            KeyKind::Entries => idx.iter().map(|&i| key[i]).collect(),
            KeyKind::Pairs => {
                let mut out = Vec::with_capacity(pairs(idx.len()));
                for a in 0..idx.len() {
                    for b in a + 1..idx.len() {
                        let (u, v) = (idx[a].min(idx[b]), idx[a].max(idx[b]));
                        out.push(key[pair_index(total, u, v)]);
                    }
                }
                out
            }
        }
    }
}

/// What a tester queries: strings and graphs as they are, images through the
/// base graph encoding.
pub fn queryable(f: &OrderedStructure) -> OrderedStructure {
    match f {
        OrderedStructure::Image(img) => OrderedStructure::Graph(encode_base_graph(img)),
        other => other.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionTable {
    Deterministic(Vec<bool>),
    /// Per-key accept probabilities, resolved by a coin flip each time.
    Probabilistic(Vec<f64>),
}

const MAX_TABLE: usize = 1 << 22;

/// Accept/reject decision on every q-element key.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTest {
    q: usize,
    sigma: usize,
    kind: KeyKind,
    table: DecisionTable,
}

fn table_size(q: usize, sigma: usize, kind: KeyKind) -> Result<usize> {
    let len = kind.key_len(q) as u32;
    match sigma.checked_pow(len) {
        Some(s) if s <= MAX_TABLE => Ok(s),
        _ => capacity(format!("decision table over {sigma}^{len} keys is too large")),
    }
}

impl CanonicalTest {
    pub fn new(q: usize, sigma: usize, kind: KeyKind, table: DecisionTable) -> Result<Self> {
        if q == 0 || sigma == 0 {
            return param("canonical test needs q >= 1 and a nonempty alphabet");
        }
        let size = table_size(q, sigma, kind)?;
        let len = match &table {
            DecisionTable::Deterministic(v) => v.len(),
            DecisionTable::Probabilistic(v) => {
                if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return param("accept probabilities must lie in [0, 1]");
                }
                v.len()
            }
        };
        if len != size {
            return param(format!("decision table has {len} entries, expected {size}"));
        }
        Ok(CanonicalTest {
            q,
            sigma,
            kind,
            table,
        })
    }

    pub fn from_fn(
        q: usize,
        sigma: usize,
        kind: KeyKind,
        mut accept: impl FnMut(&[Symbol]) -> bool,
    ) -> Result<Self> {
        let size = table_size(q, sigma, kind)?;
        let len = kind.key_len(q);
        let table = (0..size)
            .map(|r| accept(&key_of_rank(r, sigma, len)))
            .collect();
        CanonicalTest::new(q, sigma, kind, DecisionTable::Deterministic(table))
    }

    pub fn accept_all(q: usize, sigma: usize, kind: KeyKind) -> Result<Self> {
        CanonicalTest::from_fn(q, sigma, kind, |_| true)
    }

    /// Binary table whose bit r says whether the key of rank r is accepted.
    pub fn from_mask(q: usize, sigma: usize, kind: KeyKind, mask: u64) -> Result<Self> {
        let size = table_size(q, sigma, kind)?;
        if size > 64 {
            return capacity("mask tables hold at most 64 keys");
        }
        let table = (0..size).map(|r| mask >> r & 1 == 1).collect();
        CanonicalTest::new(q, sigma, kind, DecisionTable::Deterministic(table))
    }

    /// Accepts exactly the keys that, read as a q-element structure, satisfy `p`.
    pub fn from_property(p: &dyn Property, q: usize, sigma: usize) -> Result<Self> {
        let kind = match p.kind() {
            StructureKind::String => KeyKind::Entries,
            StructureKind::Graph => KeyKind::Pairs,
            StructureKind::Image => {
                return Err(Error::Capability(format!(
                    "{}: image keys are graphs on base elements and are not images",
                    p.name()
                )))
            }
        };
        let mut bad = None;
        let test = CanonicalTest::from_fn(q, sigma, kind, |key| {
            let f: Result<OrderedStructure> = match kind {
                KeyKind::Entries => OrderedString::new(key.to_vec(), sigma).map(Into::into),
                KeyKind::Pairs => OrderedGraph::new(q, key.to_vec(), sigma).map(Into::into),
            };
            match f {
                Ok(f) => p.contains(&f),
                Err(e) => {
                    bad = Some(e);
                    false
                }
            }
        })?;
        match bad {
            Some(e) => Err(e),
            None => Ok(test),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn kind(&self) -> KeyKind {
        self.kind
    }

    pub fn table(&self) -> &DecisionTable {
        &self.table
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.table, DecisionTable::Deterministic(_))
    }

    pub fn rank(&self, key: &[Symbol]) -> usize {
        key.iter()
            .fold(0usize, |acc, &s| acc * self.sigma + s as usize)
    }

    pub fn accept_probability(&self, key: &[Symbol]) -> f64 {
        let r = self.rank(key);
        match &self.table {
            DecisionTable::Deterministic(v) => f64::from(u8::from(v[r])),
            DecisionTable::Probabilistic(v) => v[r],
        }
    }

    pub fn accepts(&self, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool {
        let r = self.rank(key);
        match &self.table {
            DecisionTable::Deterministic(v) => v[r],
            DecisionTable::Probabilistic(v) => rng.gen_bool(v[r]),
        }
    }

    /// Σ over accepted q-keys H of t(H, f), from the exact q-statistic.
    pub fn exact_acceptance(&self, f: &OrderedStructure) -> Result<Rational> {
        let DecisionTable::Deterministic(table) = &self.table else {
            return param("exact acceptance needs a deterministic table");
        };
        self.check_input(f)?;
        let stat = structure_statistic(f, self.q, QMode::Plain)?;
        Ok(stat
            .weights
            .iter()
            .filter(|(k, _)| table[self.rank(k)])
            .map(|(_, w)| *w)
            .sum())
    }

    fn check_input(&self, f: &OrderedStructure) -> Result<()> {
        let (sigma, kind) = match f {
            OrderedStructure::Image(img) => (img.sigma() + 1, KeyKind::Pairs),
            other => (other.sigma(), KeyKind::of(other.kind())),
        };
        if sigma != self.sigma || kind != self.kind {
            return param(format!(
                "test over {} symbols ({:?}) given a structure over {} ({:?})",
                self.sigma, self.kind, sigma, kind
            ));
        }
        if self.q > f.base_len() {
            return param(format!("q = {} exceeds n = {}", self.q, f.base_len()));
        }
        Ok(())
    }
}

fn key_of_rank(mut r: usize, sigma: usize, len: usize) -> Vec<Symbol> {
    let mut key = vec![0; len];
    for slot in key.iter_mut().rev() {
        *slot = (r % sigma) as Symbol;
        r /= sigma;
    }
    key
}

#[derive(Debug, Clone, PartialEq)]
pub struct TesterReport {
    pub tester: String,
    pub n: usize,
    pub q: usize,
    pub trials: u64,
    pub accepts: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

impl TesterReport {
    pub fn new(tester: String, n: usize, q: usize, trials: u64, accepts: u64, seed: u64) -> Self {
        let (ci_lo, ci_hi) = wilson(accepts, trials);
        TesterReport {
            tester,
            n,
            q,
            trials,
            accepts,
            rate: accepts as f64 / trials.max(1) as f64,
            ci_lo,
            ci_hi,
            seed,
        }
    }

    /// Binomial standard error of the rate.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials.max(1) as f64).sqrt()
    }
}

/// A sorted set of queried base elements, grouped as the tester needs
/// (indices into `positions`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub positions: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

/// A non-adaptive tester that exposes its query distribution and its decision
/// on the answers.
pub trait QueryTester: Send + Sync {
    fn name(&self) -> String;
    fn key_kind(&self) -> KeyKind;
    /// Largest number of distinct elements one query may contain.
    fn query_count(&self) -> usize;
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Query>;
    /// `key` holds the values induced on `query.positions`.
    fn decide(&self, query: &Query, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool;
}

fn uniform_subset(n: usize, q: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if q > n {
        return param(format!("cannot choose {q} of {n} elements"));
    }
    let mut s = index::sample(rng, n, q).into_vec();
    s.sort_unstable();
    Ok(s)
}

impl QueryTester for CanonicalTest {
    fn name(&self) -> String {
        format!("canonical(q={})", self.q)
    }

    fn key_kind(&self) -> KeyKind {
        self.kind
    }

    fn query_count(&self) -> usize {
        self.q
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Query> {
        Ok(Query {
            positions: uniform_subset(n, self.q, rng)?,
            groups: vec![(0..self.q).collect()],
        })
    }

    fn decide(&self, _query: &Query, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool {
        self.accepts(key, rng)
    }
}

fn tally<F>(trials: u64, seed: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut trial_rng(seed, t)))
        .collect();
    let mut accepts = 0;
    for o in outcomes {
        accepts += u64::from(o?);
    }
    Ok(accepts)
}

/// Runs any query tester `trials` times on f.
pub fn run_tester(
    f: &OrderedStructure,
    tester: &dyn QueryTester,
    trials: u64,
    seed: u64,
) -> Result<TesterReport> {
    let source = queryable(f);
    let n = source.base_len();
    if KeyKind::of(source.kind()) != tester.key_kind() {
        return param("tester key layout does not match the structure");
    }
    let accepts = tally(trials, seed, |rng| {
        let query = tester.draw(n, rng)?;
        let key = source.induced_key(&query.positions);
        Ok(tester.decide(&query, &key, rng))
    })?;
    Ok(TesterReport::new(tester.name(), n, tester.query_count(), trials, accepts, seed))
}

pub fn run_canonical(
    f: &OrderedStructure,
    test: &CanonicalTest,
    trials: u64,
    seed: u64,
) -> Result<TesterReport> {
    test.check_input(f)?;
    run_tester(f, test, trials, seed)
}

// ---------------------------------------------------------------- tolerant

/// Majority vote over independent runs of a deterministic canonical test.
#[derive(Debug, Clone, PartialEq)]
pub struct TolerantCanonical {
    pub base: CanonicalTest,
    pub repetitions: usize,
}

/// Pr[Bin(reps, p) > reps/2], exactly.
pub fn majority_acceptance(p: Rational, reps: usize) -> Rational {
    let mut total = Rational::zero();
    let one_minus = Rational::one() - p;
    for j in reps / 2 + 1..=reps {
        let c = int(binomial(reps as u64, j as u64) as i128);
        total += c * pow(p, j) * pow(one_minus, reps - j);
    }
    total
}

fn pow(x: Rational, e: usize) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * x)
}

/// Turns a canonical test into the 9-fold majority tester, which tolerates
/// inputs δ-earthmover-close to the property.
pub fn canonical_to_tolerant(test: CanonicalTest) -> Result<TolerantCanonical> {
    if !test.is_deterministic() {
        return param("canonical_to_tolerant needs a deterministic decision table");
    }
    if test.q < 2 {
        return param("q >= 2 is needed for a resilience bound");
    }
    Ok(TolerantCanonical {
        base: test,
        repetitions: 9,
    })
}

impl TolerantCanonical {
    /// δ = 1 / (20·C(q,2)).
    pub fn delta(&self) -> Rational {
        ratio(1, 20 * pairs(self.base.q) as i128)
    }

    pub fn exact_acceptance(&self, f: &OrderedStructure) -> Result<Rational> {
        Ok(majority_acceptance(
            self.base.exact_acceptance(f)?,
            self.repetitions,
        ))
    }
}

impl QueryTester for TolerantCanonical {
    fn name(&self) -> String {
        format!("tolerant(q={},x{})", self.base.q, self.repetitions)
    }

    fn key_kind(&self) -> KeyKind {
        self.base.kind
    }

    fn query_count(&self) -> usize {
        self.base.q * self.repetitions
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Query> {
        let runs: Vec<Vec<usize>> = (0..self.repetitions)
            .map(|_| uniform_subset(n, self.base.q, rng))
            .collect::<Result<_>>()?;
        let mut positions: Vec<usize> = runs.iter().flatten().copied().collect();
        positions.sort_unstable();
        positions.dedup();
        let groups = runs
            .iter()
            .map(|run| {
                run.iter()
                    .map(|v| positions.binary_search(v).expect("present"))
                    .collect()
            })
            .collect();
        Ok(Query { positions, groups })
    }

    fn decide(&self, query: &Query, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool {
        let total = query.positions.len();
        let votes = query
            .groups
            .iter()
            .filter(|g| {
                self.base
                    .accepts(&self.base.kind.sub_key(key, total, g), rng)
            })
            .count();
        votes > self.repetitions / 2
    }
}

// ---------------------------------------------------------------- piecewise

/// A piecewise query: per-interval counts plus whatever the tester keeps for
/// its decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedQuery {
    pub counts: Vec<usize>,
    /// Query of an underlying tester, if the plan came from one.
    pub inner: Option<Query>,
    /// For each element of `inner`, its index in the sorted piecewise sample.
    pub slots: Vec<usize>,
}

pub trait PiecewiseTester: Send + Sync {
    fn name(&self) -> String;
    fn key_kind(&self) -> KeyKind;
    /// Number of intervals k.
    fn parts(&self) -> usize;
    /// Upper bound on Σ q_j.
    fn max_queries(&self) -> usize;
    fn plan(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<PlannedQuery>;
    /// `key` holds the values induced on the sorted union of the per-interval samples.
    fn decide(&self, planned: &PlannedQuery, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool;
}

/// Union of independent uniform q_j-subsets of the k intervals.
pub fn piecewise_sample(n: usize, counts: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let parts = IntervalPartition::new(n, counts.len())?;
    let mut out = Vec::with_capacity(counts.iter().sum());
    for (j, &q) in counts.iter().enumerate() {
        let size = parts.size(j);
        if q > size {
            return param(format!("plan asks {q} elements from interval {j} of size {size}"));
        }
        let start = parts.range(j).start;
        out.extend(uniform_subset(size, q, rng)?.into_iter().map(|v| v + start));
    }
    Ok(out)
}

fn check_simulated(n: usize, counts: &[usize], t: usize) -> Result<()> {
    if counts.is_empty() {
        return param("plan has no parts");
    }
    if let Some(&m) = counts.iter().max() {
        if m > t {
            return param(format!("block size t = {t} is below the largest count {m}"));
        }
    }
    let tk = t
        .checked_mul(counts.len())
        .ok_or_else(|| Error::Parameter("tk overflows".into()))?;
    if tk > n {
        return param(format!("tk = {tk} exceeds n = {n}"));
    }
    Ok(())
}

/// A uniform sorted `size`-subset of 0..n, read through its ranks: returns
/// the elements of the given (sorted) ranks. Samples the complement when the
/// subset is most of 0..n.
fn ranks_of_uniform_subset(
    n: usize,
    size: usize,
    ranks: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    if 2 * size <= n {
        let mut w = index::sample(rng, n, size).into_vec();
        w.sort_unstable();
        ranks.iter().map(|&r| w[r]).collect()
    } else {
        let mut holes = index::sample(rng, n, n - size).into_vec();
        holes.sort_unstable();
        ranks
            .iter()
            .map(|&r| {
                let mut v = r;
                for &h in &holes {
                    if h <= v {
                        v += 1;
                    } else {
                        break;
                    }
                }
                v
            })
            .collect()
    }
}

fn block_ranks(counts: &[usize], t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let mut ranks = Vec::with_capacity(counts.iter().sum());
    for (j, &q) in counts.iter().enumerate() {
        ranks.extend(uniform_subset(t, q, rng)?.into_iter().map(|r| r + j * t));
    }
    Ok(ranks)
}

/// Draws tk uniform indices, cuts their sorted order into k blocks of t and
/// picks q_j uniform elements of block j.
pub fn simulated_piecewise_sample(
    n: usize,
    counts: &[usize],
    t: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    check_simulated(n, counts, t)?;
    let tk = t * counts.len();
    // the block ranks are independent of the tk-set, so either may be drawn first
    let ranks = block_ranks(counts, t, rng)?;
    Ok(ranks_of_uniform_subset(n, tk, &ranks, rng))
}

/// Exact output distribution of `piecewise_sample`.
pub fn piecewise_distribution(n: usize, counts: &[usize]) -> Result<BTreeMap<Vec<usize>, Rational>> {
    let parts = IntervalPartition::new(n, counts.len())?;
    let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut total: u128 = 1;
    for (j, &q) in counts.iter().enumerate() {
        if q > parts.size(j) {
            return param("infeasible plan");
        }
        let start = parts.range(j).start;
        let c: Vec<Vec<usize>> = Combinations::new(parts.size(j), q)
            .map(|s| s.into_iter().map(|v| v + start).collect())
            .collect();
        total *= c.len() as u128;
        choices.push(c);
    }
    if total > 5_000_000 {
        return capacity("piecewise support too large to enumerate");
    }
    let p = ratio(1, total as i128);
    let mut out = BTreeMap::new();
    product(&choices, 0, &mut Vec::new(), &mut |set| {
        out.insert(set.to_vec(), p);
    });
    Ok(out)
}

fn product(choices: &[Vec<Vec<usize>>], j: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if j == choices.len() {
        f(acc);
        return;
    }
    for c in &choices[j] {
        let len = acc.len();
        acc.extend_from_slice(c);
        product(choices, j + 1, acc, f);
        acc.truncate(len);
    }
}

/// Exact output distribution of `simulated_piecewise_sample`, by enumerating
/// every tk-set and every block choice.
pub fn simulated_distribution(
    n: usize,
    counts: &[usize],
    t: usize,
) -> Result<BTreeMap<Vec<usize>, Rational>> {
    check_simulated(n, counts, t)?;
    let k = counts.len();
    let sets = binomial(n as u64, (t * k) as u64);
    let inner: u128 = counts
        .iter()
        .map(|&q| binomial(t as u64, q as u64))
        .product();
    if sets * inner > 20_000_000 {
        return capacity("simulated support too large to enumerate");
    }
    let block_choices: Vec<Vec<Vec<usize>>> = counts
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            Combinations::new(t, q)
                .map(|s| s.into_iter().map(|r| r + j * t).collect())
                .collect()
        })
        .collect();
    let mut rank_sets = Vec::new();
    product(&block_choices, 0, &mut Vec::new(), &mut |s| rank_sets.push(s.to_vec()));
    let p = ratio(1, (sets * inner) as i128);
    let mut counts_map: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for w in Combinations::new(n, t * k) {
        for ranks in &rank_sets {
            let set: Vec<usize> = ranks.iter().map(|&r| w[r]).collect();
            *counts_map.entry(set).or_default() += 1;
        }
    }
    Ok(counts_map
        .into_iter()
        .map(|(s, c)| (s, p * int(c as i128)))
        .collect())
}

/// Exact variation distance between the simulated and the true piecewise
/// sample distributions.
pub fn simupiece_variation_exact(n: usize, counts: &[usize], t: usize) -> Result<Rational> {
    let a = simulated_distribution(n, counts, t)?;
    let b = piecewise_distribution(n, counts)?;
    Ok(half_l1(&a, &b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledVariation {
    pub estimate: f64,
    /// Plug-in standard deviation of the estimate.
    pub sigma: f64,
    pub trials: u64,
    pub bins: usize,
}

/// Monte Carlo estimate of the variation distance between the two samplers
/// over the coarsened statistic "bin of each sampled index" (bins of equal
/// width over 0..n).
pub fn simupiece_variation_sampled(
    n: usize,
    counts: &[usize],
    t: usize,
    trials: u64,
    bins: usize,
    seed: u64,
) -> Result<SampledVariation> {
    check_simulated(n, counts, t)?;
    if bins == 0 || bins > n {
        return param("need 1 <= bins <= n");
    }
    let coarsen = |s: &[usize]| -> Vec<u32> { s.iter().map(|&v| (v * bins / n) as u32).collect() };
    let draws: Vec<Result<(Vec<u32>, Vec<u32>)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = simulated_piecewise_sample(n, counts, t, &mut trial_rng(seed, 2 * i))?;
            let b = piecewise_sample(n, counts, &mut trial_rng(seed, 2 * i + 1))?;
            Ok((coarsen(&a), coarsen(&b)))
        })
        .collect();
    let mut ha: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    let mut hb: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for d in draws {
        let (a, b) = d?;
        *ha.entry(a).or_default() += 1;
        *hb.entry(b).or_default() += 1;
    }
    let m = trials.max(1) as f64;
    let mut keys: Vec<&Vec<u32>> = ha.keys().chain(hb.keys()).collect();
    keys.sort();
    keys.dedup();
    let (mut est, mut sigma) = (0.0, 0.0);
    for k in keys {
        let pa = ha.get(k).copied().unwrap_or(0) as f64 / m;
        let pb = hb.get(k).copied().unwrap_or(0) as f64 / m;
        est += (pa - pb).abs();
        sigma += ((pa * (1.0 - pa) + pb * (1.0 - pb)) / m).sqrt();
    }
    Ok(SampledVariation {
        estimate: est / 2.0,
        sigma: sigma / 2.0,
        trials,
        bins,
    })
}

/// A piecewise tester with a fixed plan and a table on the sampled key.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTester {
    pub counts: Vec<usize>,
    pub test: CanonicalTest,
}

impl PlanTester {
    pub fn new(counts: Vec<usize>, test: CanonicalTest) -> Result<Self> {
        if counts.iter().sum::<usize>() != test.q() {
            return param("plan total differs from the table's q");
        }
        Ok(PlanTester { counts, test })
    }

    /// Exact acceptance when the index set is drawn from `dist`.
    pub fn exact_acceptance(
        &self,
        f: &OrderedStructure,
        dist: &BTreeMap<Vec<usize>, Rational>,
    ) -> Result<Rational> {
        let DecisionTable::Deterministic(table) = self.test.table() else {
            return param("exact acceptance needs a deterministic table");
        };
        let source = queryable(f);
        Ok(dist
            .iter()
            .filter(|(set, _)| table[self.test.rank(&source.induced_key(set))])
            .map(|(_, p)| *p)
            .sum())
    }
}

impl PiecewiseTester for PlanTester {
    fn name(&self) -> String {
        format!("plan{:?}", self.counts)
    }

    fn key_kind(&self) -> KeyKind {
        self.test.kind()
    }

    fn parts(&self) -> usize {
        self.counts.len()
    }

    fn max_queries(&self) -> usize {
        self.test.q()
    }

    fn plan(&self, _n: usize, _rng: &mut ChaCha8Rng) -> Result<PlannedQuery> {
        Ok(PlannedQuery {
            counts: self.counts.clone(),
            inner: None,
            slots: vec![],
        })
    }

    fn decide(&self, _planned: &PlannedQuery, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool {
        self.test.accepts(key, rng)
    }
}

pub fn run_piecewise(
    f: &OrderedStructure,
    tester: &dyn PiecewiseTester,
    trials: u64,
    seed: u64,
) -> Result<TesterReport> {
    let source = queryable(f);
    let n = source.base_len();
    let accepts = tally(trials, seed, |rng| {
        let planned = tester.plan(n, rng)?;
        let sample = piecewise_sample(n, &planned.counts, rng)?;
        let key = source.induced_key(&sample);
        Ok(tester.decide(&planned, &key, rng))
    })?;
    Ok(TesterReport::new(tester.name(), n, tester.max_queries(), trials, accepts, seed))
}

/// k·C(⌈n/k⌉, 2) / C(n, 2) < 2/k: within-interval pairs are a small share.
pub fn mixing_condition(n: usize, k: usize) -> bool {
    let s = n.div_ceil(k);
    ((k * k) as u128 * pairs(s) as u128) < 2 * pairs(n) as u128
}

/// Piecewise tester built from a tolerant tester: draw the tester's query,
/// count it per interval, sample that many uniform elements per interval and
/// answer through a uniform bijection inside each interval.
pub struct TolerantToPiecewise<T: QueryTester> {
    pub inner: T,
    pub k: usize,
    warned: AtomicBool,
}

impl<T: QueryTester> TolerantToPiecewise<T> {
    pub fn new(inner: T, k: usize) -> Result<Self> {
        if k == 0 {
            return param("k must be positive");
        }
        Ok(TolerantToPiecewise {
            inner,
            k,
            warned: AtomicBool::new(false),
        })
    }

    /// k = ⌈2 / δ(η(ε/2))⌉.
    pub fn from_bounds(
        inner: T,
        delta: impl Fn(f64) -> f64,
        eta: impl Fn(f64) -> f64,
        eps: f64,
    ) -> Result<Self> {
        let d = delta(eta(eps / 2.0));
        if !(d > 0.0) {
            return param(format!("resilience bound must be positive, got {d}"));
        }
        let k = (2.0 / d).ceil();
        if k > 1e9 {
            return param("k is unreasonably large");
        }
        TolerantToPiecewise::new(inner, k as usize)
    }
}

impl<T: QueryTester> PiecewiseTester for TolerantToPiecewise<T> {
    fn name(&self) -> String {
        format!("piecewise[{}](k={})", self.inner.name(), self.k)
    }

    fn key_kind(&self) -> KeyKind {
        self.inner.key_kind()
    }

    fn parts(&self) -> usize {
        self.k
    }

    fn max_queries(&self) -> usize {
        self.inner.query_count()
    }

    fn plan(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<PlannedQuery> {
        if !mixing_condition(n, self.k) && !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "n = {n} is too small for k = {}: within-interval pairs are not below 2/k",
                self.k
            );
        }
        let x = self.inner.draw(n, rng)?;
        let parts = IntervalPartition::new(n, self.k)?;
        let mut counts = vec![0usize; self.k];
        let owner: Vec<usize> = x.positions.iter().map(|&v| parts.part_of(v)).collect();
        for &j in &owner {
            counts[j] += 1;
        }
        // uniform bijection between X ∩ I_j and the sample's j-th run
        let mut offset = 0;
        let mut slots = vec![0usize; x.positions.len()];
        let mut a = 0;
        for &c in &counts {
            let mut perm: Vec<usize> = (0..c).collect();
            perm.shuffle(rng);
            for r in 0..c {
                slots[a + r] = offset + perm[r];
            }
            a += c;
            offset += c;
        }
        Ok(PlannedQuery {
            counts,
            inner: Some(x),
            slots,
        })
    }

    fn decide(&self, planned: &PlannedQuery, key: &[Symbol], rng: &mut ChaCha8Rng) -> bool {
        let x = planned.inner.as_ref().expect("plan carries the inner query");
        let total: usize = planned.counts.iter().sum();
        let answers = self.key_kind().sub_key(key, total, &planned.slots);
        self.inner.decide(x, &answers, rng)
    }
}

/// Reference for `TolerantToPiecewise`: shuffle f inside each interval, then
/// run the tester once.
pub fn shuffle_then_run(
    f: &OrderedStructure,
    tester: &dyn QueryTester,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<TesterReport> {
    let source = queryable(f);
    let n = source.base_len();
    let parts = IntervalPartition::new(n, k)?;
    let accepts = tally(trials, seed, |rng| {
        let mut map: Vec<usize> = (0..n).collect();
        for j in 0..k {
            map[parts.range(j)].shuffle(rng);
        }
        let shuffled = apply_permutation(&source, &Permutation::new(map)?)?;
        let query = tester.draw(n, rng)?;
        let key = shuffled.induced_key(&query.positions);
        Ok(tester.decide(&query, &key, rng))
    })?;
    Ok(TesterReport::new(
        format!("shuffle-then-{}", tester.name()),
        n,
        tester.query_count(),
        trials,
        accepts,
        seed,
    ))
}

/// Canonical tester simulating a piecewise one: kt uniform elements, blocked
/// into k sorted runs of t, standing in for the k intervals.
pub struct SimulatedCanonical<P: PiecewiseTester> {
    pub inner: P,
    pub t: usize,
}

/// 600·k⁴·q²·δ⁻³ with δ = 1/12.
pub fn default_block_size(k: usize, q: usize) -> Option<usize> {
    600usize
        .checked_mul(k.checked_pow(4)?)?
        .checked_mul(q.checked_mul(q)?)?
        .checked_mul(1728)
}

/// Wraps a piecewise tester as a canonical one.
pub fn piecewise_to_canonical<P: PiecewiseTester>(inner: P) -> Result<SimulatedCanonical<P>> {
    let t = default_block_size(inner.parts(), inner.max_queries())
        .ok_or_else(|| Error::Parameter("block size overflows".into()))?;
    Ok(SimulatedCanonical { inner, t })
}

impl<P: PiecewiseTester> SimulatedCanonical<P> {
    pub fn with_block_size(inner: P, t: usize) -> Result<Self> {
        if t < inner.max_queries() {
            return param("block size below the query count");
        }
        Ok(SimulatedCanonical { inner, t })
    }

    /// Number of vertices the canonical tester draws (kt).
    pub fn drawn(&self) -> usize {
        self.t * self.inner.parts()
    }

    /// Inputs below 10·kt are refused.
    pub fn min_input(&self) -> usize {
        self.drawn().saturating_mul(10)
    }

    pub fn run(&self, f: &OrderedStructure, trials: u64, seed: u64) -> Result<TesterReport> {
        let source = queryable(f);
        let n = source.base_len();
        if n < self.min_input() {
            return Err(Error::InputTooSmall(format!(
                "n = {n} is below 10·kt = {} (t = {}, k = {})",
                self.min_input(),
                self.t,
                self.inner.parts()
            )));
        }
        let accepts = tally(trials, seed, |rng| {
            let planned = self.inner.plan(n, rng)?;
            let sample = simulated_piecewise_sample(n, &planned.counts, self.t, rng)?;
            let key = source.induced_key(&sample);
            Ok(self.inner.decide(&planned, &key, rng))
        })?;
        Ok(TesterReport::new(
            format!("simulated[{}](t={})", self.inner.name(), self.t),
            n,
            self.drawn(),
            trials,
            accepts,
            seed,
        ))
    }
}

// ---------------------------------------------------------------- strings

/// Sample count m = ⌈C·|Σ|²·ln(1/τ')/ζ²⌉ with C = 1/2 and τ' = min(τ, (2|Σ|)^{-1/3}).
///
/// Hoeffding per symbol at deviation 2ζ/|Σ| plus a union bound needs
/// m ≥ |Σ|²·ln(2|Σ|/τ)/(8ζ²), which this m meets once τ' ≤ (2|Σ|)^{-1/3}.
pub fn sample_count(sigma: usize, zeta: f64, tau: f64) -> Result<u64> {
    if !(zeta > 0.0 && zeta < 1.0 && tau > 0.0 && tau < 1.0) {
        return param("need ζ, τ in (0, 1)");
    }
    let s = sigma as f64;
    let tau = tau.min((2.0 * s).powf(-1.0 / 3.0));
    Ok((0.5 * s * s * (1.0 / tau).ln() / (zeta * zeta)).ceil().max(1.0) as u64)
}

/// Empirical letter histogram of `m` uniform samples (with replacement).
pub fn estimate_distribution(
    values: &[Symbol],
    sigma: usize,
    zeta: f64,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DistributionVector> {
    if values.is_empty() {
        return param("cannot estimate the histogram of an empty interval");
    }
    let m = sample_count(sigma, zeta, tau)?;
    let mut counts = vec![0u64; sigma];
    for _ in 0..m {
        counts[values[rng.gen_range(0..values.len())] as usize] += 1;
    }
    DistributionVector::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringERResult {
    pub accept: bool,
    pub r: Rational,
    pub t: usize,
    pub samples: u64,
}

/// Number of parts t = ⌈1/(2δ(ε/2))⌉.
pub fn string_parts(eps: f64, delta: &dyn Fn(f64) -> f64) -> Result<usize> {
    let d = delta(eps / 2.0);
    if !(d > 0.0) {
        return param(format!("δ(ε/2) must be positive, got {d}"));
    }
    Ok((1.0 / (2.0 * d)).ceil() as usize)
}

/// Decision step with given histogram estimates: r = min over members of the
/// aggregated distance to the estimates; accept iff r ≤ ε/4.
pub fn string_er_decide(
    estimates: &[DistributionVector],
    parts: &IntervalPartition,
    p: &dyn Property,
    eps: f64,
) -> Result<(bool, Rational)> {
    let r = p.histogram_distance(estimates, parts).ok_or_else(|| {
        Error::Capability(format!("{} has no histogram oracle", p.name()))
    })?;
    Ok((to_f64(&r) <= eps / 4.0, r))
}

pub fn string_er_test(
    s: &OrderedString,
    p: &dyn Property,
    eps: f64,
    delta: &dyn Fn(f64) -> f64,
    seed: u64,
) -> Result<StringERResult> {
    if !p.capabilities().histogram_oracle {
        return Err(Error::Capability(format!("{} has no histogram oracle", p.name())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return param("ε must lie in (0, 1)");
    }
    let t = string_parts(eps, delta)?;
    if t > s.len() {
        return param(format!("t = {t} parts exceed the length {}", s.len()));
    }
    let parts = IntervalPartition::new(s.len(), t)?;
    let (zeta, tau) = (eps / 6.0, 1.0 / (3.0 * t as f64));
    let mut rng = crate::math::rng(seed);
    let estimates = (0..t)
        .map(|j| estimate_distribution(&s.entries()[parts.range(j)], s.sigma(), zeta, tau, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let (accept, r) = string_er_decide(&estimates, &parts, p, eps)?;
    Ok(StringERResult {
        accept,
        r,
        t,
        samples: sample_count(s.sigma(), zeta, tau)? * t as u64,
    })
}

impl std::fmt::Display for TesterReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {}/{} accepted ({:.4}, 95% CI [{:.4}, {:.4}])",
            self.tester, self.accepts, self.trials, self.rate, self.ci_lo, self.ci_hi
        )
    }
}

/// f64 view of an exact probability, for reports.
pub fn as_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng;
    use crate::properties::MonotoneString;

    fn graph(n: usize, seed: u64) -> OrderedGraph {
        let mut r = rng(seed);
        OrderedGraph::from_fn(n, 2, |_, _| r.gen_range(0..2)).unwrap()
    }

    #[test]
    fn accept_all_has_rate_one() {
        let g: OrderedStructure = graph(8, 1).into();
        let t = CanonicalTest::accept_all(3, 2, KeyKind::Pairs).unwrap();
        let rep = run_canonical(&g, &t, 200, 3).unwrap();
        assert_eq!(rep.accepts, 200);
        let tiny: OrderedStructure = graph(2, 1).into();
        assert!(run_canonical(&tiny, &t, 1, 0).is_err());
    }

    #[test]
    fn monochromatic_pair_test_matches_density() {
        // exactly half the pairs of each color
        let n = 8;
        let mut colors: Vec<Symbol> = (0..pairs(n)).map(|i| (i % 2) as Symbol).collect();
        colors.shuffle(&mut rng(2));
        let g: OrderedStructure = OrderedGraph::new(n, colors, 2).unwrap().into();
        let test = CanonicalTest::from_fn(2, 2, KeyKind::Pairs, |k| k[0] == 1).unwrap();
        let exact = test.exact_acceptance(&g).unwrap();
        assert_eq!(exact, ratio(1, 2));
        // a 95% interval misses now and then, so count coverage over seeds
        let covered = (0..20)
            .filter(|&seed| {
                let rep = run_canonical(&g, &test, 10_000, seed).unwrap();
                rep.ci_lo <= 0.5 && 0.5 <= rep.ci_hi
            })
            .count();
        assert!(covered >= 16, "{covered}/20");
    }

    #[test]
    fn tolerant_constants() {
        let t = canonical_to_tolerant(CanonicalTest::accept_all(2, 2, KeyKind::Pairs).unwrap()).unwrap();
        assert_eq!(t.delta(), ratio(1, 20));
        assert!(majority_acceptance(ratio(61, 100), 9) >= ratio(2, 3));
        assert!(majority_acceptance(ratio(1, 3), 9) <= ratio(1, 3));
        assert_eq!(t.query_count(), 18);
    }

    #[test]
    fn tolerant_sampling_matches_exact() {
        let g: OrderedStructure = graph(10, 4).into();
        let base = CanonicalTest::from_fn(3, 2, KeyKind::Pairs, |k| k.iter().filter(|&&c| c == 1).count() >= 2).unwrap();
        let tol = canonical_to_tolerant(base).unwrap();
        let exact = as_f64(&tol.exact_acceptance(&g).unwrap());
        let rep = run_tester(&g, &tol, 20_000, 8).unwrap();
        assert!((rep.rate - exact).abs() <= 4.0 * rep.std_error() + 1e-9, "{rep} vs {exact}");
    }

    #[test]
    fn piecewise_sample_edges() {
        let mut r = rng(0);
        assert_eq!(piecewise_sample(5, &[1; 5], &mut r).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(piecewise_sample(5, &[0, 0], &mut r).unwrap().is_empty());
        assert!(piecewise_sample(4, &[3, 0], &mut r).is_err());
    }

    #[test]
    fn simulated_sample_shapes() {
        let mut r = rng(1);
        for _ in 0..50 {
            let s = simulated_piecewise_sample(40, &[2, 1, 0], 5, &mut r).unwrap();
            assert_eq!(s.len(), 3);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
        // complement branch
        let s = simulated_piecewise_sample(12, &[1, 1], 5, &mut r).unwrap();
        assert_eq!(s.len(), 2);
        assert!(simulated_piecewise_sample(12, &[1, 1], 7, &mut r).is_err());
        assert!(simulated_piecewise_sample(12, &[3, 1], 2, &mut r).is_err());
    }

    #[test]
    fn k_one_simulation_is_uniform() {
        let a = simulated_distribution(7, &[3], 3).unwrap();
        let b = piecewise_distribution(7, &[3]).unwrap();
        assert_eq!(half_l1(&a, &b), Rational::zero());
        assert_eq!(a.len(), 35);
        let total: Rational = a.values().sum();
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn sampled_variation_small_at_k_one() {
        let v = simupiece_variation_sampled(50, &[2], 10, 20_000, 5, 3).unwrap();
        assert!(v.estimate <= 3.0 * v.sigma + 0.02, "{v:?}");
    }

    #[test]
    fn tolerant_to_piecewise_on_monochromatic_input() {
        let g: OrderedStructure = OrderedGraph::monochromatic(30, 1, 2).unwrap().into();
        let base = CanonicalTest::from_fn(3, 2, KeyKind::Pairs, |k| k[0] == 1).unwrap();
        let direct = run_tester(&g, &base, 500, 9).unwrap();
        let pw = TolerantToPiecewise::new(base, 3).unwrap();
        let rep = run_piecewise(&g, &pw, 500, 9).unwrap();
        assert_eq!(rep.accepts, direct.accepts);
    }

    #[test]
    fn simulated_canonical_refuses_small_inputs() {
        let test = CanonicalTest::accept_all(2, 2, KeyKind::Pairs).unwrap();
        let sim = piecewise_to_canonical(PlanTester::new(vec![1, 1], test).unwrap()).unwrap();
        assert_eq!(sim.t, 600 * 16 * 4 * 1728);
        let g: OrderedStructure = graph(20, 1).into();
        assert!(matches!(sim.run(&g, 10, 0), Err(Error::InputTooSmall(_))));
    }

    #[test]
    fn estimate_distribution_basics() {
        let mut r = rng(7);
        let d = estimate_distribution(&[1, 1, 1], 2, 0.5, 0.5, &mut r).unwrap();
        assert_eq!(d, DistributionVector::point_mass(2, 1));
        assert!(estimate_distribution(&[], 2, 0.1, 0.1, &mut r).is_err());
        assert!(sample_count(2, 0.0, 0.5).is_err());
    }

    #[test]
    fn string_er_test_exact_histograms_accept_members() {
        let p = MonotoneString::default();
        let s = OrderedString::from_bits(&"0".repeat(40).chars().chain("1".repeat(60).chars()).collect::<String>()).unwrap();
        let parts = IntervalPartition::new(100, 10).unwrap();
        let exact = crate::metrics::interval_histograms(&s, &parts).unwrap();
        let (accept, r) = string_er_decide(&exact, &parts, &p, 0.2).unwrap();
        assert!(accept);
        assert_eq!(r, Rational::zero());
        let res = string_er_test(&s, &p, 0.2, &|e| e * e / 2.0, 1).unwrap();
        assert!(res.accept);
        assert_eq!(res.t, 100);
    }
}
