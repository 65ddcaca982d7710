//! Hamming and earthmover distances, mixingness, variation distance,
//! q-statistics and distances to properties.
//!
//! Everything here is exact (rational arithmetic) except the functions whose
//! names end in `_sampled`.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{capacity, param, Error, Result};
use crate::limits;
use crate::math::{binomial, int, pairs, ratio, trial_rng, Combinations, Rational};
use crate::properties::Property;
use crate::structures::{
    apply_basic_move, encode_base_graph, IntervalPartition, OrderedGraph, OrderedString,
    OrderedStructure, Permutation, StructureKind, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceResult {
    Finite { absolute: u64, normalizer: u64 },
    Infinite,
}

impl DistanceResult {
    pub fn finite(absolute: u64, normalizer: u64) -> Self {
        DistanceResult::Finite {
            absolute,
            normalizer,
        }
    }

    pub fn absolute(&self) -> Option<u64> {
        match *self {
            DistanceResult::Finite { absolute, .. } => Some(absolute),
            DistanceResult::Infinite => None,
        }
    }

    /// absolute / normalizer; an empty normalizer counts as distance 0.
    pub fn relative(&self) -> Option<Rational> {
        match *self {
            DistanceResult::Finite {
                absolute,
                normalizer,
            } => Some(if normalizer == 0 {
                Rational::zero()
            } else {
                ratio(absolute as i128, normalizer as i128)
            }),
            DistanceResult::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DistanceResult::Infinite)
    }
}

impl fmt::Display for DistanceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceResult::Finite { absolute, .. } => {
                write!(f, "{absolute} ({})", self.relative().unwrap_or_default())
            }
            DistanceResult::Infinite => write!(f, "+inf"),
        }
    }
}

fn same_shape(f: &OrderedStructure, g: &OrderedStructure) -> Result<()> {
    if !f.same_shape(g) {
        return param(format!(
            "shape mismatch: {} {:?} over {} symbols vs {} {:?} over {} symbols",
            f.kind().name(),
            f.dims(),
            f.sigma(),
            g.kind().name(),
            g.dims(),
            g.sigma()
        ));
    }
    Ok(())
}

pub fn hamming(f: &OrderedStructure, g: &OrderedStructure) -> Result<DistanceResult> {
    same_shape(f, g)?;
    let diff = f
        .values()
        .iter()
        .zip(g.values())
        .filter(|(a, b)| a != b)
        .count();
    Ok(DistanceResult::finite(diff as u64, f.values().len() as u64))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixingSet {
    /// Inverted pairs (i, j), i < j, 0-based.
    pub pairs: Vec<(usize, usize)>,
    pub absolute: u64,
    pub relative: Rational,
}

impl MixingSet {
    pub fn pairs_one_based(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }
}

pub fn mixing_set(sigma: &Permutation) -> MixingSet {
    let s = sigma.as_slice();
    let mut found = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s[i] > s[j] {
                found.push((i, j));
            }
        }
    }
    let absolute = found.len() as u64;
    let norm = pairs(s.len()) as i128;
    MixingSet {
        pairs: found,
        absolute,
        relative: if norm == 0 {
            Rational::zero()
        } else {
            ratio(absolute as i128, norm)
        },
    }
}

/// Inversion count in O(n log n).
pub fn inversions(values: &[usize]) -> u64 {
    fn sort_count(v: &mut [usize], buf: &mut Vec<usize>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut count = sort_count(&mut v[..mid], buf) + sort_count(&mut v[mid..], buf);
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < n {
            if v[i] <= v[j] {
                buf.push(v[i]);
                i += 1;
            } else {
                buf.push(v[j]);
                count += (mid - i) as u64;
                j += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..]);
        v.copy_from_slice(buf);
        count
    }
    let mut v = values.to_vec();
    let mut buf = Vec::with_capacity(v.len());
    sort_count(&mut v, &mut buf)
}

fn check_permutation_cap(n: usize) -> Result<()> {
    let cap = limits::current().max_permutation_n;
    if n > cap {
        return capacity(format!(
            "breadth-first search is capped at n <= {cap} (got {n}); use mixing_set, which equals it"
        ));
    }
    Ok(())
}

/// Shortest number of adjacent swaps taking σ to the identity, by
/// breadth-first search over permutations.
pub fn min_basic_moves(sigma: &Permutation) -> Result<u64> {
    let n = sigma.len();
    check_permutation_cap(n)?;
    let start: Vec<u8> = sigma.as_slice().iter().map(|&v| v as u8).collect();
    let goal: Vec<u8> = (0..n as u8).collect();
    if start == goal {
        return Ok(0);
    }
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start, 0u64));
    while let Some((state, d)) = queue.pop_front() {
        for x in 0..n.saturating_sub(1) {
            let mut next = state.clone();
            next.swap(x, x + 1);
            if next == goal {
                return Ok(d + 1);
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    Err(Error::Parameter("identity unreachable".into()))
}

/// Basic-move distance from the identity to every permutation of 0..n.
pub fn basic_move_distances(n: usize) -> Result<HashMap<Vec<u8>, u32>> {
    check_permutation_cap(n)?;
    let start: Vec<u8> = (0..n as u8).collect();
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(start.clone(), 0u32);
    queue.push_back(start);
    while let Some(state) = queue.pop_front() {
        let d = dist[&state];
        for x in 0..n.saturating_sub(1) {
            let mut next = state.clone();
            next.swap(x, x + 1);
            if !dist.contains_key(&next) {
                dist.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    Ok(dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarthmoverMode {
    Exact,
    /// First isomorphism met by a lexicographic search; an upper bound only.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EarthmoverResult {
    pub distance: DistanceResult,
    /// An isomorphism σ with apply_permutation(f, σ) = f' achieving the distance.
    pub witness: Option<Permutation>,
    pub exact: bool,
}

const HEURISTIC_NODE_BUDGET: u64 = 5_000_000;

/// Minimum over unordered isomorphisms σ from f to f' of the number of
/// inverted pairs of σ. Strings are solved exactly for every length by the
/// order-preserving matching of equal symbols; graphs and images (through the
/// encoding) are searched under the permutation cap.
pub fn earthmover_distance(
    f: &OrderedStructure,
    g: &OrderedStructure,
    mode: EarthmoverMode,
) -> Result<EarthmoverResult> {
    same_shape(f, g)?;
    let norm = pairs(f.base_len()) as u64;
    match (f, g) {
        (OrderedStructure::String(a), OrderedStructure::String(b)) => {
            Ok(match string_matching(a, b) {
                Some(sigma) => EarthmoverResult {
                    distance: DistanceResult::finite(inversions(sigma.as_slice()), norm),
                    witness: Some(sigma),
                    exact: true,
                },
                None => EarthmoverResult {
                    distance: DistanceResult::Infinite,
                    witness: None,
                    exact: true,
                },
            })
        }
        (OrderedStructure::Graph(a), OrderedStructure::Graph(b)) => graph_earthmover(a, b, mode),
        (OrderedStructure::Image(a), OrderedStructure::Image(b)) => {
            graph_earthmover(&encode_base_graph(a), &encode_base_graph(b), mode)
        }
        _ => unreachable!("shapes checked above"),
    }
}

fn string_matching(a: &OrderedString, b: &OrderedString) -> Option<Permutation> {
    let sigma = a.sigma();
    let mut slots: Vec<VecDeque<usize>> = vec![VecDeque::new(); sigma];
    for (j, &s) in b.entries().iter().enumerate() {
        slots[s as usize].push_back(j);
    }
    let mut map = Vec::with_capacity(a.len());
    for &s in a.entries() {
        map.push(slots[s as usize].pop_front()?);
    }
    Permutation::new(map).ok()
}

fn color_profile(g: &OrderedGraph, v: usize) -> Vec<u32> {
    let mut p = vec![0u32; g.sigma()];
    for u in 0..g.n() {
        if u != v {
            p[g.color(u, v) as usize] += 1;
        }
    }
    p
}

struct IsoSearch<'a> {
    g: &'a OrderedGraph,
    h: &'a OrderedGraph,
    candidates: Vec<Vec<usize>>,
    assign: Vec<usize>,
    used: Vec<bool>,
    best: Option<(u64, Vec<usize>)>,
    minimize: bool,
    nodes: u64,
    budget: u64,
}

impl IsoSearch<'_> {
    fn run(&mut self, v: usize, cost: u64) -> bool {
        let n = self.g.n();
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if v == n {
            match &self.best {
                Some((b, _)) if *b <= cost => {}
                _ => self.best = Some((cost, self.assign.clone())),
            }
            return !self.minimize;
        }
        for ci in 0..self.candidates[v].len() {
            let t = self.candidates[v][ci];
            if self.used[t] {
                continue;
            }
            if (0..v).any(|u| self.g.color(u, v) != self.h.color(self.assign[u], t)) {
                continue;
            }
            let added = (0..v).filter(|&u| self.assign[u] > t).count() as u64;
            self.assign[v] = t;
            self.used[t] = true;
            let new_cost = cost + added;
            // inversions between placed and unplaced vertices are already fixed
            let cross: u64 = (0..n)
                .filter(|&r| !self.used[r])
                .map(|r| (0..=v).filter(|&u| self.assign[u] > r).count() as u64)
                .sum();
            let prune = self.minimize
                && matches!(&self.best, Some((b, _)) if new_cost + cross >= *b);
            if !prune && self.run(v + 1, new_cost) {
                return true;
            }
            self.used[t] = false;
            if self.nodes > self.budget {
                return false;
            }
        }
        false
    }
}

fn graph_earthmover(
    g: &OrderedGraph,
    h: &OrderedGraph,
    mode: EarthmoverMode,
) -> Result<EarthmoverResult> {
    let n = g.n();
    let norm = pairs(n) as u64;
    if mode == EarthmoverMode::Exact {
        check_permutation_cap(n)?;
    }
    let mut cg = vec![0usize; g.sigma()];
    let mut ch = vec![0usize; h.sigma()];
    g.colors().iter().for_each(|&c| cg[c as usize] += 1);
    h.colors().iter().for_each(|&c| ch[c as usize] += 1);
    let infinite = EarthmoverResult {
        distance: DistanceResult::Infinite,
        witness: None,
        exact: true,
    };
    if cg != ch {
        return Ok(infinite);
    }
    let hp: Vec<Vec<u32>> = (0..n).map(|t| color_profile(h, t)).collect();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let p = color_profile(g, v);
            (0..n).filter(|&t| hp[t] == p).collect()
        })
        .collect();
    let mut search = IsoSearch {
        g,
        h,
        candidates,
        assign: vec![0; n],
        used: vec![false; n],
        best: None,
        minimize: mode == EarthmoverMode::Exact,
        nodes: 0,
        budget: if mode == EarthmoverMode::Exact {
            u64::MAX
        } else {
            HEURISTIC_NODE_BUDGET
        },
    };
    search.run(0, 0);
    if mode == EarthmoverMode::Heuristic && search.best.is_none() && search.nodes > search.budget
    {
        return capacity("heuristic earthmover search exhausted its node budget");
    }
    Ok(match search.best {
        Some((cost, map)) => EarthmoverResult {
            distance: DistanceResult::finite(cost, norm),
            witness: Some(Permutation::new(map)?),
            exact: mode == EarthmoverMode::Exact,
        },
        None => infinite,
    })
}

/// Earthmover distance by breadth-first search over structures reachable by
/// basic moves. Independent of the isomorphism search; used to cross-check it.
pub fn earthmover_bfs(
    f: &OrderedStructure,
    g: &OrderedStructure,
    max_states: usize,
) -> Result<DistanceResult> {
    same_shape(f, g)?;
    let (start, goal) = match (f, g) {
        (OrderedStructure::Image(a), OrderedStructure::Image(b)) => (
            OrderedStructure::Graph(encode_base_graph(a)),
            OrderedStructure::Graph(encode_base_graph(b)),
        ),
        _ => (f.clone(), g.clone()),
    };
    let norm = pairs(start.base_len()) as u64;
    if start == goal {
        return Ok(DistanceResult::finite(0, norm));
    }
    let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
    seen.insert(start.values().to_vec());
    let mut queue = VecDeque::new();
    queue.push_back((start, 0u64));
    while let Some((s, d)) = queue.pop_front() {
        for x in 0..s.base_len() - 1 {
            let next = apply_basic_move(&s, x)?;
            if next == goal {
                return Ok(DistanceResult::finite(d + 1, norm));
            }
            if seen.insert(next.values().to_vec()) {
                if seen.len() > max_states {
                    return capacity(format!("structure search exceeded {max_states} states"));
                }
                queue.push_back((next, d + 1));
            }
        }
    }
    Ok(DistanceResult::Infinite)
}

/// A finite distribution over keys (symbol sequences) of a fixed universe.
pub trait Distribution {
    /// (alphabet size, key length): two distributions are comparable only
    /// when these agree.
    fn universe(&self) -> (usize, usize);
    fn masses(&self) -> BTreeMap<Vec<Symbol>, Rational>;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistributionVector {
    densities: Vec<Rational>,
}

impl DistributionVector {
    pub fn new(densities: Vec<Rational>) -> Result<Self> {
        if densities.is_empty() {
            return param("distribution over an empty alphabet");
        }
        if densities.iter().any(|d| *d < Rational::zero()) {
            return param("negative density");
        }
        let total: Rational = densities.iter().sum();
        if !total.is_one() {
            return param(format!("densities sum to {total}, not 1"));
        }
        Ok(DistributionVector { densities })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return param("no observations");
        }
        DistributionVector::new(
            counts
                .iter()
                .map(|&c| ratio(c as i128, total as i128))
                .collect(),
        )
    }

    /// Letter histogram T(S) of a symbol sequence.
    pub fn of_symbols(values: &[Symbol], sigma: usize) -> Result<Self> {
        let mut counts = vec![0u64; sigma];
        for &v in values {
            if v as usize >= sigma {
                return param("symbol outside alphabet");
            }
            counts[v as usize] += 1;
        }
        DistributionVector::from_counts(&counts)
    }

    pub fn point_mass(sigma: usize, s: Symbol) -> Self {
        let mut densities = vec![Rational::zero(); sigma];
        densities[s as usize] = Rational::one();
        DistributionVector { densities }
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn sigma(&self) -> usize {
        self.densities.len()
    }
}

impl Distribution for DistributionVector {
    fn universe(&self) -> (usize, usize) {
        (self.densities.len(), 1)
    }

    fn masses(&self) -> BTreeMap<Vec<Symbol>, Rational> {
        self.densities
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_zero())
            .map(|(s, d)| (vec![s as Symbol], *d))
            .collect()
    }
}

/// Half the L1 distance.
pub fn variation_distance<D: Distribution>(a: &D, b: &D) -> Result<Rational> {
    if a.universe() != b.universe() {
        return param(format!(
            "distributions over different universes {:?} and {:?}",
            a.universe(),
            b.universe()
        ));
    }
    Ok(half_l1(&a.masses(), &b.masses()))
}

pub(crate) fn half_l1<K: Ord>(a: &BTreeMap<K, Rational>, b: &BTreeMap<K, Rational>) -> Rational {
    let mut total = Rational::zero();
    for (k, pa) in a {
        let pb = b.get(k).copied().unwrap_or_default();
        total += if *pa > pb { pa - pb } else { pb - pa };
    }
    for (k, pb) in b {
        if !a.contains_key(k) {
            total += pb;
        }
    }
    total / int(2)
}

/// max over events F of |Pr_a(F) − Pr_b(F)|, by listing every event of the
/// joint support. Exponential; meant for cross-checking.
pub fn max_event_gap<D: Distribution>(a: &D, b: &D) -> Result<Rational> {
    if a.universe() != b.universe() {
        return param("distributions over different universes");
    }
    let (ma, mb) = (a.masses(), b.masses());
    let mut keys: Vec<&Vec<Symbol>> = ma.keys().chain(mb.keys()).collect();
    keys.sort();
    keys.dedup();
    if keys.len() > 20 {
        return capacity("event enumeration limited to 20 outcomes");
    }
    let gaps: Vec<Rational> = keys
        .iter()
        .map(|k| ma.get(*k).copied().unwrap_or_default() - mb.get(*k).copied().unwrap_or_default())
        .collect();
    let mut best = Rational::zero();
    for mask in 0u32..(1u32 << gaps.len()) {
        let mut s = Rational::zero();
        for (i, g) in gaps.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += g;
            }
        }
        let s = if s < Rational::zero() { -s } else { s };
        if s > best {
            best = s;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    Plain,
    /// Only q-sets with no two members in one part of the k-interval equipartition.
    KSeparated(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QStatistic {
    pub q: usize,
    pub sigma: usize,
    pub mode: QMode,
    /// Number of q-sets counted: C(n, q), or N(k, q, n) when k-separated.
    pub sets: u64,
    pub weights: BTreeMap<Vec<Symbol>, Rational>,
}

impl QStatistic {
    pub fn weight(&self, key: &[Symbol]) -> Rational {
        self.weights.get(key).copied().unwrap_or_default()
    }

    /// Total weight of the keys accepted by `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&[Symbol]) -> bool) -> Rational {
        self.weights
            .iter()
            .filter(|(k, _)| pred(k))
            .map(|(_, w)| *w)
            .sum()
    }
}

impl Distribution for QStatistic {
    fn universe(&self) -> (usize, usize) {
        (self.sigma, self.key_len())
    }

    fn masses(&self) -> BTreeMap<Vec<Symbol>, Rational> {
        self.weights.clone()
    }
}

impl QStatistic {
    fn key_len(&self) -> usize {
        self.weights.keys().next().map_or(pairs(self.q), Vec::len)
    }
}

fn check_q(n: usize, q: usize, mode: QMode) -> Result<Option<IntervalPartition>> {
    if q == 0 {
        return param("q must be at least 1");
    }
    if q > n {
        return param(format!("q = {q} exceeds n = {n}"));
    }
    match mode {
        QMode::Plain => Ok(None),
        QMode::KSeparated(k) => {
            if k < q {
                return param(format!("k = {k} is smaller than q = {q}"));
            }
            Ok(Some(IntervalPartition::new(n, k)?))
        }
    }
}

fn separated(parts: &Option<IntervalPartition>, set: &[usize]) -> bool {
    match parts {
        None => true,
        Some(p) => set.windows(2).all(|w| p.part_of(w[0]) != p.part_of(w[1])),
    }
}

/// Exact statistic of induced q-substructures of any structure (strings give
/// entry sequences, graphs pair-color sequences, images go through the encoding).
pub fn structure_statistic(f: &OrderedStructure, q: usize, mode: QMode) -> Result<QStatistic> {
    let n = f.base_len();
    let parts = check_q(n, q, mode)?;
    let total = binomial(n as u64, q as u64);
    let cap = limits::current().max_subset_enumeration;
    if total > cap as u128 {
        return capacity(format!("C({n},{q}) = {total} exceeds enumeration cap {cap}"));
    }
    let encoded;
    let source = match f {
        OrderedStructure::Image(img) => {
            encoded = OrderedStructure::Graph(encode_base_graph(img));
            &encoded
        }
        other => other,
    };
    let mut counts: BTreeMap<Vec<Symbol>, u64> = BTreeMap::new();
    let mut sets = 0u64;
    for set in Combinations::new(n, q) {
        if !separated(&parts, &set) {
            continue;
        }
        sets += 1;
        *counts.entry(source.induced_key(&set)).or_default() += 1;
    }
    let weights = counts
        .into_iter()
        .map(|(k, c)| (k, ratio(c as i128, sets as i128)))
        .collect();
    Ok(QStatistic {
        q,
        sigma: source.sigma(),
        mode,
        sets,
        weights,
    })
}

/// Exact q-statistic t(·, G), or the k-separated t_k(·, G).
pub fn q_statistic(g: &OrderedGraph, q: usize, mode: QMode) -> Result<QStatistic> {
    structure_statistic(&OrderedStructure::Graph(g.clone()), q, mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QEstimate {
    pub q: usize,
    pub trials: u64,
    pub counts: BTreeMap<Vec<Symbol>, u64>,
}

impl QEstimate {
    pub fn frequency(&self, key: &[Symbol]) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.trials.max(1) as f64
    }

    pub fn std_error(&self, key: &[Symbol]) -> f64 {
        let p = self.frequency(key);
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }
}

/// Monte Carlo q-statistic from `trials` uniform q-sets (rejection sampling
/// for the k-separated variant).
pub fn q_statistic_sampled(
    g: &OrderedGraph,
    q: usize,
    mode: QMode,
    trials: u64,
    seed: u64,
) -> Result<QEstimate> {
    let n = g.n();
    let parts = check_q(n, q, mode)?;
    let mut counts = BTreeMap::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let set = loop {
            let mut s = rand::seq::index::sample(&mut rng, n, q).into_vec();
            s.sort_unstable();
            if separated(&parts, &s) {
                break s;
            }
        };
        *counts.entry(g.induced_key(&set)).or_insert(0u64) += 1;
    }
    Ok(QEstimate { q, trials, counts })
}

fn exhaustive_bits(f: &OrderedStructure) -> u32 {
    let per = (f.sigma() as f64).log2().ceil().max(1.0) as u32;
    per * f.values().len() as u32
}

fn check_exhaustive_cap(f: &OrderedStructure) -> Result<()> {
    let cap = limits::current().max_exhaustive_bits;
    let bits = exhaustive_bits(f);
    if bits > cap {
        return capacity(format!(
            "exhaustive search over {bits} bits exceeds the {cap}-bit cap"
        ));
    }
    Ok(())
}

/// Relative Hamming distance to the nearest member, by searching members at
/// Hamming distance 0, 1, 2, ... from f.
pub fn exhaustive_distance(f: &OrderedStructure, p: &dyn Property) -> Result<Rational> {
    check_exhaustive_cap(f)?;
    let cells = f.values().len();
    let sigma = f.sigma();
    let base = f.values().to_vec();
    for d in 0..=cells {
        for positions in Combinations::new(cells, d) {
            let mut choice = vec![0usize; d];
            loop {
                let mut values = base.clone();
                for (slot, &pos) in positions.iter().enumerate() {
                    let alt = choice[slot] as Symbol;
                    values[pos] = if alt >= base[pos] { alt + 1 } else { alt };
                }
                if p.contains(&f.with_values(values)?) {
                    return Ok(ratio(d as i128, cells as i128));
                }
                let mut i = 0;
                while i < d {
                    choice[i] += 1;
                    if choice[i] < sigma - 1 {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
        }
    }
    param(format!("property {} has no member of this shape", p.name()))
}

pub fn distance_to_property(f: &OrderedStructure, p: &dyn Property) -> Result<Rational> {
    if f.kind() != p.kind() {
        return param(format!(
            "property {} is about {}s, got a {}",
            p.name(),
            p.kind().name(),
            f.kind().name()
        ));
    }
    if let Some(d) = p.distance_oracle(f) {
        return Ok(d);
    }
    exhaustive_distance(f, p)
}

/// Letter histograms T(S_1), ..., T(S_t) of the interval parts.
pub fn interval_histograms(
    s: &OrderedString,
    parts: &IntervalPartition,
) -> Result<Vec<DistributionVector>> {
    if parts.n() != s.len() {
        return param("partition size differs from string length");
    }
    (0..parts.k())
        .map(|j| DistributionVector::of_symbols(&s.entries()[parts.range(j)], s.sigma()))
        .collect()
}

/// Σ_i |targets_i − T(S'_i)| · |S_i| / |S|.
pub fn aggregated_against(
    targets: &[DistributionVector],
    s2: &OrderedString,
    parts: &IntervalPartition,
) -> Result<Rational> {
    let hist = interval_histograms(s2, parts)?;
    if hist.len() != targets.len() {
        return param("histogram count differs from part count");
    }
    let n = parts.n() as i128;
    let mut total = Rational::zero();
    for (j, (a, b)) in targets.iter().zip(&hist).enumerate() {
        total += variation_distance(a, b)? * ratio(parts.size(j) as i128, n);
    }
    Ok(total)
}

pub fn aggregated_distance(s: &OrderedString, s2: &OrderedString, t: usize) -> Result<Rational> {
    if s.len() != s2.len() || s.sigma() != s2.sigma() {
        return param("strings differ in length or alphabet");
    }
    if t == 0 || t > s.len() {
        return param(format!("need 1 <= t <= |S|, got t = {t}"));
    }
    let parts = IntervalPartition::new(s.len(), t)?;
    aggregated_against(&interval_histograms(s, &parts)?, s2, &parts)
}

/// min over members S' of the aggregated distance to `targets`, by
/// enumerating all strings of the length (capped like exhaustive_distance).
pub fn exhaustive_histogram_distance(
    targets: &[DistributionVector],
    parts: &IntervalPartition,
    sigma: usize,
    p: &dyn Property,
) -> Result<Rational> {
    let n = parts.n();
    let probe = OrderedStructure::String(OrderedString::new(vec![0; n], sigma)?);
    check_exhaustive_cap(&probe)?;
    let mut values = vec![0 as Symbol; n];
    let mut best: Option<Rational> = None;
    loop {
        let s = OrderedString::new(values.clone(), sigma)?;
        if p.contains(&OrderedStructure::String(s.clone())) {
            let d = aggregated_against(targets, &s, parts)?;
            if best.map_or(true, |b| d < b) {
                best = Some(d);
            }
        }
        let mut i = 0;
        while i < n {
            values[i] += 1;
            if (values[i] as usize) < sigma {
                break;
            }
            values[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    best.ok_or_else(|| Error::Parameter(format!("property {} has no member", p.name())))
}

/// d_A(S, P) with t parts, through the property's histogram oracle when it
/// has one.
pub fn aggregated_distance_to_property(
    s: &OrderedString,
    p: &dyn Property,
    t: usize,
) -> Result<Rational> {
    if p.kind() != StructureKind::String {
        return param("aggregated distance is defined for string properties");
    }
    if t == 0 || t > s.len() {
        return param(format!("need 1 <= t <= |S|, got t = {t}"));
    }
    let parts = IntervalPartition::new(s.len(), t)?;
    let targets = interval_histograms(s, &parts)?;
    if let Some(d) = p.histogram_distance(&targets, &parts) {
        return Ok(d);
    }
    exhaustive_histogram_distance(&targets, &parts, s.sigma(), p)
}

/// Uniformly random structure with the same shape; handy for tests and generators.
pub fn random_like<R: Rng>(f: &OrderedStructure, rng: &mut R) -> Result<OrderedStructure> {
    let sigma = f.sigma();
    let values = (0..f.values().len())
        .map(|_| rng.gen_range(0..sigma) as Symbol)
        .collect();
    f.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng;
    use crate::structures::Image;

    fn bits(s: &str) -> OrderedStructure {
        OrderedString::from_bits(s).unwrap().into()
    }

    #[test]
    fn hamming_examples() {
        let a = Alphabet3::get();
        let x: OrderedStructure = OrderedString::parse("aaa", &a).unwrap().into();
        let y: OrderedStructure = OrderedString::parse("aba", &a).unwrap().into();
        assert_eq!(hamming(&x, &x).unwrap(), DistanceResult::finite(0, 3));
        let d = hamming(&x, &y).unwrap();
        assert_eq!(d.absolute(), Some(1));
        assert_eq!(d.relative(), Some(ratio(1, 3)));
        let g = OrderedGraph::new(4, vec![0, 1, 1, 0, 1, 0], 2).unwrap();
        let d = hamming(&g.clone().into(), &g.complement().unwrap().into()).unwrap();
        assert_eq!(d, DistanceResult::finite(6, 6));
        assert!(hamming(&bits("01"), &bits("011")).is_err());
    }

    struct Alphabet3;
    impl Alphabet3 {
        fn get() -> crate::structures::Alphabet {
            crate::structures::Alphabet::new(["a", "b", "c"]).unwrap()
        }
    }

    #[test]
    fn mixing_set_examples() {
        assert_eq!(mixing_set(&Permutation::identity(5)).absolute, 0);
        let rev = Permutation::new(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(mixing_set(&rev).absolute, 6);
        let s = Permutation::from_one_based(&[2, 4, 1, 3]).unwrap();
        let ms = mixing_set(&s);
        assert_eq!(ms.pairs_one_based(), vec![(1, 3), (2, 3), (2, 4)]);
        assert_eq!(ms.absolute, 3);
        assert_eq!(ms.relative, ratio(1, 2));
    }

    #[test]
    fn fast_inversions_match_pairs() {
        let mut r = rng(4);
        for n in 0..30 {
            let mut v: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(&mut v[..], &mut r);
            let p = Permutation::new(v.clone()).unwrap();
            assert_eq!(inversions(&v), mixing_set(&p).absolute);
        }
    }

    #[test]
    fn bfs_small_cases() {
        assert_eq!(min_basic_moves(&Permutation::identity(4)).unwrap(), 0);
        assert_eq!(min_basic_moves(&Permutation::adjacent(5, 2).unwrap()).unwrap(), 1);
        assert!(matches!(
            min_basic_moves(&Permutation::identity(9)),
            Err(Error::Capacity(_))
        ));
        let table = basic_move_distances(4).unwrap();
        assert_eq!(table.len(), 24);
    }

    #[test]
    fn earthmover_strings() {
        let d = earthmover_distance(&bits("01"), &bits("01"), EarthmoverMode::Exact).unwrap();
        assert_eq!(d.distance.absolute(), Some(0));
        let d = earthmover_distance(&bits("01"), &bits("10"), EarthmoverMode::Exact).unwrap();
        assert_eq!(d.distance.absolute(), Some(1));
        let d = earthmover_distance(&bits("01"), &bits("00"), EarthmoverMode::Exact).unwrap();
        assert!(d.distance.is_infinite());
    }

    #[test]
    fn earthmover_graph_witness_maps_g_to_h() {
        let g = OrderedGraph::new(4, vec![1, 0, 0, 1, 0, 1], 2).unwrap();
        let s = Permutation::from_one_based(&[3, 1, 4, 2]).unwrap();
        let gs: OrderedStructure = g.clone().into();
        let h = crate::structures::apply_permutation(&gs, &s).unwrap();
        let r = earthmover_distance(&gs, &h, EarthmoverMode::Exact).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(crate::structures::apply_permutation(&gs, &w).unwrap(), h);
        assert!(r.distance.absolute().unwrap() <= mixing_set(&s).absolute);
        let bfs = earthmover_bfs(&gs, &h, 100_000).unwrap();
        assert_eq!(bfs, r.distance);
    }

    #[test]
    fn earthmover_images_through_encoding() {
        let a = Image::new(2, 2, vec![1, 0, 0, 0], 2).unwrap();
        let b = Image::new(2, 2, vec![0, 0, 0, 1], 2).unwrap();
        let r = earthmover_distance(&a.clone().into(), &b.clone().into(), EarthmoverMode::Exact)
            .unwrap();
        // one row swap plus one column swap
        assert_eq!(r.distance.absolute(), Some(2));
        assert_eq!(r.distance.relative(), Some(ratio(2, 6)));
        let bfs = earthmover_bfs(&a.into(), &b.into(), 100_000).unwrap();
        assert_eq!(bfs.absolute(), Some(2));
    }

    #[test]
    fn heuristic_is_an_upper_bound() {
        let mut r = rng(11);
        for _ in 0..20 {
            let g = OrderedGraph::from_fn(6, 2, |_, _| r.gen_range(0..2)).unwrap();
            let mut v: Vec<usize> = (0..6).collect();
            rand::seq::SliceRandom::shuffle(&mut v[..], &mut r);
            let gs: OrderedStructure = g.into();
            let h = crate::structures::apply_permutation(&gs, &Permutation::new(v).unwrap())
                .unwrap();
            let ex = earthmover_distance(&gs, &h, EarthmoverMode::Exact).unwrap();
            let he = earthmover_distance(&gs, &h, EarthmoverMode::Heuristic).unwrap();
            assert!(!he.exact);
            assert!(he.distance.absolute() >= ex.distance.absolute());
        }
    }

    #[test]
    fn variation_distance_examples() {
        let a = DistributionVector::point_mass(3, 0);
        let b = DistributionVector::point_mass(3, 2);
        assert_eq!(variation_distance(&a, &a).unwrap(), Rational::zero());
        assert_eq!(variation_distance(&a, &b).unwrap(), Rational::one());
        let c = DistributionVector::point_mass(2, 0);
        assert!(variation_distance(&a, &c).is_err());
        let u = DistributionVector::from_counts(&[1, 1, 2]).unwrap();
        assert_eq!(variation_distance(&a, &u).unwrap(), ratio(3, 4));
        assert_eq!(max_event_gap(&a, &u).unwrap(), ratio(3, 4));
    }

    #[test]
    fn q_statistic_examples() {
        let mono = OrderedGraph::monochromatic(6, 1, 2).unwrap();
        let t = q_statistic(&mono, 3, QMode::Plain).unwrap();
        assert_eq!(t.weights.len(), 1);
        assert_eq!(t.weight(&[1, 1, 1]), Rational::one());

        let mut r = rng(2);
        let g = OrderedGraph::from_fn(7, 3, |_, _| r.gen_range(0..3)).unwrap();
        let t2 = q_statistic(&g, 2, QMode::Plain).unwrap();
        let edges = DistributionVector::of_symbols(g.colors(), 3).unwrap();
        for s in 0..3u8 {
            assert_eq!(t2.weight(&[s]), edges.densities()[s as usize]);
        }
        assert!(q_statistic(&g, 8, QMode::Plain).is_err());
        assert!(q_statistic(&g, 3, QMode::KSeparated(2)).is_err());
        let tk = q_statistic(&g, 3, QMode::KSeparated(7)).unwrap();
        assert_eq!(tk, QStatistic { mode: QMode::KSeparated(7), ..q_statistic(&g, 3, QMode::Plain).unwrap() });
        let total: Rational = q_statistic(&g, 3, QMode::KSeparated(4)).unwrap().weights.values().sum();
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn sampled_statistic_is_close() {
        let mut r = rng(5);
        let g = OrderedGraph::from_fn(9, 2, |_, _| r.gen_range(0..2)).unwrap();
        let exact = q_statistic(&g, 2, QMode::Plain).unwrap();
        let est = q_statistic_sampled(&g, 2, QMode::Plain, 20_000, 1).unwrap();
        for (k, w) in &exact.weights {
            let diff = (est.frequency(k) - crate::math::to_f64(w)).abs();
            assert!(diff <= 4.0 * est.std_error(k) + 1e-9);
        }
    }

    #[test]
    fn aggregated_basics() {
        let s = OrderedString::from_bits("0011").unwrap();
        let t = OrderedString::from_bits("0101").unwrap();
        assert_eq!(aggregated_distance(&s, &s, 2).unwrap(), Rational::zero());
        assert_eq!(aggregated_distance(&s, &t, 2).unwrap(), ratio(1, 2));
        assert_eq!(aggregated_distance(&s, &t, 1).unwrap(), Rational::zero());
        assert!(aggregated_distance(&s, &t, 5).is_err());
    }
}
