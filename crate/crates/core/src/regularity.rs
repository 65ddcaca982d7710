//! Ordered regularity at desk scale: color densities between vertex sets,
//! γ-regular pairs, k-refinements of the r-interval equipartition, regularity
//! instances and Φ-instances, all checked by exhaustive search.
//!
//! Vertices and indices are 0-based here; the text formats are 1-based.
//! A tuple `(i, j, i2, j2)` names the parts `V_ij` and `V_i2j2` with `i < i2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{capacity, param, Error, Result};
use crate::limits;
use crate::math::{parse_rational, ratio, trial_rng, Rational};
use crate::structures::{IntervalPartition, OrderedGraph, Symbol};

pub type Tuple = (usize, usize, usize, usize);

fn check_sets(g: &OrderedGraph, a: &[usize], b: &[usize]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return param("density needs two non-empty vertex sets");
    }
    if let Some(&v) = a.iter().chain(b).find(|&&v| v >= g.n()) {
        return param(format!("vertex {v} outside the graph"));
    }
    let sa: BTreeSet<_> = a.iter().collect();
    if sa.len() != a.len() || b.iter().collect::<BTreeSet<_>>().len() != b.len() {
        return param("vertex sets must not repeat vertices");
    }
    if b.iter().any(|v| sa.contains(v)) {
        return param("vertex sets must be disjoint");
    }
    Ok(())
}

fn counts(g: &OrderedGraph, a: &[usize], b: &[usize]) -> Vec<i128> {
    let mut out = vec![0i128; g.sigma()];
    for &x in a {
        for &y in b {
            out[g.color(x, y) as usize] += 1;
        }
    }
    out
}

/// |f⁻¹(σ) ∩ (A×B)| / |A||B|.
pub fn sigma_density(g: &OrderedGraph, a: &[usize], b: &[usize], sigma: Symbol) -> Result<Rational> {
    check_sets(g, a, b)?;
    if sigma as usize >= g.sigma() {
        return param(format!("color {sigma} outside the alphabet"));
    }
    Ok(ratio(counts(g, a, b)[sigma as usize], (a.len() * b.len()) as i128))
}

/// Densities of every color, indexed by symbol.
pub fn densities(g: &OrderedGraph, a: &[usize], b: &[usize]) -> Result<Vec<Rational>> {
    check_sets(g, a, b)?;
    let size = (a.len() * b.len()) as i128;
    Ok(counts(g, a, b).into_iter().map(|c| ratio(c, size)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    Exact,
    /// Random subset pairs; can only certify irregularity.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    Irregular,
    NotRefuted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub sigma: Symbol,
    pub density: Rational,
    pub pair_density: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairVerdict {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

impl PairVerdict {
    pub fn is_regular(&self) -> bool {
        self.verdict == Verdict::Regular
    }
}

/// Colors between the two sides as a |A|×|B| table, plus the test
/// |S/(p·s) − D/(|A||B|)| > γ in integers.
struct PairTable {
    sigma: usize,
    cell: Vec<Vec<Symbol>>,
    total: Vec<i128>,
    area: i128,
    gamma: Rational,
    min_a: usize,
    min_b: usize,
}

fn min_size(gamma: &Rational, side: usize) -> usize {
    // smallest p with p ≥ γ·side, at least one
    let num = gamma.numer() * side as i128;
    let den = *gamma.denom();
    (((num + den - 1) / den) as usize).max(1)
}

impl PairTable {
    fn new(g: &OrderedGraph, a: &[usize], b: &[usize], gamma: &Rational) -> Self {
        let cell: Vec<Vec<Symbol>> = a.iter().map(|&x| b.iter().map(|&y| g.color(x, y)).collect()).collect();
        PairTable {
            sigma: g.sigma(),
            total: counts(g, a, b),
            area: (a.len() * b.len()) as i128,
            gamma: *gamma,
            min_a: min_size(gamma, a.len()),
            min_b: min_size(gamma, b.len()),
            cell,
        }
    }

    fn violates(&self, sum: i128, p: usize, s: usize, sigma: usize) -> bool {
        let ps = (p * s) as i128;
        let gap = (sum * self.area - self.total[sigma] * ps).abs();
        gap * self.gamma.denom() > self.gamma.numer() * ps * self.area
    }

    /// Per-column counts of each color over the chosen rows.
    fn column_counts(&self, rows: &[usize]) -> Vec<Vec<i128>> {
        let cols = self.cell.first().map_or(0, Vec::len);
        let mut c = vec![vec![0i128; cols]; self.sigma];
        for &x in rows {
            for (y, &v) in self.cell[x].iter().enumerate() {
                c[v as usize][y] += 1;
            }
        }
        c
    }

    /// Whether some column subset of size ≥ min_b, containing `chosen` and
    /// otherwise drawn from `rest`, violates for some color.
    fn feasible(&self, counts: &[Vec<i128>], p: usize, chosen: &[usize], rest: &[usize]) -> bool {
        (0..self.sigma).any(|sig| {
            let base: i128 = chosen.iter().map(|&y| counts[sig][y]).sum();
            let mut vals: Vec<i128> = rest.iter().map(|&y| counts[sig][y]).collect();
            vals.sort_unstable_by(|x, y| y.cmp(x));
            let (mut hi, mut lo) = (base, base);
            let m = vals.len();
            (0..=m).any(|e| {
                if e > 0 {
                    hi += vals[e - 1];
                    lo += vals[m - e];
                }
                let s = chosen.len() + e;
                s >= self.min_b && (self.violates(hi, p, s, sig) || self.violates(lo, p, s, sig))
            })
        })
    }

    /// Lexicographically least violating column set for these rows.
    fn least_columns(&self, rows: &[usize]) -> Option<(Vec<usize>, usize)> {
        let counts = self.column_counts(rows);
        let m = self.cell.first().map_or(0, Vec::len);
        let all: Vec<usize> = (0..m).collect();
        if !self.feasible(&counts, rows.len(), &[], &all) {
            return None;
        }
        let mut chosen: Vec<usize> = Vec::new();
        let mut next = 0;
        loop {
            if chosen.len() >= self.min_b {
                let hit = (0..self.sigma).find(|&sig| {
                    let s: i128 = chosen.iter().map(|&y| counts[sig][y]).sum();
                    self.violates(s, rows.len(), chosen.len(), sig)
                });
                if let Some(sig) = hit {
                    return Some((chosen, sig));
                }
            }
            let pick = (next..m).find(|&y| {
                let mut with = chosen.clone();
                with.push(y);
                self.feasible(&counts, rows.len(), &with, &all[y + 1..])
            })?;
            chosen.push(pick);
            next = pick + 1;
        }
    }
}

/// Exhaustive verdict over every A′ ⊆ A, B′ ⊆ B with |A′| ≥ γ|A| and
/// |B′| ≥ γ|B|. For fixed A′ and |B′| the extreme densities come from the
/// columns with the most and fewest edges of a color, so B′ is never
/// enumerated. The witness is the least (A′, B′, σ) in lexicographic order
/// of sorted vertex lists.
pub fn is_regular_pair(g: &OrderedGraph, a: &[usize], b: &[usize], gamma: &Rational, mode: PairMode) -> Result<PairVerdict> {
    check_sets(g, a, b)?;
    if *gamma <= Rational::zero() || *gamma > Rational::one() {
        return param("γ must lie in (0, 1]");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let table = PairTable::new(g, &a, &b, gamma);
    let witness = |rows: Vec<usize>, cols: Vec<usize>, sig: usize| {
        let wa: Vec<usize> = rows.iter().map(|&x| a[x]).collect();
        let wb: Vec<usize> = cols.iter().map(|&y| b[y]).collect();
        Witness {
            density: sigma_density(g, &wa, &wb, sig as Symbol).expect("valid subsets"),
            pair_density: ratio(table.total[sig], table.area),
            a: wa,
            b: wb,
            sigma: sig as Symbol,
        }
    };
    match mode {
        PairMode::Exact => {
            let cap = limits::current().max_pair_side;
            if a.len() > cap || b.len() > cap {
                return capacity(format!("exact pair regularity is capped at sides of {cap}"));
            }
            // sorted row lists in lexicographic order are a preorder walk
            fn walk(t: &PairTable, rows: &mut Vec<usize>, from: usize, n: usize) -> Option<(Vec<usize>, Vec<usize>, usize)> {
                for x in from..n {
                    rows.push(x);
                    if rows.len() >= t.min_a {
                        if let Some((cols, sig)) = t.least_columns(rows) {
                            return Some((rows.clone(), cols, sig));
                        }
                    }
                    if let Some(hit) = walk(t, rows, x + 1, n) {
                        return Some(hit);
                    }
                    rows.pop();
                }
                None
            }
            let found = walk(&table, &mut Vec::new(), 0, a.len());
            Ok(match found {
                Some((rows, cols, sig)) => PairVerdict {
                    verdict: Verdict::Irregular,
                    witness: Some(witness(rows, cols, sig)),
                },
                None => PairVerdict {
                    verdict: Verdict::Regular,
                    witness: None,
                },
            })
        }
        PairMode::Sampled { samples, seed } => {
            let mut best: Option<(Vec<usize>, Vec<usize>, usize)> = None;
            for t in 0..samples {
                let mut rng = trial_rng(seed, t);
                let p = rng.gen_range(table.min_a..=a.len());
                let s = rng.gen_range(table.min_b..=b.len());
                let mut rows = sample(&mut rng, a.len(), p).into_vec();
                let mut cols = sample(&mut rng, b.len(), s).into_vec();
                rows.sort_unstable();
                cols.sort_unstable();
                let counts = table.column_counts(&rows);
                let hit = (0..table.sigma).find(|&sig| {
                    let sum: i128 = cols.iter().map(|&y| counts[sig][y]).sum();
                    table.violates(sum, p, s, sig)
                });
                if let Some(sig) = hit {
                    let cand = (rows, cols, sig);
                    if best.as_ref().map_or(true, |b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
            Ok(match best {
                Some((rows, cols, sig)) => PairVerdict {
                    verdict: Verdict::Irregular,
                    witness: Some(witness(rows, cols, sig)),
                },
                None => PairVerdict {
                    verdict: Verdict::NotRefuted,
                    witness: None,
                },
            })
        }
    }
}

/// A k-refinement of the r-interval equipartition: part `V_ij` is
/// `parts[i*k + j]` and lies inside interval i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    n: usize,
    r: usize,
    k: usize,
    parts: Vec<Vec<usize>>,
}

impl Refinement {
    pub fn new(n: usize, r: usize, k: usize, parts: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 || r == 0 || n < r * k {
            return param(format!("cannot refine {n} vertices into {r}·{k} parts"));
        }
        if parts.len() != r * k {
            return param(format!("expected {} parts, got {}", r * k, parts.len()));
        }
        let intervals = IntervalPartition::new(n, r)?;
        let mut seen = vec![false; n];
        for (idx, part) in parts.iter().enumerate() {
            let range = intervals.range(idx / k);
            for &v in part {
                if !range.contains(&v) {
                    return param(format!("part ({},{}) is not nested in interval {}", idx / k + 1, idx % k + 1, idx / k + 1));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return param(format!("vertex {} appears twice", v + 1));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return param("parts must cover every vertex");
        }
        let lo = parts.iter().map(Vec::len).min().unwrap_or(0);
        let hi = parts.iter().map(Vec::len).max().unwrap_or(0);
        if lo == 0 || hi - lo > 1 {
            return param("refinement is not equitable");
        }
        let parts = parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Ok(Refinement { n, r, k, parts })
    }

    /// Each interval cut into k consecutive runs.
    pub fn consecutive(n: usize, r: usize, k: usize) -> Result<Self> {
        let intervals = IntervalPartition::new(n, r)?;
        let mut parts = Vec::new();
        for i in 0..r {
            let range = intervals.range(i);
            let inner = IntervalPartition::new(range.len(), k)?;
            for j in 0..k {
                parts.push(inner.range(j).map(|v| v + range.start).collect());
            }
        }
        Refinement::new(n, r, k, parts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn part(&self, i: usize, j: usize) -> &[usize] {
        &self.parts[i * self.k + j]
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    /// All cross-interval tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<Tuple> {
        tuples(self.r, self.k)
    }

    /// `refinement n r k` then `part i j v...` lines, 1-based.
    pub fn to_text(&self) -> String {
        let mut out = format!("refinement {} {} {}\n", self.n, self.r, self.k);
        for i in 0..self.r {
            for j in 0..self.k {
                let vs: Vec<String> = self.part(i, j).iter().map(|v| (v + 1).to_string()).collect();
                let _ = writeln!(out, "part {} {} {}", i + 1, j + 1, vs.join(" "));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let head = lines.next().ok_or_else(|| Error::Parse("empty refinement".into()))?;
        let (n, r, k) = match head.as_slice() {
            [kw, n, r, k] if kw == "refinement" => (num(n)?, num(r)?, num(k)?),
            _ => return Err(Error::Parse("expected `refinement n r k`".into())),
        };
        let mut parts = vec![Vec::new(); r * k];
        for toks in lines {
            if toks.len() < 3 || toks[0] != "part" {
                return Err(Error::Parse(format!("bad refinement line `{}`", toks.join(" "))));
            }
            let (i, j) = (index(&toks[1], r)?, index(&toks[2], k)?);
            for t in &toks[3..] {
                parts[i * k + j].push(index(t, n)?);
            }
        }
        Refinement::new(n, r, k, parts)
    }
}

pub fn tuples(r: usize, k: usize) -> Vec<Tuple> {
    let mut out = Vec::new();
    for i in 0..r {
        for j in 0..k {
            for i2 in i + 1..r {
                for j2 in 0..k {
                    out.push((i, j, i2, j2));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionVerdict {
    pub regular: bool,
    pub irregular: Vec<Tuple>,
    pub total: usize,
    pub fraction: Rational,
}

/// (γ, k)-regularity: all but a γ-fraction of the cross-interval pairs are
/// γ-regular. Pairs inside one interval are not looked at.
pub fn is_regular_partition(g: &OrderedGraph, refinement: &Refinement, gamma: &Rational) -> Result<PartitionVerdict> {
    if refinement.n() != g.n() {
        return param("refinement and graph sizes differ");
    }
    let all = refinement.tuples();
    let verdicts: Vec<Result<bool>> = all
        .par_iter()
        .map(|&(i, j, i2, j2)| {
            is_regular_pair(g, refinement.part(i, j), refinement.part(i2, j2), gamma, PairMode::Exact).map(|v| v.is_regular())
        })
        .collect();
    let mut irregular = Vec::new();
    for (t, v) in all.iter().zip(verdicts) {
        if !v? {
            irregular.push(*t);
        }
    }
    let total = all.len();
    let fraction = if total == 0 { Rational::zero() } else { ratio(irregular.len() as i128, total as i128) };
    Ok(PartitionVerdict {
        regular: fraction <= *gamma,
        irregular,
        total,
        fraction,
    })
}

// ---------------------------------------------------------------- instances

fn content_lines(text: &str) -> impl Iterator<Item = Vec<String>> + '_ {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
}

fn num(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("bad integer `{s}`")))
}

fn index(s: &str, bound: usize) -> Result<usize> {
    let v = num(s)?;
    if v == 0 || v > bound {
        return Err(Error::Parse(format!("index {v} outside 1..={bound}")));
    }
    Ok(v - 1)
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).ok_or_else(|| Error::Parse(format!("bad number `{s}`")))
}

fn tuple_of(toks: &[String], r: usize, k: usize) -> Result<Tuple> {
    let t = (index(&toks[0], r)?, index(&toks[1], k)?, index(&toks[2], r)?, index(&toks[3], k)?);
    if t.0 >= t.2 {
        return Err(Error::Parse(format!("tuple needs i < i2: {}", toks[..4].join(" "))));
    }
    Ok(t)
}

fn fmt_tuple(t: &Tuple) -> String {
    format!("{} {} {} {}", t.0 + 1, t.1 + 1, t.2 + 1, t.3 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityInstance {
    pub gamma: Rational,
    pub r: usize,
    pub k: usize,
    pub sigma: usize,
    /// η for every tuple outside the exception set, indexed by color.
    pub densities: BTreeMap<Tuple, Vec<Rational>>,
    pub exceptions: BTreeSet<Tuple>,
}

impl RegularityInstance {
    pub fn new(
        gamma: Rational,
        r: usize,
        k: usize,
        sigma: usize,
        densities: BTreeMap<Tuple, Vec<Rational>>,
        exceptions: BTreeSet<Tuple>,
    ) -> Result<Self> {
        if gamma <= Rational::zero() || gamma > Rational::one() {
            return param("γ must lie in (0, 1]");
        }
        if r < 2 || k == 0 || sigma < 2 {
            return param("need r ≥ 2, k ≥ 1 and at least two colors");
        }
        let inst = RegularityInstance {
            gamma,
            r,
            k,
            sigma,
            densities,
            exceptions,
        };
        let valid: BTreeSet<Tuple> = tuples(r, k).into_iter().collect();
        for (t, d) in &inst.densities {
            if !valid.contains(t) {
                return param(format!("tuple ({}) is not a cross-interval tuple", fmt_tuple(t)));
            }
            if d.len() != sigma || d.iter().any(|x| *x < Rational::zero() || *x > Rational::one()) {
                return param(format!("densities of ({}) must be {sigma} values in [0, 1]", fmt_tuple(t)));
            }
        }
        for t in &valid {
            if !inst.exceptions.contains(t) && !inst.densities.contains_key(t) {
                return param(format!("tuple ({}) has no densities", fmt_tuple(t)));
            }
        }
        if inst.exceptions.iter().any(|t| !valid.contains(t)) {
            return param("exception is not a cross-interval tuple");
        }
        if ratio(inst.exceptions.len() as i128, 1) > inst.gamma * ratio(inst.big_k() as i128, 1) {
            return param(format!("{} exceptions exceed γK", inst.exceptions.len()));
        }
        Ok(inst)
    }

    /// K = C(r,2)·k²·|Σ|.
    pub fn big_k(&self) -> usize {
        self.r * (self.r - 1) / 2 * self.k * self.k * self.sigma
    }

    /// max{1/γ, K}.
    pub fn complexity(&self) -> Rational {
        let inv = self.gamma.recip();
        let k = ratio(self.big_k() as i128, 1);
        if inv > k {
            inv
        } else {
            k
        }
    }

    /// Densities read off an actual refinement, no exceptions.
    pub fn from_refinement(g: &OrderedGraph, refinement: &Refinement, gamma: Rational) -> Result<Self> {
        let mut dens = BTreeMap::new();
        for t in refinement.tuples() {
            dens.insert(t, densities(g, refinement.part(t.0, t.1), refinement.part(t.2, t.3))?);
        }
        RegularityInstance::new(gamma, refinement.r(), refinement.k(), g.sigma(), dens, BTreeSet::new())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("instance {} {} {} {}\n", self.r, self.k, self.gamma, self.sigma);
        for (t, d) in &self.densities {
            let ds: Vec<String> = d.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "density {} {}", fmt_tuple(t), ds.join(" "));
        }
        for t in &self.exceptions {
            let _ = writeln!(out, "except {}", fmt_tuple(t));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let head = lines.next().ok_or_else(|| Error::Parse("empty instance".into()))?;
        let (r, k, gamma, sigma) = match head.as_slice() {
            [kw, r, k, g, s] if kw == "instance" => (num(r)?, num(k)?, rational(g)?, num(s)?),
            _ => return Err(Error::Parse("expected `instance r k gamma sigma`".into())),
        };
        let mut dens = BTreeMap::new();
        let mut exc = BTreeSet::new();
        for toks in lines {
            match toks[0].as_str() {
                "density" if toks.len() == 5 + sigma => {
                    let t = tuple_of(&toks[1..], r, k)?;
                    let d = toks[5..].iter().map(|s| rational(s)).collect::<Result<Vec<_>>>()?;
                    dens.insert(t, d);
                }
                "except" if toks.len() == 5 => {
                    exc.insert(tuple_of(&toks[1..], r, k)?);
                }
                _ => return Err(Error::Parse(format!("bad instance line `{}`", toks.join(" ")))),
            }
        }
        RegularityInstance::new(gamma, r, k, sigma, dens, exc).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Labeled equitable splits of `vertices` into k parts, in lexicographic
/// order of the label sequence.
fn equitable_splits(vertices: &[usize], k: usize) -> Vec<Vec<Vec<usize>>> {
    let m = vertices.len();
    let small = m / k;
    let big_parts = m % k;
    let mut out = Vec::new();
    fn rec(pos: usize, m: usize, k: usize, small: usize, big_parts: usize, sizes: &mut Vec<usize>, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == m {
            out.push(labels.clone());
            return;
        }
        for j in 0..k {
            let grown = sizes[j] + 1;
            let bigs = sizes.iter().filter(|&&s| s > small).count();
            let ok = grown <= small || (grown == small + 1 && big_parts > 0 && (sizes[j] > small || bigs < big_parts));
            if !ok {
                continue;
            }
            // remaining vertices must still fill every part to at least `small`
            sizes[j] += 1;
            let short: usize = sizes.iter().map(|&s| small.saturating_sub(s)).sum();
            if short <= m - pos - 1 {
                labels.push(j);
                rec(pos + 1, m, k, small, big_parts, sizes, labels, out);
                labels.pop();
            }
            sizes[j] -= 1;
        }
    }
    let mut label_seqs = Vec::new();
    rec(0, m, k, small, big_parts, &mut vec![0; k], &mut Vec::new(), &mut label_seqs);
    for labels in label_seqs {
        let mut parts = vec![Vec::new(); k];
        for (v, j) in vertices.iter().zip(labels) {
            parts[j].push(*v);
        }
        out.push(parts);
    }
    out
}

fn check_tiny(g: &OrderedGraph, r: usize, k: usize) -> Result<IntervalPartition> {
    let lim = limits::current();
    if g.n() > lim.max_instance_n || r * k > lim.max_instance_parts {
        return capacity(format!(
            "exhaustive refinement search is capped at n ≤ {} and r·k ≤ {}",
            lim.max_instance_n, lim.max_instance_parts
        ));
    }
    if g.n() < r * k {
        return param("graph has fewer vertices than parts");
    }
    IntervalPartition::new(g.n(), r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceVerdict {
    pub satisfied: bool,
    pub witness: Option<Refinement>,
    /// Size of the refinement space searched.
    pub candidates: u128,
}

/// Whether the count of color σ between parts matches ⌊η|V||V′|⌋ or ⌈η|V||V′|⌉.
fn density_matches(count: i128, size: i128, eta: &Rational) -> bool {
    let target = eta * ratio(size, 1);
    count == target.floor().to_integer() || count == target.ceil().to_integer()
}

/// Brute force over every equitable refinement nested in the intervals.
/// Among satisfying refinements the first in enumeration order is returned.
pub fn satisfies_instance(g: &OrderedGraph, inst: &RegularityInstance) -> Result<InstanceVerdict> {
    let intervals = check_tiny(g, inst.r, inst.k)?;
    if g.sigma() != inst.sigma {
        return param("graph and instance alphabets differ");
    }
    let splits: Vec<Vec<Vec<Vec<usize>>>> = (0..inst.r)
        .map(|i| equitable_splits(&intervals.range(i).collect::<Vec<_>>(), inst.k))
        .collect();
    let candidates: u128 = splits.iter().map(|s| s.len() as u128).product();

    // tuples whose later interval is i2, checked once that interval is fixed
    let pair_ok = |chosen: &[&Vec<Vec<usize>>], i2: usize| -> Result<bool> {
        for i in 0..i2 {
            for j in 0..inst.k {
                for j2 in 0..inst.k {
                    let t = (i, j, i2, j2);
                    if inst.exceptions.contains(&t) {
                        continue;
                    }
                    let (a, b) = (&chosen[i][j], &chosen[i2][j2]);
                    let size = (a.len() * b.len()) as i128;
                    let eta = &inst.densities[&t];
                    let c = counts(g, a, b);
                    if !c.iter().zip(eta).all(|(&c, e)| density_matches(c, size, e)) {
                        return Ok(false);
                    }
                }
            }
        }
        for i in 0..i2 {
            for j in 0..inst.k {
                for j2 in 0..inst.k {
                    let t = (i, j, i2, j2);
                    if inst.exceptions.contains(&t) {
                        continue;
                    }
                    if !is_regular_pair(g, &chosen[i][j], &chosen[i2][j2], &inst.gamma, PairMode::Exact)?.is_regular() {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    };

    fn dfs<'a>(
        splits: &'a [Vec<Vec<Vec<usize>>>],
        chosen: &mut Vec<&'a Vec<Vec<usize>>>,
        ok: &dyn Fn(&[&Vec<Vec<usize>>], usize) -> Result<bool>,
    ) -> Result<bool> {
        let i = chosen.len();
        if i == splits.len() {
            return Ok(true);
        }
        for s in &splits[i] {
            chosen.push(s);
            if ok(chosen, i)? && dfs(splits, chosen, ok)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    let found = splits[0]
        .par_iter()
        .map(|first| -> Result<Option<Vec<Vec<usize>>>> {
            let mut chosen = vec![first];
            if dfs(&splits, &mut chosen, &pair_ok)? {
                Ok(Some(chosen.iter().flat_map(|s| s.iter().cloned()).collect()))
            } else {
                Ok(None)
            }
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    let witness = match found {
        None => None,
        Some(r) => Some(Refinement::new(g.n(), inst.r, inst.k, r?.expect("found"))?),
    };
    Ok(InstanceVerdict {
        satisfied: witness.is_some(),
        witness,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiInstance {
    pub r: usize,
    pub k: usize,
    pub sigma: usize,
    /// (ℓ, h) per color; tuples left out are unconstrained.
    pub bounds: BTreeMap<Tuple, Vec<(Rational, Rational)>>,
}

impl PhiInstance {
    pub fn new(r: usize, k: usize, sigma: usize, bounds: BTreeMap<Tuple, Vec<(Rational, Rational)>>) -> Result<Self> {
        if r < 2 || k == 0 || sigma < 2 {
            return param("need r ≥ 2, k ≥ 1 and at least two colors");
        }
        let valid: BTreeSet<Tuple> = tuples(r, k).into_iter().collect();
        for (t, b) in &bounds {
            if !valid.contains(t) || b.len() != sigma {
                return param(format!("bad bounds for ({})", fmt_tuple(t)));
            }
            if b.iter().any(|(l, h)| l > h || *l < Rational::zero() || *h > Rational::one()) {
                return param(format!("bounds of ({}) need 0 ≤ ℓ ≤ h ≤ 1", fmt_tuple(t)));
            }
            let lsum: Rational = b.iter().map(|p| p.0).sum();
            let hsum: Rational = b.iter().map(|p| p.1).sum();
            if lsum > Rational::one() || hsum < Rational::one() {
                return param(format!("bounds of ({}) need Σℓ ≤ 1 ≤ Σh", fmt_tuple(t)));
            }
        }
        Ok(PhiInstance { r, k, sigma, bounds })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("phi {} {} {}\n", self.r, self.k, self.sigma);
        for (t, b) in &self.bounds {
            let bs: Vec<String> = b.iter().map(|(l, h)| format!("{l} {h}")).collect();
            let _ = writeln!(out, "bounds {} {}", fmt_tuple(t), bs.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let head = lines.next().ok_or_else(|| Error::Parse("empty Φ-instance".into()))?;
        let (r, k, sigma) = match head.as_slice() {
            [kw, r, k, s] if kw == "phi" => (num(r)?, num(k)?, num(s)?),
            _ => return Err(Error::Parse("expected `phi r k sigma`".into())),
        };
        let mut bounds = BTreeMap::new();
        for toks in lines {
            if toks[0] != "bounds" || toks.len() != 5 + 2 * sigma {
                return Err(Error::Parse(format!("bad Φ line `{}`", toks.join(" "))));
            }
            let t = tuple_of(&toks[1..], r, k)?;
            let vals = toks[5..].iter().map(|s| rational(s)).collect::<Result<Vec<_>>>()?;
            bounds.insert(t, vals.chunks(2).map(|c| (c[0], c[1])).collect());
        }
        PhiInstance::new(r, k, sigma, bounds).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiVerdict {
    pub satisfied: bool,
    /// Parts `V_ij` at index i*k + j.
    pub witness: Option<Vec<Vec<usize>>>,
    pub candidates: u128,
}

/// Labeled selections of k disjoint s-subsets of `vertices`.
fn selections(vertices: &[usize], k: usize, s: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(vertices: &[usize], k: usize, s: usize, used: &mut Vec<bool>, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        let free: Vec<usize> = (0..vertices.len()).filter(|&i| !used[i]).collect();
        for combo in crate::math::Combinations::new(free.len(), s) {
            let idx: Vec<usize> = combo.iter().map(|&c| free[c]).collect();
            for &i in &idx {
                used[i] = true;
            }
            acc.push(idx.iter().map(|&i| vertices[i]).collect());
            rec(vertices, k, s, used, acc, out);
            acc.pop();
            for &i in &idx {
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(vertices, k, s, &mut vec![false; vertices.len()], &mut Vec::new(), &mut out);
    out
}

/// Searches part selections of size ⌊n/rk⌋ nested in the intervals with
/// ℓ ≤ d_σ(V_ij, V_i2j2) ≤ h for every bounded tuple.
pub fn satisfies_phi(g: &OrderedGraph, phi: &PhiInstance) -> Result<PhiVerdict> {
    let intervals = check_tiny(g, phi.r, phi.k)?;
    if g.sigma() != phi.sigma {
        return param("graph and Φ-instance alphabets differ");
    }
    let s = g.n() / (phi.r * phi.k);
    let sel: Vec<Vec<Vec<Vec<usize>>>> = (0..phi.r)
        .map(|i| selections(&intervals.range(i).collect::<Vec<_>>(), phi.k, s))
        .collect();
    let candidates: u128 = sel.iter().map(|x| x.len() as u128).product();
    let ok = |chosen: &[&Vec<Vec<usize>>], i2: usize| -> bool {
        for i in 0..i2 {
            for j in 0..phi.k {
                for j2 in 0..phi.k {
                    let Some(b) = phi.bounds.get(&(i, j, i2, j2)) else { continue };
                    let size = (s * s) as i128;
                    let c = counts(g, &chosen[i][j], &chosen[i2][j2]);
                    if !c.iter().zip(b).all(|(&c, (l, h))| {
                        let d = ratio(c, size);
                        *l <= d && d <= *h
                    }) {
                        return false;
                    }
                }
            }
        }
        true
    };
    fn dfs<'a>(sel: &'a [Vec<Vec<Vec<usize>>>], chosen: &mut Vec<&'a Vec<Vec<usize>>>, ok: &dyn Fn(&[&Vec<Vec<usize>>], usize) -> bool) -> bool {
        let i = chosen.len();
        if i == sel.len() {
            return true;
        }
        for s in &sel[i] {
            chosen.push(s);
            if ok(chosen, i) && dfs(sel, chosen, ok) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let witness = sel[0].par_iter().find_map_first(|first| {
        let mut chosen = vec![first];
        dfs(&sel, &mut chosen, &ok).then(|| chosen.iter().flat_map(|x| x.iter().cloned()).collect::<Vec<_>>())
    });
    Ok(PhiVerdict {
        satisfied: witness.is_some(),
        witness,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng;
    use num_traits::Signed;

    /// Definition-level oracle: every pair of qualifying subsets, every color.
    fn brute_regular(g: &OrderedGraph, a: &[usize], b: &[usize], gamma: &Rational) -> bool {
        let d = densities(g, a, b).unwrap();
        for ma in 1u32..(1 << a.len()) {
            let sa: Vec<usize> = (0..a.len()).filter(|&i| ma >> i & 1 == 1).map(|i| a[i]).collect();
            if ratio(sa.len() as i128, 1) < gamma * ratio(a.len() as i128, 1) {
                continue;
            }
            for mb in 1u32..(1 << b.len()) {
                let sb: Vec<usize> = (0..b.len()).filter(|&i| mb >> i & 1 == 1).map(|i| b[i]).collect();
                if ratio(sb.len() as i128, 1) < gamma * ratio(b.len() as i128, 1) {
                    continue;
                }
                let d2 = densities(g, &sa, &sb).unwrap();
                if d.iter().zip(&d2).any(|(x, y)| (x - y).abs() > *gamma) {
                    return false;
                }
            }
        }
        true
    }

    fn brute_least(g: &OrderedGraph, a: &[usize], b: &[usize], gamma: &Rational) -> Option<(Vec<usize>, Vec<usize>, Symbol)> {
        let d = densities(g, a, b).unwrap();
        let mut best = None;
        for ma in 1u32..(1 << a.len()) {
            let sa: Vec<usize> = (0..a.len()).filter(|&i| ma >> i & 1 == 1).map(|i| a[i]).collect();
            for mb in 1u32..(1 << b.len()) {
                let sb: Vec<usize> = (0..b.len()).filter(|&i| mb >> i & 1 == 1).map(|i| b[i]).collect();
                if ratio(sa.len() as i128, 1) < gamma * ratio(a.len() as i128, 1)
                    || ratio(sb.len() as i128, 1) < gamma * ratio(b.len() as i128, 1)
                {
                    continue;
                }
                let d2 = densities(g, &sa, &sb).unwrap();
                if let Some(sig) = (0..d.len()).find(|&s| (d[s] - d2[s]).abs() > *gamma) {
                    let cand = (sa.clone(), sb, sig as Symbol);
                    if best.as_ref().map_or(true, |b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }

    fn random_graph(n: usize, seed: u64) -> OrderedGraph {
        let mut r = rng(seed);
        OrderedGraph::from_fn(n, 2, |_, _| r.gen_range(0..2)).unwrap()
    }

    #[test]
    fn density_examples() {
        let g = OrderedGraph::monochromatic(4, 1, 2).unwrap();
        assert_eq!(sigma_density(&g, &[0, 1], &[2, 3], 1).unwrap(), ratio(1, 1));
        assert_eq!(sigma_density(&g, &[0, 1], &[2, 3], 0).unwrap(), ratio(0, 1));
        let h = OrderedGraph::from_fn(3, 2, |i, j| u8::from((i, j) == (0, 2))).unwrap();
        assert_eq!(sigma_density(&h, &[0, 1], &[2], 1).unwrap(), ratio(1, 2));
        assert!(sigma_density(&h, &[0, 1], &[1], 1).is_err());
        assert!(sigma_density(&h, &[], &[1], 1).is_err());
        let g = random_graph(9, 1);
        let d = densities(&g, &[0, 3, 5], &[1, 2, 8, 7]).unwrap();
        assert_eq!(d.iter().sum::<Rational>(), ratio(1, 1));
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..30 {
            let g = random_graph(10, seed);
            let (a, b) = (vec![0, 2, 4, 6, 8], vec![1, 3, 5, 7, 9]);
            for gamma in [ratio(1, 5), ratio(2, 5), ratio(3, 5)] {
                let v = is_regular_pair(&g, &a, &b, &gamma, PairMode::Exact).unwrap();
                assert_eq!(v.is_regular(), brute_regular(&g, &a, &b, &gamma), "seed {seed} γ {gamma}");
                if let Some(w) = v.witness {
                    let d = sigma_density(&g, &w.a, &w.b, w.sigma).unwrap();
                    assert!((d - w.pair_density).abs() > gamma);
                    assert_eq!(Some((w.a, w.b, w.sigma)), brute_least(&g, &a, &b, &gamma));
                }
            }
        }
    }

    #[test]
    fn deviant_vertex_is_found() {
        // 16 vertices, A = 0..8, B = 8..16; row 0 has density 1 - 1/2 = 1/2 lower
        let g = OrderedGraph::from_fn(16, 2, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            if a < 8 && b >= 8 {
                u8::from(a != 0 || b < 12)
            } else {
                0
            }
        })
        .unwrap();
        let a: Vec<usize> = (0..8).collect();
        let b: Vec<usize> = (8..16).collect();
        let v = is_regular_pair(&g, &a, &b, &ratio(1, 8), PairMode::Exact).unwrap();
        assert_eq!(v.verdict, Verdict::Irregular);
        let w = v.witness.unwrap();
        assert_eq!(w.a, vec![0]);
        assert_eq!(w.b, vec![8, 9, 10, 11, 12]);
        let s = is_regular_pair(&g, &a, &b, &ratio(1, 8), PairMode::Sampled { samples: 4000, seed: 2 }).unwrap();
        assert_eq!(s.verdict, Verdict::Irregular);
    }

    #[test]
    fn monotone_in_gamma() {
        for seed in 0..10 {
            let g = random_graph(12, seed + 40);
            let a: Vec<usize> = (0..6).collect();
            let b: Vec<usize> = (6..12).collect();
            let mut was_regular = false;
            for num in 1..=6 {
                let reg = is_regular_pair(&g, &a, &b, &ratio(num, 6), PairMode::Exact).unwrap().is_regular();
                assert!(!was_regular || reg);
                was_regular = reg;
            }
            assert!(was_regular);
        }
    }

    #[test]
    fn refinement_validation() {
        assert!(Refinement::consecutive(8, 2, 2).is_ok());
        assert!(Refinement::new(8, 2, 2, vec![vec![0, 1], vec![2, 4], vec![3, 5], vec![6, 7]]).is_err());
        assert!(Refinement::new(8, 2, 2, vec![vec![0], vec![1, 2, 3], vec![4, 5], vec![6, 7]]).is_err());
        let r = Refinement::new(8, 2, 2, vec![vec![0, 3], vec![1, 2], vec![5, 7], vec![4, 6]]).unwrap();
        assert_eq!(Refinement::parse(&r.to_text()).unwrap(), r);
        let g = OrderedGraph::monochromatic(8, 0, 2).unwrap();
        let v = is_regular_partition(&g, &r, &ratio(1, 10)).unwrap();
        assert!(v.regular);
        assert_eq!(v.total, 4);
    }

    #[test]
    fn splits_are_equitable() {
        let s = equitable_splits(&[0, 1, 2, 3, 4], 2);
        assert_eq!(s.len(), 20); // C(5,2) + C(5,3)
        assert_eq!(equitable_splits(&[0, 1, 2, 3], 2).len(), 6);
        assert_eq!(selections(&[0, 1, 2, 3], 2, 2).len(), 6);
    }

    #[test]
    fn instance_round_trip_and_self_consistency() {
        let g = random_graph(8, 7);
        let r = Refinement::consecutive(8, 2, 2).unwrap();
        // 2-vertex parts of a random graph are regular only at γ = 1
        let inst = RegularityInstance::from_refinement(&g, &r, ratio(1, 1)).unwrap();
        assert_eq!(RegularityInstance::parse(&inst.to_text()).unwrap(), inst);
        assert_eq!(inst.big_k(), 8);
        assert_eq!(inst.complexity(), ratio(8, 1));
        let v = satisfies_instance(&g, &inst).unwrap();
        assert!(v.satisfied);
        let w = v.witness.unwrap();
        let check = is_regular_partition(&g, &w, &inst.gamma).unwrap();
        assert!(check.irregular.is_empty());
    }

    #[test]
    fn everything_excepted_is_satisfied() {
        let g = random_graph(8, 3);
        let exc: BTreeSet<Tuple> = tuples(2, 2).into_iter().collect();
        let inst = RegularityInstance::new(ratio(1, 1), 2, 2, 2, BTreeMap::new(), exc).unwrap();
        assert!(satisfies_instance(&g, &inst).unwrap().satisfied);
        let too_many: BTreeSet<Tuple> = tuples(2, 2).into_iter().collect();
        assert!(RegularityInstance::new(ratio(1, 10), 2, 2, 2, BTreeMap::new(), too_many).is_err());
    }

    #[test]
    fn perturbed_density_flips() {
        // a single color-1 edge across the intervals
        let g = OrderedGraph::from_fn(8, 2, |i, j| u8::from((i.min(j), i.max(j)) == (0, 4))).unwrap();
        let r = Refinement::consecutive(8, 2, 2).unwrap();
        let inst = RegularityInstance::from_refinement(&g, &r, ratio(1, 1)).unwrap();
        assert!(satisfies_instance(&g, &inst).unwrap().satisfied);
        let mut bad = inst.clone();
        bad.densities.insert((0, 0, 1, 0), vec![ratio(0, 1), ratio(1, 1)]);
        assert!(!satisfies_instance(&g, &bad).unwrap().satisfied);
    }

    #[test]
    fn phi_examples() {
        let g = random_graph(8, 11);
        let free: BTreeMap<Tuple, Vec<(Rational, Rational)>> =
            tuples(2, 2).into_iter().map(|t| (t, vec![(ratio(0, 1), ratio(1, 1)); 2])).collect();
        let phi = PhiInstance::new(2, 2, 2, free).unwrap();
        assert_eq!(PhiInstance::parse(&phi.to_text()).unwrap(), phi);
        assert!(satisfies_phi(&g, &phi).unwrap().satisfied);
        // bichromatic: every cross edge color is its left endpoint's parity
        let h = OrderedGraph::from_fn(8, 2, |i, j| (i.min(j) % 2) as u8).unwrap();
        let force: BTreeMap<Tuple, Vec<(Rational, Rational)>> = tuples(2, 2)
            .into_iter()
            .map(|t| (t, vec![(ratio(0, 1), ratio(0, 1)), (ratio(1, 1), ratio(1, 1))]))
            .collect();
        let phi = PhiInstance::new(2, 2, 2, force).unwrap();
        assert!(!satisfies_phi(&h, &phi).unwrap().satisfied);
        assert!(PhiInstance::new(2, 1, 2, [((0, 0, 1, 0), vec![(ratio(1, 2), ratio(1, 2)); 2])].into()).is_ok());
        assert!(PhiInstance::new(2, 1, 2, [((0, 0, 1, 0), vec![(ratio(0, 1), ratio(1, 3)); 2])].into()).is_err());
    }

    #[test]
    fn caps() {
        let g = random_graph(17, 1);
        let inst = RegularityInstance::new(ratio(1, 1), 2, 1, 2, BTreeMap::new(), [(0, 0, 1, 0)].into()).unwrap();
        assert!(matches!(satisfies_instance(&g, &inst), Err(Error::Capacity(_))));
        let big = random_graph(30, 1);
        let a: Vec<usize> = (0..15).collect();
        let b: Vec<usize> = (15..30).collect();
        assert!(matches!(is_regular_pair(&big, &a, &b, &ratio(1, 2), PairMode::Exact), Err(Error::Capacity(_))));
    }
}
