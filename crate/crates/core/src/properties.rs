//! The property contract, the built-in catalog and earthmover-resilience
//! probes (profiles, the chessboard certificate, hereditary copy counting).

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{capacity, param, Error, Result};
use crate::geometry::{convex_hull, hull_grid_points, hulls_intersect, Pt};
use crate::math::{binomial, pairs, ratio, to_f64, trial_rng, Combinations, Rational};
use crate::metrics::{distance_to_property, DistributionVector};
use crate::structures::{
    apply_basic_move, Image, IntervalPartition, OrderedGraph, OrderedString, OrderedStructure,
    StructureKind, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub distance_oracle: bool,
    pub histogram_oracle: bool,
    pub sampler: bool,
    pub er_bound: bool,
}

impl fmt::Display for Capabilities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.distance_oracle {
            parts.push("distance");
        }
        if self.histogram_oracle {
            parts.push("histogram");
        }
        if self.sampler {
            parts.push("sampler");
        }
        if self.er_bound {
            parts.push("er-bound");
        }
        write!(f, "{}", parts.join(","))
    }
}

/// A property of ordered structures. Only `contains` is mandatory; the other
/// hooks return `None` when the property has no such capability.
pub trait Property: Send + Sync {
    fn name(&self) -> String;
    fn kind(&self) -> StructureKind;
    fn contains(&self, f: &OrderedStructure) -> bool;

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    /// Exact relative Hamming distance to the property.
    fn distance_oracle(&self, _f: &OrderedStructure) -> Option<Rational> {
        None
    }

    /// min over members S' of Σ_i |targets_i − T(S'_i)|·|S_i|/|S| (strings only).
    fn histogram_distance(
        &self,
        _targets: &[DistributionVector],
        _parts: &IntervalPartition,
    ) -> Option<Rational> {
        None
    }

    /// A member of size n (length, side or vertex count).
    fn sample(&self, _n: usize, _rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        None
    }

    /// A proven earthmover-resilience function δ(ε).
    fn er_bound(&self, _eps: f64) -> Option<f64> {
        None
    }
}

fn black(v: Symbol) -> bool {
    v != 0
}

// ---------------------------------------------------------------- strings

/// Binary strings without three consecutive ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct P111;

fn p111_flips(entries: &[Symbol]) -> u64 {
    // cost[r]: fewest flips so far with a trailing run of r ones
    const INF: u64 = u64::MAX / 2;
    let mut cost = [0, INF, INF];
    for &v in entries {
        let one_cost = u64::from(!black(v));
        let zero_cost = u64::from(black(v));
        let next = [
            cost.iter().min().unwrap() + zero_cost,
            cost[0] + one_cost,
            cost[1] + one_cost,
        ];
        cost = next;
    }
    *cost.iter().min().unwrap()
}

impl Property for P111 {
    fn name(&self) -> String {
        "p111".into()
    }

    fn kind(&self) -> StructureKind {
        StructureKind::String
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        let Some(s) = f.as_string() else { return false };
        let mut run = 0;
        for &v in s.entries() {
            run = if black(v) { run + 1 } else { 0 };
            if run == 3 {
                return false;
            }
        }
        true
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            distance_oracle: true,
            sampler: true,
            ..Default::default()
        }
    }

    fn distance_oracle(&self, f: &OrderedStructure) -> Option<Rational> {
        let s = f.as_string()?;
        if s.is_empty() {
            return Some(Rational::zero());
        }
        Some(ratio(p111_flips(s.entries()) as i128, s.len() as i128))
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        for _ in 0..1000 {
            let bits: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let s: OrderedStructure = OrderedString::new(bits, 2).ok()?.into();
            if self.contains(&s) {
                return Some(s);
            }
        }
        // long strings almost never pass; break every third one of each run
        let mut run = 0;
        let bits = (0..n)
            .map(|_| {
                let mut v = rng.gen_range(0..2);
                if v == 1 && run == 2 {
                    v = 0;
                }
                run = if v == 1 { run + 1 } else { 0 };
                v
            })
            .collect();
        Some(OrderedString::new(bits, 2).ok()?.into())
    }
}

/// Non-decreasing strings over a σ-letter alphabet.
#[derive(Debug, Clone, Copy)]
pub struct MonotoneString {
    pub sigma: usize,
}

impl Default for MonotoneString {
    fn default() -> Self {
        MonotoneString { sigma: 2 }
    }
}

/// Longest non-decreasing subsequence, patience style.
pub fn longest_non_decreasing(entries: &[Symbol]) -> usize {
    let mut tails: Vec<Symbol> = Vec::new();
    for &v in entries {
        let pos = tails.partition_point(|&t| t <= v);
        if pos == tails.len() {
            tails.push(v);
        } else {
            tails[pos] = v;
        }
    }
    tails.len()
}

impl MonotoneString {
    /// Aggregated-distance minimisation over monotone strings. A monotone
    /// string is fixed by cut points 0 = P_0 ≤ P_1 ≤ ... ≤ P_σ = n, so a
    /// dynamic program over (symbol, cut) suffices.
    fn histogram_dp(&self, targets: &[DistributionVector], parts: &IntervalPartition) -> Option<Rational> {
        let s = self.sigma;
        let n = parts.n();
        let t = parts.k();
        if targets.len() != t || targets.iter().any(|d| d.sigma() != s) || n == 0 {
            return None;
        }
        // a[i][σ] = |S_i|·targets_i(σ), scaled to integers over a common denominator
        let mut den: i128 = 1;
        for (i, d) in targets.iter().enumerate() {
            for p in d.densities() {
                let v = p * Rational::from_integer(parts.size(i) as i128);
                den = den.lcm(v.denom());
                if den > 1 << 60 {
                    return None;
                }
            }
        }
        let a: Vec<Vec<i128>> = targets
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.densities()
                    .iter()
                    .map(|p| {
                        let v = p * Rational::from_integer(parts.size(i) as i128 * den);
                        v.to_integer()
                    })
                    .collect()
            })
            .collect();
        let bounds = parts.bounds();
        // cost of giving symbol `sym` the block [lo, hi)
        let block_cost = |sym: usize, lo: usize, hi: usize| -> i128 {
            let mut c = 0i128;
            for i in 0..t {
                let (b0, b1) = (bounds[i], bounds[i + 1]);
                let ov = hi.min(b1).saturating_sub(lo.max(b0)) as i128 * den;
                c += (a[i][sym] - ov).abs();
            }
            c
        };
        let mut best: Vec<i128> = (0..=n).map(|p| block_cost(0, 0, p)).collect();
        for sym in 1..s {
            if sym == s - 1 {
                let total = (0..=n).map(|p| best[p] + block_cost(sym, p, n)).min()?;
                best = vec![total; n + 1];
                break;
            }
            let next: Vec<i128> = (0..=n)
                .map(|hi| (0..=hi).map(|lo| best[lo] + block_cost(sym, lo, hi)).min().unwrap())
                .collect();
            best = next;
        }
        Some(ratio(best[n], 2 * n as i128 * den))
    }
}

impl Property for MonotoneString {
    fn name(&self) -> String {
        if self.sigma == 2 {
            "monotone_string".into()
        } else {
            format!("monotone_string:{}", self.sigma)
        }
    }

    fn kind(&self) -> StructureKind {
        StructureKind::String
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        f.as_string()
            .is_some_and(|s| s.entries().windows(2).all(|w| w[0] <= w[1]))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            distance_oracle: true,
            histogram_oracle: true,
            sampler: true,
            er_bound: self.sigma == 2,
        }
    }

    fn distance_oracle(&self, f: &OrderedStructure) -> Option<Rational> {
        let s = f.as_string()?;
        if s.is_empty() {
            return Some(Rational::zero());
        }
        let keep = longest_non_decreasing(s.entries());
        Some(ratio((s.len() - keep) as i128, s.len() as i128))
    }

    fn histogram_distance(
        &self,
        targets: &[DistributionVector],
        parts: &IntervalPartition,
    ) -> Option<Rational> {
        self.histogram_dp(targets, parts)
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        let mut v: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..self.sigma) as Symbol).collect();
        v.sort_unstable();
        Some(OrderedString::new(v, self.sigma).ok()?.into())
    }

    /// Binary case: ε-far forces a cut with at least εn/2 ones before it and
    /// as many zeros after it, hence more than (εn)²/4 inverted pairs.
    fn er_bound(&self, eps: f64) -> Option<f64> {
        (self.sigma == 2).then(|| eps * eps / 2.0)
    }
}

// ---------------------------------------------------------------- images

fn black_points(img: &Image) -> Vec<Pt> {
    let mut out = Vec::new();
    for r in 0..img.rows() {
        for c in 0..img.cols() {
            if black(img.get(r, c)) {
                out.push((r as i64, c as i64));
            }
        }
    }
    out
}

fn white_points(img: &Image) -> Vec<Pt> {
    let mut out = Vec::new();
    for r in 0..img.rows() {
        for c in 0..img.cols() {
            if !black(img.get(r, c)) {
                out.push((r as i64, c as i64));
            }
        }
    }
    out
}

/// Every grid point of the hull of `pts` is black.
fn hull_is_black(img: &Image, pts: &[Pt]) -> bool {
    let hull = convex_hull(pts);
    hull_grid_points(&hull, img.rows(), img.cols())
        .iter()
        .all(|&(r, c)| black(img.get(r as usize, c as usize)))
}

fn image_from_points(n: usize, pts: &HashSet<Pt>) -> Option<OrderedStructure> {
    Some(
        Image::from_fn(n, n, 2, |r, c| u8::from(pts.contains(&(r as i64, c as i64))))
            .ok()?
            .into(),
    )
}

/// The black set equals the grid points of its real convex hull.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConvexImage;

/// Grid points in a random intersection of half-planes around a random center.
fn random_convex_points(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HashSet<Pt> {
    let cr = rng.gen_range(0.0..n as f64 - 1.0 + f64::EPSILON);
    let cc = rng.gen_range(0.0..n as f64 - 1.0 + f64::EPSILON);
    let planes: Vec<(f64, f64, f64)> = (0..rng.gen_range(3..7))
        .map(|_| {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            (th.cos(), th.sin(), rng.gen_range(0.5..(scale * n as f64).max(1.0)))
        })
        .collect();
    let mut pts = HashSet::new();
    for r in 0..n {
        for c in 0..n {
            let (dr, dc) = (r as f64 - cr, c as f64 - cc);
            if planes.iter().all(|&(u, v, d)| dr * u + dc * v <= d) {
                pts.insert((r as i64, c as i64));
            }
        }
    }
    pts
}

impl Property for ConvexImage {
    fn name(&self) -> String {
        "convex_image".into()
    }

    fn kind(&self) -> StructureKind {
        StructureKind::Image
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        let Some(img) = f.as_image() else { return false };
        hull_is_black(img, &black_points(img))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            sampler: true,
            ..Default::default()
        }
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        for _ in 0..20 {
            let pts = random_convex_points(n, 0.5, rng);
            let img = image_from_points(n, &pts)?;
            if self.contains(&img) {
                return Some(img);
            }
        }
        image_from_points(n, &HashSet::new())
    }
}

/// Black and white pixels are separated by a straight line.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfPlane;

impl Property for HalfPlane {
    fn name(&self) -> String {
        "half_plane".into()
    }

    fn kind(&self) -> StructureKind {
        StructureKind::Image
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        let Some(img) = f.as_image() else { return false };
        let b = convex_hull(&black_points(img));
        let w = convex_hull(&white_points(img));
        !hulls_intersect(&b, &w)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            sampler: true,
            ..Default::default()
        }
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        for _ in 0..20 {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let (u, v) = (th.cos(), th.sin());
            let cr = rng.gen_range(0.0..n as f64);
            let cc = rng.gen_range(0.0..n as f64);
            let img: OrderedStructure = Image::from_fn(n, n, 2, |r, c| {
                u8::from((r as f64 - cr) * u + (c as f64 - cc) * v > 0.0)
            })
            .ok()?
            .into();
            if self.contains(&img) {
                return Some(img);
            }
        }
        image_from_points(n, &HashSet::new())
    }
}

/// The black set is a union of at most t discretely convex sets.
#[derive(Debug, Clone, Copy)]
pub struct UnionOfConvex {
    pub t: usize,
    /// Black-pixel count up to which membership is decided by exact search.
    pub exact_cap: usize,
}

impl UnionOfConvex {
    pub fn new(t: usize) -> Self {
        UnionOfConvex { t, exact_cap: 16 }
    }

    fn exact(&self, img: &Image, pts: &[Pt]) -> bool {
        fn go(img: &Image, pts: &[Pt], i: usize, groups: &mut Vec<Vec<Pt>>, t: usize) -> bool {
            if i == pts.len() {
                return true;
            }
            for g in 0..groups.len() {
                groups[g].push(pts[i]);
                if hull_is_black(img, &groups[g]) && go(img, pts, i + 1, groups, t) {
                    return true;
                }
                groups[g].pop();
            }
            if groups.len() < t {
                groups.push(vec![pts[i]]);
                if go(img, pts, i + 1, groups, t) {
                    return true;
                }
                groups.pop();
            }
            false
        }
        go(img, pts, 0, &mut Vec::new(), self.t)
    }

    /// Greedy cover: grows each group from the first uncovered pixel. A
    /// success is a genuine decomposition; a failure is not a proof.
    fn greedy(&self, img: &Image, pts: &[Pt]) -> bool {
        let mut covered = vec![false; pts.len()];
        for _ in 0..self.t {
            let Some(start) = covered.iter().position(|c| !c) else { return true };
            let mut group = vec![pts[start]];
            covered[start] = true;
            for j in 0..pts.len() {
                if covered[j] {
                    continue;
                }
                group.push(pts[j]);
                if hull_is_black(img, &group) {
                    covered[j] = true;
                } else {
                    group.pop();
                }
            }
            // the group's hull may cover more pixels than those admitted
            let hull = convex_hull(&group);
            for (j, p) in pts.iter().enumerate() {
                if !covered[j] && crate::geometry::in_hull(&hull, *p) {
                    covered[j] = true;
                }
            }
        }
        covered.iter().all(|&c| c)
    }
}

impl Property for UnionOfConvex {
    fn name(&self) -> String {
        format!("union_of_convex:{}", self.t)
    }

    fn kind(&self) -> StructureKind {
        StructureKind::Image
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        let Some(img) = f.as_image() else { return false };
        let pts = black_points(img);
        if pts.len() <= self.exact_cap {
            self.exact(img, &pts)
        } else {
            let ok = self.greedy(img, &pts);
            if !ok {
                log::debug!("union_of_convex: greedy cover failed on {} black pixels", pts.len());
            }
            ok
        }
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            sampler: true,
            ..Default::default()
        }
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        for _ in 0..20 {
            let mut pts = HashSet::new();
            for _ in 0..self.t {
                pts.extend(random_convex_points(n, 0.25, rng));
            }
            let img = image_from_points(n, &pts)?;
            if self.contains(&img) {
                return Some(img);
            }
        }
        image_from_points(n, &HashSet::new())
    }
}

/// No two horizontally adjacent black pixels; the chessboard is a member.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHorizPair;

impl Property for NoHorizPair {
    fn name(&self) -> String {
        "no_horiz_pair".into()
    }

    fn kind(&self) -> StructureKind {
        StructureKind::Image
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        let Some(img) = f.as_image() else { return false };
        (0..img.rows())
            .all(|r| (1..img.cols()).all(|c| !(black(img.get(r, c - 1)) && black(img.get(r, c)))))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            distance_oracle: true,
            sampler: true,
            ..Default::default()
        }
    }

    /// A black run of length L needs exactly ⌊L/2⌋ whitened pixels.
    fn distance_oracle(&self, f: &OrderedStructure) -> Option<Rational> {
        let img = f.as_image()?;
        let mut flips = 0usize;
        for r in 0..img.rows() {
            let mut run = 0usize;
            for c in 0..img.cols() {
                if black(img.get(r, c)) {
                    run += 1;
                } else {
                    flips += run / 2;
                    run = 0;
                }
            }
            flips += run / 2;
        }
        Some(ratio(flips as i128, (img.rows() * img.cols()) as i128))
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        let mut prev_black = false;
        let img = Image::from_fn(n, n, 2, |_, c| {
            if c == 0 {
                prev_black = false;
            }
            let v = !prev_black && rng.gen_bool(0.5);
            prev_black = v;
            u8::from(v)
        })
        .ok()?;
        Some(img.into())
    }
}

pub fn chessboard(n: usize) -> Result<Image> {
    Image::from_fn(n, n, 2, |r, c| ((r + c + 1) % 2) as Symbol)
}

// ---------------------------------------------------------------- hereditary

/// A forbidden pattern: an ordered colored graph or a submatrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Graph(OrderedGraph),
    Matrix(Image),
}

impl Pattern {
    /// Base elements of the pattern (h).
    pub fn size(&self) -> usize {
        match self {
            Pattern::Graph(g) => g.n(),
            Pattern::Matrix(m) => m.rows() + m.cols(),
        }
    }

    fn kind(&self) -> StructureKind {
        match self {
            Pattern::Graph(_) => StructureKind::Graph,
            Pattern::Matrix(_) => StructureKind::Image,
        }
    }
}

/// Number of index sets carrying a copy of the pattern.
pub fn count_copies(f: &OrderedStructure, pattern: &Pattern) -> Result<u64> {
    match (f, pattern) {
        (OrderedStructure::Graph(g), Pattern::Graph(h)) => {
            let key = h.colors().to_vec();
            Ok(Combinations::new(g.n(), h.n())
                .filter(|set| g.induced_key(set) == key)
                .count() as u64)
        }
        (OrderedStructure::Image(img), Pattern::Matrix(m)) => {
            let rows: Vec<Vec<usize>> = Combinations::new(img.rows(), m.rows()).collect();
            let cols: Vec<Vec<usize>> = Combinations::new(img.cols(), m.cols()).collect();
            let mut count = 0u64;
            for rs in &rows {
                for cs in &cols {
                    let hit = rs.iter().enumerate().all(|(a, &r)| {
                        cs.iter()
                            .enumerate()
                            .all(|(b, &c)| img.get(r, c) == m.get(a, b))
                    });
                    count += u64::from(hit);
                }
            }
            Ok(count)
        }
        _ => param("pattern and structure kinds differ"),
    }
}

fn first_copy(f: &OrderedStructure, pattern: &Pattern) -> Option<Vec<usize>> {
    match (f, pattern) {
        (OrderedStructure::Graph(g), Pattern::Graph(h)) => {
            Combinations::new(g.n(), h.n()).find(|set| g.induced_key(set) == h.colors())
        }
        (OrderedStructure::Image(img), Pattern::Matrix(m)) => {
            for rs in Combinations::new(img.rows(), m.rows()) {
                for cs in Combinations::new(img.cols(), m.cols()) {
                    let hit = rs.iter().enumerate().all(|(a, &r)| {
                        cs.iter()
                            .enumerate()
                            .all(|(b, &c)| img.get(r, c) == m.get(a, b))
                    });
                    if hit {
                        return Some([rs, cs].concat());
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// Structures with no copy of a fixed pattern.
#[derive(Debug, Clone)]
pub struct Forbidden {
    pub pattern: Pattern,
}

impl Forbidden {
    pub fn ordered_subgraph(h: OrderedGraph) -> Self {
        Forbidden {
            pattern: Pattern::Graph(h),
        }
    }

    pub fn submatrix(m: Image) -> Self {
        Forbidden {
            pattern: Pattern::Matrix(m),
        }
    }

    fn pattern_sigma(&self) -> usize {
        match &self.pattern {
            Pattern::Graph(g) => g.sigma(),
            Pattern::Matrix(m) => m.sigma(),
        }
    }
}

impl Property for Forbidden {
    fn name(&self) -> String {
        let join = |v: &[Symbol]| v.iter().map(|s| s.to_string()).collect::<String>();
        match &self.pattern {
            Pattern::Graph(h) => {
                format!("forbidden_ordered_subgraph:{}:{}", h.n(), join(h.colors()))
            }
            Pattern::Matrix(m) => format!(
                "forbidden_submatrix:{}x{}:{}",
                m.rows(),
                m.cols(),
                join(m.pixels())
            ),
        }
    }

    fn kind(&self) -> StructureKind {
        self.pattern.kind()
    }

    fn contains(&self, f: &OrderedStructure) -> bool {
        f.kind() == self.kind() && first_copy(f, &self.pattern).is_none()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            sampler: true,
            ..Default::default()
        }
    }

    /// Random structure with copies repaired one value at a time.
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<OrderedStructure> {
        let sigma = self.pattern_sigma().max(2);
        let mut f: OrderedStructure = match &self.pattern {
            Pattern::Graph(_) => OrderedGraph::from_fn(n, sigma, |_, _| rng.gen_range(0..sigma) as Symbol)
                .ok()?
                .into(),
            Pattern::Matrix(_) => Image::from_fn(n, n, sigma, |_, _| rng.gen_range(0..sigma) as Symbol)
                .ok()?
                .into(),
        };
        for _ in 0..10 * f.values().len().max(1) {
            let Some(copy) = first_copy(&f, &self.pattern) else { return Some(f) };
            let cell = match &self.pattern {
                Pattern::Graph(_) => crate::structures::pair_index(n, copy[0], copy[1]),
                Pattern::Matrix(m) => copy[0] * n + copy[m.rows()],
            };
            let mut values = f.values().to_vec();
            values[cell] = ((values[cell] as usize + 1) % sigma) as Symbol;
            f = f.with_values(values).ok()?;
        }
        None
    }
}

// ---------------------------------------------------------------- catalog

pub fn catalog() -> Vec<Box<dyn Property>> {
    vec![
        Box::new(P111),
        Box::new(MonotoneString::default()),
        Box::new(ConvexImage),
        Box::new(HalfPlane),
        Box::new(UnionOfConvex::new(2)),
        Box::new(NoHorizPair),
        Box::new(Forbidden::ordered_subgraph(
            OrderedGraph::monochromatic(3, 1, 2).expect("triangle"),
        )),
        Box::new(Forbidden::submatrix(
            Image::new(2, 2, vec![1; 4], 2).expect("2x2 block"),
        )),
    ]
}

fn digits(s: &str) -> Result<Vec<Symbol>> {
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as Symbol)
                .ok_or_else(|| Error::Parse(format!("bad pattern digit {c:?}")))
        })
        .collect()
}

/// Looks a property up by its catalog name. Parameterised forms:
/// `monotone_string:<σ>`, `union_of_convex:<t>`,
/// `forbidden_ordered_subgraph:<h>:<pair colors>` and
/// `forbidden_submatrix:<a>x<b>:<entries>`.
pub fn by_name(name: &str) -> Result<Box<dyn Property>> {
    let mut it = name.split(':');
    let head = it.next().unwrap_or("");
    let args: Vec<&str> = it.collect();
    let num = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad number {s:?} in property {name:?}")))
    };
    Ok(match (head, args.as_slice()) {
        ("p111", []) => Box::new(P111),
        ("monotone_string", []) => Box::new(MonotoneString::default()),
        ("monotone_string", [s]) => Box::new(MonotoneString { sigma: num(s)? }),
        ("convex_image", []) => Box::new(ConvexImage),
        ("half_plane", []) => Box::new(HalfPlane),
        ("union_of_convex", []) => Box::new(UnionOfConvex::new(2)),
        ("union_of_convex", [t]) => Box::new(UnionOfConvex::new(num(t)?)),
        ("no_horiz_pair", []) => Box::new(NoHorizPair),
        ("forbidden_ordered_subgraph", []) => Box::new(Forbidden::ordered_subgraph(
            OrderedGraph::monochromatic(3, 1, 2)?,
        )),
        ("forbidden_ordered_subgraph", [h, colors]) => {
            let colors = digits(colors)?;
            let sigma = colors.iter().map(|&c| c as usize + 1).max().unwrap_or(1).max(2);
            Box::new(Forbidden::ordered_subgraph(OrderedGraph::new(num(h)?, colors, sigma)?))
        }
        ("forbidden_submatrix", []) => Box::new(Forbidden::submatrix(Image::new(2, 2, vec![1; 4], 2)?)),
        ("forbidden_submatrix", [dims, entries]) => {
            let (a, b) = dims
                .split_once('x')
                .ok_or_else(|| Error::Parse(format!("bad submatrix size {dims:?}")))?;
            let entries = digits(entries)?;
            let sigma = entries.iter().map(|&c| c as usize + 1).max().unwrap_or(1).max(2);
            Box::new(Forbidden::submatrix(Image::new(num(a)?, num(b)?, entries, sigma)?))
        }
        _ => return Err(Error::Parse(format!("unknown property {name:?}"))),
    })
}

// ---------------------------------------------------------------- profiles

#[derive(Debug, Clone, PartialEq)]
pub struct ERProfile {
    pub property: String,
    pub n: usize,
    pub budgets: Vec<f64>,
    /// Basic moves applied at each budget.
    pub moves: Vec<u64>,
    /// Running maximum of d_H(f', P) over the budgets so far.
    pub worst_dh: Vec<Rational>,
    /// Mean d_H(f', P) at each budget on its own.
    pub mean_dh: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Random basic move that keeps images images.
fn random_move(f: &OrderedStructure, rng: &mut ChaCha8Rng) -> usize {
    match f {
        OrderedStructure::Image(img) => {
            let (m, n) = (img.rows(), img.cols());
            let choices = (m - 1) + (n - 1);
            let k = rng.gen_range(0..choices);
            if k < m - 1 {
                k
            } else {
                m + (k - (m - 1))
            }
        }
        other => rng.gen_range(0..other.base_len() - 1),
    }
}

/// Number of moves available to `random_move`; zero means the structure
/// cannot be moved at all.
fn move_choices(f: &OrderedStructure) -> usize {
    match f {
        OrderedStructure::Image(img) => img.rows() + img.cols() - 2,
        other => other.base_len().saturating_sub(1),
    }
}

pub fn er_profile(
    p: &dyn Property,
    n: usize,
    budgets: &[f64],
    trials: u64,
    seed: u64,
) -> Result<ERProfile> {
    let caps = p.capabilities();
    if !caps.sampler {
        return Err(Error::Capability(format!("{} has no sampler", p.name())));
    }
    if budgets.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return param("budgets must lie in [0, 1]");
    }
    let mut order: Vec<usize> = (0..budgets.len()).collect();
    order.sort_by(|&a, &b| budgets[a].total_cmp(&budgets[b]));

    let probe = p
        .sample(n, &mut trial_rng(seed, 0))
        .ok_or_else(|| Error::Capability(format!("{} sampler produced nothing at n = {n}", p.name())))?;
    let base = probe.base_len();
    if !caps.distance_oracle {
        // fail fast instead of inside the parallel loop
        crate::metrics::exhaustive_distance(&probe, p).map(|_| ())?;
    }
    let moves: Vec<u64> = budgets
        .iter()
        .map(|b| (b * pairs(base) as f64).floor() as u64)
        .collect();

    // rows: trial, columns: budget index
    let per_trial: Vec<Result<Vec<Rational>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let f = p
                .sample(n, &mut rng)
                .ok_or_else(|| Error::Capability("sampler failed".into()))?;
            let mut out = vec![Rational::zero(); budgets.len()];
            for (bi, &m) in moves.iter().enumerate() {
                let mut g = f.clone();
                if move_choices(&g) > 0 {
                    for _ in 0..m {
                        let x = random_move(&g, &mut rng);
                        g = apply_basic_move(&g, x)?;
                    }
                }
                out[bi] = distance_to_property(&g, p)?;
            }
            Ok(out)
        })
        .collect();
    let mut rows = Vec::with_capacity(per_trial.len());
    for r in per_trial {
        rows.push(r?);
    }

    let mut worst = vec![Rational::zero(); budgets.len()];
    let mut mean = vec![0.0; budgets.len()];
    for bi in 0..budgets.len() {
        worst[bi] = rows.iter().map(|r| r[bi]).max().unwrap_or_default();
        mean[bi] = rows.iter().map(|r| to_f64(&r[bi])).sum::<f64>() / trials.max(1) as f64;
    }
    let mut running = Rational::zero();
    for &bi in &order {
        running = running.max(worst[bi]);
        worst[bi] = running;
    }
    Ok(ERProfile {
        property: p.name(),
        n,
        budgets: budgets.to_vec(),
        moves,
        worst_dh: worst,
        mean_dh: mean,
        trials,
        seed,
    })
}

// ---------------------------------------------------------------- certificates

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChessboardCertificate {
    pub n: usize,
    /// 0-based base-element indices of the basic moves (columns come after rows).
    pub moves: Vec<usize>,
    /// Moves / C(2n, 2).
    pub earthmover_budget: Rational,
    pub distance: Rational,
    pub moved: Image,
}

/// Chessboard with the second and third column of every block of four
/// consecutive columns exchanged.
pub fn chessboard_certificate(n: usize) -> Result<ChessboardCertificate> {
    if n == 0 || n % 4 != 0 {
        return param(format!("side must be a positive multiple of 4, got {n}"));
    }
    let board: OrderedStructure = chessboard(n)?.into();
    if !NoHorizPair.contains(&board) {
        return Err(Error::Parameter("chessboard is not a member".into()));
    }
    let moves: Vec<usize> = (0..n / 4).map(|q| n + 4 * q + 1).collect();
    let mut g = board;
    for &x in &moves {
        g = apply_basic_move(&g, x)?;
    }
    let distance = NoHorizPair
        .distance_oracle(&g)
        .ok_or_else(|| Error::Parameter("move left the image shape".into()))?;
    Ok(ChessboardCertificate {
        n,
        earthmover_budget: ratio(moves.len() as i128, pairs(2 * n) as i128),
        moves,
        distance,
        moved: g.as_image().cloned().expect("column moves keep images"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HereditaryReport {
    pub pattern_size: usize,
    pub n: usize,
    pub trials: u64,
    /// n^{h-2}.
    pub per_move_bound: u64,
    pub max_copies: u64,
    /// Largest drop in copy count caused by one basic move.
    pub max_drop: u64,
    pub drop_violations: u64,
    /// Cases where the shortest move sequence reaching zero copies was found.
    pub exhaustive_checked: u64,
    /// Cases where that sequence was shorter than copies / n^{h-2}.
    pub exhaustive_violations: u64,
    /// Smallest observed (moves needed) / (copies / n^{h-2}).
    pub min_ratio: Option<f64>,
}

const HEREDITARY_BFS_STATES: usize = 50_000;

/// Fewest basic moves to a structure with no copy, if found within the state cap.
fn moves_to_destroy(f: &OrderedStructure, pattern: &Pattern) -> Option<u64> {
    let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(f.values().to_vec());
    queue.push_back((f.clone(), 0u64));
    while let Some((g, d)) = queue.pop_front() {
        if first_copy(&g, pattern).is_none() {
            return Some(d);
        }
        for x in valid_moves(&g) {
            let h = apply_basic_move(&g, x).ok()?;
            if seen.insert(h.values().to_vec()) {
                if seen.len() > HEREDITARY_BFS_STATES {
                    return None;
                }
                queue.push_back((h, d + 1));
            }
        }
    }
    // every arrangement still has a copy
    None
}

fn valid_moves(f: &OrderedStructure) -> Vec<usize> {
    match f {
        OrderedStructure::Image(img) => (0..img.rows() - 1)
            .chain(img.rows()..img.rows() + img.cols() - 1)
            .collect(),
        other => (0..other.base_len().saturating_sub(1)).collect(),
    }
}

/// Counts pattern copies on random structures, checks that no basic move
/// removes more than n^{h-2} of them, and for small n finds the true number of
/// moves needed to remove all copies.
pub fn check_hereditary_er(
    pattern: &Pattern,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<HereditaryReport> {
    let h = pattern.size();
    if h > 4 {
        return capacity(format!("pattern size {h} exceeds 4"));
    }
    if n > 30 {
        return capacity(format!("n = {n} exceeds 30"));
    }
    let sigma = match pattern {
        Pattern::Graph(g) => g.sigma(),
        Pattern::Matrix(m) => m.sigma(),
    };
    let per_move_bound = (n as u64).pow(h.saturating_sub(2) as u32);
    let exhaustive = n <= 8 && matches!(pattern, Pattern::Graph(_)) || n <= 4;
    let mut report = HereditaryReport {
        pattern_size: h,
        n,
        trials,
        per_move_bound,
        max_copies: 0,
        max_drop: 0,
        drop_violations: 0,
        exhaustive_checked: 0,
        exhaustive_violations: 0,
        min_ratio: None,
    };
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let f: OrderedStructure = match pattern {
            Pattern::Graph(_) => OrderedGraph::from_fn(n, sigma, |_, _| rng.gen_range(0..sigma) as Symbol)?.into(),
            Pattern::Matrix(_) => Image::from_fn(n, n, sigma, |_, _| rng.gen_range(0..sigma) as Symbol)?.into(),
        };
        let copies = count_copies(&f, pattern)?;
        report.max_copies = report.max_copies.max(copies);
        for x in valid_moves(&f) {
            let g = apply_basic_move(&f, x)?;
            let after = count_copies(&g, pattern)?;
            let drop = copies.saturating_sub(after);
            report.max_drop = report.max_drop.max(drop);
            if drop > per_move_bound {
                report.drop_violations += 1;
            }
        }
        if exhaustive && copies > 0 {
            if let Some(d) = moves_to_destroy(&f, pattern) {
                report.exhaustive_checked += 1;
                let need = copies as f64 / per_move_bound as f64;
                if (d as f64) < need {
                    report.exhaustive_violations += 1;
                }
                let r = d as f64 / need;
                report.min_ratio = Some(report.min_ratio.map_or(r, |m: f64| m.min(r)));
            }
        }
    }
    Ok(report)
}

/// Copies of an a×b pattern that use two fixed adjacent rows: the most one
/// row move can destroy.
pub fn submatrix_move_bound(n: usize, a: usize, b: usize) -> u128 {
    if a < 2 {
        return 0;
    }
    binomial((n - 2) as u64, (a - 2) as u64) * binomial(n as u64, b as u64)
}

impl fmt::Display for ERProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.budgets.len() {
            writeln!(
                f,
                "{} moves={} worst={} mean={:.4}",
                self.budgets[i],
                self.moves[i],
                self.worst_dh[i].to_f64().unwrap_or(f64::NAN),
                self.mean_dh[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng;
    use crate::metrics::{exhaustive_distance, interval_histograms};

    fn bits(s: &str) -> OrderedStructure {
        OrderedString::from_bits(s).unwrap().into()
    }

    #[test]
    fn p111_examples() {
        assert!(P111.contains(&bits("110110")));
        assert!(!P111.contains(&bits("0111")));
        assert_eq!(P111.distance_oracle(&bits("111111111")), Some(ratio(3, 9)));
        assert_eq!(exhaustive_distance(&bits("111111111"), &P111).unwrap(), ratio(3, 9));
    }

    #[test]
    fn oracles_match_exhaustive_on_short_strings() {
        for n in 1..=8usize {
            for mask in 0..1u32 << n {
                let s: String = (0..n).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect();
                let f = bits(&s);
                for p in [&P111 as &dyn Property, &MonotoneString::default()] {
                    assert_eq!(
                        p.distance_oracle(&f).unwrap(),
                        exhaustive_distance(&f, p).unwrap(),
                        "{} on {s}",
                        p.name()
                    );
                }
            }
        }
    }

    #[test]
    fn monotone_examples() {
        let a = crate::structures::Alphabet::new(["a", "b"]).unwrap();
        let ba: OrderedStructure = OrderedString::parse("ba", &a).unwrap().into();
        assert_eq!(MonotoneString::default().distance_oracle(&ba), Some(ratio(1, 2)));
        assert_eq!(longest_non_decreasing(&[2, 0, 1, 1, 0, 3]), 4);
    }

    #[test]
    fn monotone_histogram_dp_matches_enumeration() {
        let mut r = rng(3);
        for sigma in [2usize, 3] {
            let p = MonotoneString { sigma };
            for _ in 0..30 {
                let n = r.gen_range(2..8);
                let t = r.gen_range(1..=n);
                let v: Vec<Symbol> = (0..n).map(|_| r.gen_range(0..sigma) as Symbol).collect();
                let s = OrderedString::new(v, sigma).unwrap();
                let parts = IntervalPartition::new(n, t).unwrap();
                let targets = interval_histograms(&s, &parts).unwrap();
                let fast = p.histogram_distance(&targets, &parts).unwrap();
                let slow = crate::metrics::exhaustive_histogram_distance(&targets, &parts, sigma, &p)
                    .unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn convex_and_half_plane() {
        let rect: OrderedStructure =
            Image::from_fn(6, 6, 2, |r, c| u8::from((1..4).contains(&r) && (2..5).contains(&c)))
                .unwrap()
                .into();
        assert!(ConvexImage.contains(&rect));
        assert!(HalfPlane.contains(&rect) == false);
        let two = Image::from_fn(5, 5, 2, |r, c| u8::from(r == 0 && (c == 0 || c == 4))).unwrap();
        assert!(!ConvexImage.contains(&two.clone().into()));
        assert!(UnionOfConvex::new(2).contains(&two.clone().into()));
        assert!(!UnionOfConvex::new(1).contains(&two.into()));
        let left = Image::from_fn(4, 4, 2, |_, c| u8::from(c < 2)).unwrap();
        assert!(HalfPlane.contains(&left.into()));
        let mut r = rng(9);
        for _ in 0..10 {
            assert!(ConvexImage.contains(&ConvexImage.sample(12, &mut r).unwrap()));
            assert!(HalfPlane.contains(&HalfPlane.sample(12, &mut r).unwrap()));
        }
    }

    #[test]
    fn no_horiz_pair_oracle_matches_exhaustive() {
        let mut r = rng(1);
        for _ in 0..30 {
            let img: OrderedStructure =
                Image::from_fn(3, 4, 2, |_, _| r.gen_range(0..2)).unwrap().into();
            assert_eq!(
                NoHorizPair.distance_oracle(&img).unwrap(),
                exhaustive_distance(&img, &NoHorizPair).unwrap()
            );
        }
    }

    #[test]
    fn chessboard_certificate_small() {
        let c = chessboard_certificate(8).unwrap();
        assert_eq!(c.distance, ratio(1, 4));
        assert_eq!(c.moves, vec![9, 13]);
        assert_eq!(c.earthmover_budget, ratio(2, 120));
    }

    #[test]
    fn copy_counts() {
        let all = Image::new(5, 5, vec![1; 25], 2).unwrap();
        let block = Pattern::Matrix(Image::new(2, 2, vec![1; 4], 2).unwrap());
        assert_eq!(count_copies(&all.into(), &block).unwrap(), 100);
        let empty = Image::new(5, 5, vec![0; 25], 2).unwrap();
        let p = Forbidden::submatrix(Image::new(2, 2, vec![1; 4], 2).unwrap());
        assert!(p.contains(&empty.clone().into()));
        assert_eq!(exhaustive_distance(&Image::new(2, 2, vec![0; 4], 2).unwrap().into(), &p).unwrap(), Rational::zero());
    }

    #[test]
    fn hereditary_report_small() {
        let tri = Pattern::Graph(OrderedGraph::monochromatic(3, 1, 2).unwrap());
        let rep = check_hereditary_er(&tri, 6, 5, 2).unwrap();
        assert_eq!(rep.drop_violations, 0);
        assert_eq!(rep.exhaustive_violations, 0);
    }

    #[test]
    fn profile_budget_zero_is_zero() {
        let prof = er_profile(&P111, 12, &[0.0, 0.1], 8, 4).unwrap();
        assert_eq!(prof.worst_dh[0], Rational::zero());
        assert!(prof.worst_dh[1] >= prof.worst_dh[0]);
        assert!(er_profile(&ConvexImage, 4, &[0.0], 2, 1).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for p in catalog() {
            let q = by_name(&p.name()).unwrap();
            assert_eq!(q.name(), p.name());
        }
        assert!(by_name("nope").is_err());
    }
}
