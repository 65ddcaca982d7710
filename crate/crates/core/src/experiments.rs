//! Named experiments. Each one checks a family of claims against an
//! independent oracle and returns rows for a CSV report plus pass/fail checks.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hull_grid_points};
use crate::imageboundary::{self as ib, Decomposition};
use crate::limits::Limits;
use crate::math::{int, pairs, ratio, to_f64, trial_rng, Rational};
use crate::metrics::{
    earthmover_distance, inversions, min_basic_moves, mixing_set, q_statistic, variation_distance,
    EarthmoverMode, QMode,
};
use crate::properties::{chessboard_certificate, MonotoneString, Property, P111};
use crate::regularity::{
    is_regular_pair, satisfies_instance, PairMode, Refinement, RegularityInstance, Verdict,
};
use crate::structures::{
    apply_basic_move, apply_permutation, Image, OrderedGraph, OrderedString, OrderedStructure,
    Permutation, Symbol,
};
use crate::testers::{
    simupiece_variation_exact, simupiece_variation_sampled, string_er_test,
    CanonicalTest, KeyKind,
};

/// One experiment as written in a config file. Unset parameters take the
/// experiment's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn new(name: &str, seed: u64) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            seed,
            sizes: None,
            trials: None,
            count: None,
            eps: None,
            deltas: None,
            gamma: None,
            q: None,
            ks: None,
            ts: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.name)));
        if !EXPERIMENTS.iter().any(|(n, _)| *n == self.name) {
            return bad("unknown experiment".into());
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("eps = {e} outside (0, 1)"));
            }
        }
        if let Some(ds) = &self.deltas {
            if ds.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
                return bad("deltas must lie in (0, 1)".into());
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return bad(format!("gamma = {g} outside (0, 1]"));
            }
        }
        if self.q == Some(0) || self.trials == Some(0) {
            return bad("q and trials must be positive".into());
        }
        if self.ks.as_ref().is_some_and(|ks| ks.contains(&0)) || self.ts.as_ref().is_some_and(|ts| ts.contains(&0)) {
            return bad("ks and ts must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    /// Extra `# key: value` lines.
    pub notes: Vec<(String, String)>,
}

impl Report {
    fn new(experiment: &str, columns: &[&str]) -> Self {
        Report {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        });
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("mixing-equivalence", "BFS basic-move distance equals inversion count for every permutation"),
    ("earthmover-mixing", "structure-space BFS equals min-over-isomorphisms inversions on small graphs"),
    ("canonical-stability", "one basic move changes canonical acceptance by at most d_e·C(q,2)"),
    ("er-transfer", "earthmover closeness transfers to Hamming distance on all short binary strings"),
    ("simupiece-exact", "exact variation distance of t-simulated piecewise sampling, monotone in t"),
    ("simupiece-montecarlo", "sampled variation distance of simulated sampling at the proof's block size"),
    ("string-er-test", "histogram-based ER string test on monotone strings"),
    ("appendix-a-lemmas", "boundary, encircling, path cover and recoloring checks on an image corpus"),
    ("sparse-boundary-scaling", "worst Hamming change of disk images under bounded move schedules"),
    ("chessboard-certificate", "a few column swaps push the chessboard 1/4-far from its property"),
    ("qk-statistic-bound", "q-statistic versus k-separated statistic within q²/2k"),
    ("regularity-checkers", "planted pair regularity and a tiny regularity instance"),
];

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.name.as_str() {
        "mixing-equivalence" => mixing_equivalence(cfg),
        "earthmover-mixing" => earthmover_mixing(cfg),
        "canonical-stability" => canonical_stability(cfg),
        "er-transfer" => er_transfer(cfg),
        "simupiece-exact" => simupiece_exact(cfg),
        "simupiece-montecarlo" => simupiece_montecarlo(cfg),
        "string-er-test" => string_er(cfg),
        "appendix-a-lemmas" => appendix_a(cfg),
        "sparse-boundary-scaling" => sparse_boundary(cfg),
        "chessboard-certificate" => chessboard(cfg),
        "qk-statistic-bound" => qk_bound(cfg),
        "regularity-checkers" => regularity_checkers(cfg),
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    }?;
    let secs = start.elapsed().as_secs_f64();
    if let Some(limit) = runtime_target(&cfg.name) {
        report.check("runtime", secs < limit, format!("{secs:.2} s (target < {limit} s)"));
    }
    report.note("elapsed_seconds", format!("{secs:.3}"));
    Ok(report)
}

fn runtime_target(name: &str) -> Option<f64> {
    match name {
        "mixing-equivalence" => Some(5.0),
        "earthmover-mixing" => Some(60.0),
        "string-er-test" => Some(120.0),
        "sparse-boundary-scaling" => Some(600.0),
        _ => None,
    }
}

fn sizes(cfg: &ExperimentConfig, default: &[usize]) -> Vec<usize> {
    cfg.sizes.clone().unwrap_or_else(|| default.to_vec())
}

fn fmt_r(r: &Rational) -> String {
    r.to_string()
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

fn random_graph(n: usize, sigma: usize, seed: u64, idx: u64) -> OrderedGraph {
    let mut rng = trial_rng(seed, idx);
    OrderedGraph::from_fn(n, sigma, |_, _| rng.gen_range(0..sigma) as Symbol).expect("valid graph")
}

// ---------------------------------------------------------------- 1

fn mixing_equivalence(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["n", "permutations", "mismatches", "status"]);
    let mut total = 0u64;
    let mut bad = 0u64;
    for n in sizes(cfg, &[1, 2, 3, 4, 5, 6]) {
        if n == 0 {
            continue;
        }
        let perms: Vec<Permutation> = Permutation::all(n).collect();
        let res: Result<Vec<bool>> = perms
            .par_iter()
            .map(|p| {
                let bfs = min_basic_moves(p)?;
                let set = mixing_set(p);
                Ok(bfs == set.absolute && bfs == inversions(p.as_slice()))
            })
            .collect();
        match res {
            Ok(v) => {
                let miss = v.iter().filter(|ok| !**ok).count() as u64;
                total += v.len() as u64;
                bad += miss;
                rep.row(vec![n.to_string(), v.len().to_string(), miss.to_string(), "ok".into()]);
            }
            Err(e) => rep.row(vec![n.to_string(), "0".into(), "0".into(), e.to_string()]),
        }
    }
    rep.check("bfs_equals_inversions", bad == 0, format!("{total} permutations, {bad} mismatches"));
    Ok(rep)
}

// ---------------------------------------------------------------- 2

/// Distances from g to every graph reachable by basic moves.
fn bfs_orbit(g: &OrderedGraph) -> Result<HashMap<Vec<Symbol>, u64>> {
    let start: OrderedStructure = g.clone().into();
    let mut dist = HashMap::from([(start.values().to_vec(), 0u64)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[s.values()];
        for x in 0..s.base_len().saturating_sub(1) {
            let t = apply_basic_move(&s, x)?;
            if !dist.contains_key(t.values()) {
                dist.insert(t.values().to_vec(), d + 1);
                queue.push_back(t);
            }
        }
    }
    Ok(dist)
}

fn earthmover_mixing(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["n", "graphs", "isomorphic_pairs", "mismatches", "status"]);
    let mut bad_total = 0u64;
    let mut pairs_total = 0u64;
    for n in sizes(cfg, &[2, 3, 4, 5]) {
        let m = pairs(n);
        if m > 16 {
            rep.row(vec![n.to_string(), "0".into(), "0".into(), "0".into(), "capacity error: more than 2^16 graphs".into()]);
            continue;
        }
        let perms: Vec<Permutation> = Permutation::all(n).collect();
        let per_graph: Result<Vec<(u64, u64)>> = (0u32..1 << m)
            .into_par_iter()
            .map(|mask| {
                let colors: Vec<Symbol> = (0..m).map(|b| (mask >> b & 1) as Symbol).collect();
                let g = OrderedGraph::new(n, colors, 2)?;
                let bfs = bfs_orbit(&g)?;
                // min over isomorphisms of the inversion count, by enumeration
                let mut best: HashMap<Vec<Symbol>, u64> = HashMap::new();
                let gs: OrderedStructure = g.clone().into();
                for p in &perms {
                    let h = apply_permutation(&gs, p)?;
                    let inv = inversions(p.as_slice());
                    let e = best.entry(h.values().to_vec()).or_insert(inv);
                    *e = (*e).min(inv);
                }
                let mut bad = 0u64;
                for (h, &b) in &best {
                    let hs: OrderedStructure = OrderedGraph::new(n, h.clone(), 2)?.into();
                    let em = earthmover_distance(&gs, &hs, EarthmoverMode::Exact)?;
                    let witness_ok = em
                        .witness
                        .as_ref()
                        .is_some_and(|w| apply_permutation(&gs, w).map(|x| x == hs).unwrap_or(false));
                    if bfs.get(h) != Some(&b) || em.distance.absolute() != Some(b) || !witness_ok {
                        bad += 1;
                    }
                }
                if bfs.len() != best.len() {
                    bad += 1;
                }
                Ok((best.len() as u64, bad))
            })
            .collect();
        match per_graph {
            Ok(v) => {
                let p: u64 = v.iter().map(|x| x.0).sum();
                let b: u64 = v.iter().map(|x| x.1).sum();
                pairs_total += p;
                bad_total += b;
                rep.row(vec![n.to_string(), (1u64 << m).to_string(), p.to_string(), b.to_string(), "ok".into()]);
            }
            Err(e) => rep.row(vec![n.to_string(), "0".into(), "0".into(), "0".into(), e.to_string()]),
        }
    }
    rep.check(
        "bfs_equals_mixingness",
        bad_total == 0,
        format!("{pairs_total} ordered isomorphic pairs, {bad_total} mismatches"),
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 3

fn canonical_stability(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["graph", "n", "move", "changed", "d_e", "max_gap_q2", "max_gap_q3", "ok"]);
    let n = sizes(cfg, &[12])[0];
    let count = cfg.count.unwrap_or(100);
    let mut pool = Vec::new();
    for mask in 0..4u64 {
        pool.push(CanonicalTest::from_mask(2, 2, KeyKind::Pairs, mask)?);
    }
    for mask in 0..256u64 {
        pool.push(CanonicalTest::from_mask(3, 2, KeyKind::Pairs, mask)?);
    }
    let rows: Result<Vec<(Vec<String>, bool)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let g: OrderedStructure = random_graph(n, 2, cfg.seed, i).into();
            let x = trial_rng(cfg.seed ^ 0x5eed, i).gen_range(0..n - 1);
            let h = apply_basic_move(&g, x)?;
            // one move: d_e is 0 or exactly 1/C(n,2)
            let d_e = if g == h { Rational::zero() } else { ratio(1, pairs(n) as i128) };
            let mut gaps = [Rational::zero(), Rational::zero()];
            let mut ok = true;
            for t in &pool {
                let gap = (t.exact_acceptance(&g)? - t.exact_acceptance(&h)?).abs();
                let bound = d_e * int(pairs(t.q()) as i128);
                ok &= gap <= bound;
                let slot = &mut gaps[t.q() - 2];
                *slot = (*slot).max(gap);
            }
            Ok((
                vec![
                    i.to_string(),
                    n.to_string(),
                    (x + 1).to_string(),
                    (g != h).to_string(),
                    fmt_r(&d_e),
                    fmt_r(&gaps[0]),
                    fmt_r(&gaps[1]),
                    ok.to_string(),
                ],
                ok,
            ))
        })
        .collect();
    let rows = rows?;
    let fails = rows.iter().filter(|r| !r.1).count();
    for (r, _) in rows {
        rep.row(r);
    }
    rep.check(
        "acceptance_gap_within_bound",
        fails == 0,
        format!("{count} graphs × {} tables, {fails} graphs violate", pool.len()),
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 4

fn er_transfer(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(
        &cfg.name,
        &["property", "n", "ordered_pairs", "checked", "violations", "proven_bound_valid"],
    );
    let props: Vec<Box<dyn Property>> = vec![Box::new(P111), Box::new(MonotoneString::default())];
    let mut total_viol = 0u64;
    let mut bound_ok_all = true;
    for p in &props {
        for n in sizes(cfg, &[2, 3, 4, 5, 6, 7, 8, 9, 10]) {
            if n < 2 || n > 16 {
                rep.row(vec![p.name(), n.to_string(), "0".into(), "0".into(), "0".into(), "capacity error".into()]);
                continue;
            }
            let norm = pairs(n) as i128;
            let strings: Vec<OrderedStructure> = (0u32..1 << n)
                .map(|m| OrderedString::new((0..n).map(|b| (m >> b & 1) as Symbol).collect(), 2).map(Into::into))
                .collect::<Result<_>>()?;
            let dh: Vec<Rational> = strings
                .iter()
                .map(|s| p.distance_oracle(s).ok_or_else(|| Error::Capability("no oracle".into())))
                .collect::<Result<_>>()?;
            // classes by weight: d_e is finite only inside one
            let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for m in 0u32..1 << n {
                classes.entry(m.count_ones()).or_default().push(m as usize);
            }
            let d_e = |a: usize, b: usize| -> Result<u64> {
                let r = earthmover_distance(&strings[a], &strings[b], EarthmoverMode::Exact)?;
                r.distance.absolute().ok_or_else(|| Error::Parameter("same weight must be isomorphic".into()))
            };
            // D(j): fewest moves from a member to a string more than j/n far
            let mut dmin: Vec<Option<u64>> = vec![None; n + 1];
            let mut moves: HashMap<(usize, usize), u64> = HashMap::new();
            for class in classes.values() {
                for &a in class {
                    for &b in class {
                        let m = d_e(a, b)?;
                        moves.insert((a, b), m);
                        if dh[a].is_zero() {
                            for (j, slot) in dmin.iter_mut().enumerate() {
                                if dh[b] > ratio(j as i128, n as i128) {
                                    *slot = Some(slot.map_or(m, |v: u64| v.min(m)));
                                }
                            }
                        }
                    }
                }
            }
            // δ = m/C(n,2) is a valid resilience value at ε = j/n iff m < D(j)
            let (mut checked, mut viol, mut ordered) = (0u64, 0u64, 0u64);
            for (&(a, b), &m) in &moves {
                ordered += 1;
                let Some(j) = (0..=n).find(|&j| dmin[j].map_or(true, |d| m < d)) else { continue };
                checked += 1;
                let eps = ratio(j as i128, n as i128);
                if dh[a] > dh[b] + eps {
                    viol += 1;
                }
            }
            let bound_ok = match p.er_bound(0.5) {
                None => "n/a".to_string(),
                Some(_) => {
                    let ok = (0..n).all(|j| {
                        let eps = j as f64 / n as f64;
                        let bound = p.er_bound(eps).unwrap_or(0.0);
                        dmin[j].map_or(true, |d| bound < d as f64 / norm as f64)
                    });
                    bound_ok_all &= ok;
                    ok.to_string()
                }
            };
            total_viol += viol;
            rep.row(vec![
                p.name(),
                n.to_string(),
                ordered.to_string(),
                checked.to_string(),
                viol.to_string(),
                bound_ok,
            ]);
        }
    }
    rep.check("transfer_inequality", total_viol == 0, format!("{total_viol} violations"));
    rep.check(
        "monotone_bound_below_exact_profile",
        bound_ok_all,
        "ε²/2 < exact finite-n resilience for every ε = j/n",
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 5

fn simupiece_exact(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["n", "plan", "t", "variation", "variation_f64", "status"]);
    let n = sizes(cfg, &[12])[0];
    let ts = cfg.ts.clone().unwrap_or_else(|| vec![2, 3, 4, 5]);
    let plans: Vec<Vec<usize>> = vec![vec![1, 1], vec![2, 0], vec![0, 2]];
    let mut monotone = true;
    let mut bounded = true;
    for plan in &plans {
        let mut last: Option<Rational> = None;
        for &t in &ts {
            match simupiece_variation_exact(n, plan, t) {
                Ok(v) => {
                    if let Some(prev) = last {
                        monotone &= v <= prev;
                    }
                    bounded &= v <= Rational::one();
                    last = Some(v);
                    rep.row(vec![n.to_string(), format!("{plan:?}"), t.to_string(), fmt_r(&v), fmt_f(to_f64(&v)), "ok".into()]);
                }
                Err(e) => rep.row(vec![n.to_string(), format!("{plan:?}"), t.to_string(), String::new(), String::new(), e.to_string()]),
            }
        }
    }
    rep.check("monotone_non_increasing_in_t", monotone, format!("plans {plans:?}, t ∈ {ts:?}"));
    rep.check("at_most_one", bounded, "");
    Ok(rep)
}

fn simupiece_montecarlo(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["n", "k", "q", "t", "tk", "trials", "bins", "estimate", "sigma", "bound", "status"]);
    let n = sizes(cfg, &[10_000])[0];
    let (k, q) = (2usize, cfg.q.unwrap_or(2));
    let delta = 1.0 / 3.0;
    let trials = cfg.trials.unwrap_or(20_000);
    let bins = 8;
    // 600·k⁴·q²·δ⁻³ at δ = 1/3
    let paper_t = 600 * k.pow(4) * q * q * 27;
    let plan = vec![q / 2 + q % 2, q / 2];
    let run = |n: usize, t: usize, seed: u64| simupiece_variation_sampled(n, &plan, t, trials, bins, seed);
    let at_paper = run(n, paper_t, cfg.seed);
    let criterion = match &at_paper {
        Ok(v) => {
            rep.row(row_mc(n, k, q, paper_t, trials, bins, Some(v), delta, "ok"));
            v.estimate <= delta + 3.0 * v.sigma
        }
        Err(e) => {
            rep.row(row_mc(n, k, q, paper_t, trials, bins, None, delta, &e.to_string()));
            false
        }
    };
    rep.check(
        "distance_at_paper_constant",
        criterion,
        match &at_paper {
            Ok(v) => format!("estimate {:.4} ± {:.4}", v.estimate, v.sigma),
            Err(_) => format!("t = {paper_t} needs tk = {} > n = {n}", paper_t * k),
        },
    );
    // supplementary: the same t on the smallest input that holds tk indices,
    // and smaller t at the requested n
    let mut supp_ok = true;
    let big = paper_t * k + 128;
    for (nn, t) in [(big, paper_t), (n, n / (10 * k)), (n, n / k / 2)] {
        match run(nn, t, cfg.seed.wrapping_add(t as u64)) {
            Ok(v) => {
                supp_ok &= v.estimate <= delta + 3.0 * v.sigma;
                rep.row(row_mc(nn, k, q, t, trials, bins, Some(&v), delta, "supplementary"));
            }
            Err(e) => rep.row(row_mc(nn, k, q, t, trials, bins, None, delta, &e.to_string())),
        }
    }
    rep.check("supplementary_within_bound", supp_ok, format!("n = {big} at the paper t, and smaller t at n = {n}"));
    Ok(rep)
}

#[allow(clippy::too_many_arguments)]
fn row_mc(
    n: usize,
    k: usize,
    q: usize,
    t: usize,
    trials: u64,
    bins: usize,
    v: Option<&crate::testers::SampledVariation>,
    delta: f64,
    status: &str,
) -> Vec<String> {
    vec![
        n.to_string(),
        k.to_string(),
        q.to_string(),
        t.to_string(),
        (t * k).to_string(),
        trials.to_string(),
        bins.to_string(),
        v.map_or(String::new(), |v| fmt_f(v.estimate)),
        v.map_or(String::new(), |v| fmt_f(v.sigma)),
        fmt_f(delta),
        status.to_string(),
    ]
}

// ---------------------------------------------------------------- 6

/// A string at distance > ε from monotone, by the exact oracle.
fn far_string(n: usize, eps: f64, p: &MonotoneString, seed: u64, idx: u64) -> OrderedString {
    let mut rng = trial_rng(seed, idx);
    loop {
        let bits: Vec<Symbol> = if idx % 2 == 0 {
            (0..n).map(|_| rng.gen_range(0..2)).collect()
        } else {
            // ones first, then zeros, with noise
            let cut = rng.gen_range(n / 4..3 * n / 4);
            (0..n)
                .map(|i| {
                    let b = u8::from(i < cut);
                    if rng.gen_bool(0.1) {
                        1 - b
                    } else {
                        b
                    }
                })
                .collect()
        };
        let s = OrderedString::new(bits, 2).expect("binary");
        let d = p.distance_oracle(&s.clone().into()).expect("oracle");
        if to_f64(&d) > eps {
            return s;
        }
    }
}

fn string_er(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["input", "class", "n", "distance", "t", "samples", "r", "accept"]);
    let n = sizes(cfg, &[3000])[0];
    let eps = cfg.eps.unwrap_or(0.2);
    let count = cfg.count.unwrap_or(500);
    let p = MonotoneString::default();
    let delta = |e: f64| p.er_bound(e).unwrap_or(0.0);
    let runs: Result<Vec<Vec<String>>> = (0..2 * count as u64)
        .into_par_iter()
        .map(|i| {
            let (class, s) = if i < count as u64 {
                let s = p.sample(n, &mut trial_rng(cfg.seed, i)).expect("sampler");
                ("member", s.as_string().cloned().expect("string"))
            } else {
                ("far", far_string(n, eps, &p, cfg.seed, i))
            };
            let d = p.distance_oracle(&s.clone().into()).expect("oracle");
            let r = string_er_test(&s, &p, eps, &delta, cfg.seed.wrapping_mul(31).wrapping_add(i))?;
            Ok(vec![
                i.to_string(),
                class.into(),
                n.to_string(),
                fmt_r(&d),
                r.t.to_string(),
                r.samples.to_string(),
                fmt_f(to_f64(&r.r)),
                r.accept.to_string(),
            ])
        })
        .collect();
    let runs = runs?;
    let rate = |class: &str, want: &str| {
        let sel: Vec<&Vec<String>> = runs.iter().filter(|r| r[1] == class).collect();
        let hits = sel.iter().filter(|r| r[7] == want).count() as f64;
        let m = sel.len().max(1) as f64;
        let p = hits / m;
        (p, (p * (1.0 - p) / m).sqrt())
    };
    let (acc, acc_s) = rate("member", "true");
    let (rej, rej_s) = rate("far", "false");
    for r in runs {
        rep.row(r);
    }
    let target = 2.0 / 3.0;
    rep.check("accept_members", acc >= target - 3.0 * acc_s, format!("rate {acc:.4}, σ {acc_s:.4}"));
    rep.check("reject_far", rej >= target - 3.0 * rej_s, format!("rate {rej:.4}, σ {rej_s:.4}"));
    Ok(rep)
}

// ---------------------------------------------------------------- 7

fn paint_disk(px: &mut [Symbol], n: usize, cr: f64, cc: f64, rad: f64, color: Symbol) {
    for r in 0..n {
        for c in 0..n {
            let (dr, dc) = (r as f64 - cr, c as f64 - cc);
            if dr * dr + dc * dc <= rad * rad {
                px[r * n + c] = color;
            }
        }
    }
}

/// Test images: random fills, convex shapes, rings, chessboards and planted
/// nested shapes, sides 8..=max_n, all with a white border. The category is
/// returned with each image.
pub fn image_corpus(count: usize, max_n: usize, seed: u64) -> Vec<(&'static str, Image)> {
    let max_n = max_n.max(8);
    (0..count as u64)
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let n = rng.gen_range(8..=max_n);
            let cat = match i % 20 {
                0..=5 => "random",
                6..=9 => "convex",
                10..=12 => "ring",
                13 => "chessboard",
                _ => "planted",
            };
            let img = match cat {
                "random" => {
                    let p = [0.1, 0.3, 0.5, 0.7][rng.gen_range(0..4)];
                    Image::from_fn(n, n, 2, |_, _| u8::from(rng.gen_bool(p))).expect("image")
                }
                "convex" => {
                    let pts: Vec<(i64, i64)> = (0..rng.gen_range(3..12))
                        .map(|_| (rng.gen_range(1..n as i64 - 1), rng.gen_range(1..n as i64 - 1)))
                        .collect();
                    let hull = convex_hull(&pts);
                    let mut px = vec![0; n * n];
                    for (r, c) in hull_grid_points(&hull, n, n) {
                        px[r as usize * n + c as usize] = 1;
                    }
                    Image::new(n, n, px, 2).expect("image")
                }
                "ring" => {
                    if i % 2 == 0 {
                        ib::ring_image(n)
                    } else {
                        let mut px = vec![0; n * n];
                        let c = (n as f64 - 1.0) / 2.0;
                        let outer = rng.gen_range(0.25..0.45) * n as f64;
                        let width = rng.gen_range(1.0..(outer / 2.0).max(1.5));
                        paint_disk(&mut px, n, c, c, outer, 1);
                        paint_disk(&mut px, n, c, c, outer - width, 0);
                        Image::new(n, n, px, 2).expect("image")
                    }
                }
                "chessboard" => Image::from_fn(n, n, 2, |r, c| ((r + c + 1) % 2) as Symbol).expect("image"),
                _ => {
                    let mut px = vec![0; n * n];
                    for s in 0..rng.gen_range(1..8) {
                        let color = (s % 2 == 0) as Symbol;
                        let cr = rng.gen_range(0.0..n as f64);
                        let cc = rng.gen_range(0.0..n as f64);
                        let rad = rng.gen_range(1.0..n as f64 / 3.0);
                        if rng.gen_bool(0.5) {
                            paint_disk(&mut px, n, cr, cc, rad, color);
                        } else {
                            let (r0, c0) = (cr as usize, cc as usize);
                            for r in r0..(r0 + rad as usize).min(n) {
                                for c in c0..(c0 + rad as usize).min(n) {
                                    px[r * n + c] = color;
                                }
                            }
                        }
                    }
                    Image::new(n, n, px, 2).expect("image")
                }
            };
            (cat, whiten_border(&img))
        })
        .collect()
}

/// Same image with its outermost rows and columns set to white, so the
/// outer shape is the background and no frame has to be added.
fn whiten_border(img: &Image) -> Image {
    let (h, w) = (img.rows(), img.cols());
    Image::from_fn(h, w, img.sigma(), |r, c| {
        if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
            0
        } else {
            img.get(r, c)
        }
    })
    .expect("same shape")
}

#[derive(Debug, Clone, Default)]
struct ImageChecks {
    shapes: usize,
    pixel_violations: usize,
    encircled_fail: usize,
    cover_fail: usize,
    ratio_sum: f64,
    ratio_max: f64,
    covers: usize,
    regularize_fail: usize,
    b_over_black: f64,
}

fn check_image(img: &Image, delta: f64) -> Result<ImageChecks> {
    let dec = Decomposition::new(img)?;
    let rep = dec.boundary_report();
    let mut out = ImageChecks {
        shapes: dec.shapes().len(),
        pixel_violations: rep.boundary_pixel_violations,
        encircled_fail: usize::from(!rep.encircled_within_square),
        b_over_black: if rep.black_boundary > 0 {
            rep.total_boundary as f64 / rep.black_boundary as f64
        } else {
            0.0
        },
        ..Default::default()
    };
    for sh in dec.shapes().iter().filter(|s| !s.is_outer) {
        let b = dec.outer_boundary(sh.id)?;
        let path = dec.path_cover(sh.id)?;
        let covered = b.iter().all(|p| path.contains(p));
        let connected = path
            .windows(2)
            .all(|w| w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1) == 1);
        if !covered || !connected {
            out.cover_fail += 1;
        }
        let ratio = path.len() as f64 / b.len() as f64;
        out.ratio_sum += ratio;
        out.ratio_max = out.ratio_max.max(ratio);
        out.covers += 1;
    }
    let reg = ib::regularize(img, delta)?;
    if !reg.strictly_decreasing || !reg.per_iteration_bound_ok {
        out.regularize_fail += 1;
    }
    Ok(out)
}

fn appendix_a(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(
        &cfg.name,
        &[
            "category",
            "images",
            "shapes",
            "boundary_pixel_violations",
            "encircled_violations",
            "cover_failures",
            "mean_cover_ratio",
            "max_cover_ratio",
            "regularize_failures",
            "max_B_over_black_boundary",
        ],
    );
    let count = cfg.count.unwrap_or(500);
    let max_n = sizes(cfg, &[64]).into_iter().max().unwrap_or(64);
    let delta = cfg.deltas.as_ref().and_then(|d| d.first().copied()).unwrap_or(0.05);
    let corpus = image_corpus(count, max_n, cfg.seed);
    let results: Result<Vec<ImageChecks>> = corpus.par_iter().map(|(_, img)| check_image(img, delta)).collect();
    let results = results?;
    let mut by_cat: BTreeMap<&str, (usize, ImageChecks)> = BTreeMap::new();
    for ((cat, _), r) in corpus.iter().zip(&results) {
        let e = by_cat.entry(cat).or_default();
        e.0 += 1;
        let a = &mut e.1;
        a.shapes += r.shapes;
        a.pixel_violations += r.pixel_violations;
        a.encircled_fail += r.encircled_fail;
        a.cover_fail += r.cover_fail;
        a.ratio_sum += r.ratio_sum;
        a.covers += r.covers;
        a.ratio_max = a.ratio_max.max(r.ratio_max);
        a.regularize_fail += r.regularize_fail;
        a.b_over_black = a.b_over_black.max(r.b_over_black);
    }
    let mut tot = ImageChecks::default();
    for (cat, (imgs, a)) in &by_cat {
        rep.row(vec![
            cat.to_string(),
            imgs.to_string(),
            a.shapes.to_string(),
            a.pixel_violations.to_string(),
            a.encircled_fail.to_string(),
            a.cover_fail.to_string(),
            fmt_f(a.ratio_sum / a.covers.max(1) as f64),
            fmt_f(a.ratio_max),
            a.regularize_fail.to_string(),
            fmt_f(a.b_over_black),
        ]);
        tot.pixel_violations += a.pixel_violations;
        tot.encircled_fail += a.encircled_fail;
        tot.cover_fail += a.cover_fail;
        tot.regularize_fail += a.regularize_fail;
        tot.ratio_max = tot.ratio_max.max(a.ratio_max);
        tot.ratio_sum += a.ratio_sum;
        tot.covers += a.covers;
        tot.b_over_black = tot.b_over_black.max(a.b_over_black);
    }
    rep.note("images", corpus.len());
    rep.note("regularize_delta", delta);
    rep.check("boundary_pixel", tot.pixel_violations == 0, format!("{} violations", tot.pixel_violations));
    rep.check("encircled_at_most_B_squared", tot.encircled_fail == 0, format!("{} images violate", tot.encircled_fail));
    rep.check(
        "path_cover_covers_B",
        tot.cover_fail == 0,
        format!(
            "{} shapes, {} failures, |Γ|/|B| mean {:.3} max {:.3}",
            tot.covers,
            tot.cover_fail,
            tot.ratio_sum / tot.covers.max(1) as f64,
            tot.ratio_max
        ),
    );
    rep.check(
        "regularize_strictly_decreasing",
        tot.regularize_fail == 0,
        format!("{} images fail", tot.regularize_fail),
    );
    rep.check(
        "B_at_most_4_black_boundary",
        tot.b_over_black <= 4.0,
        format!("max |B(I)|/|black boundary| = {:.3}", tot.b_over_black),
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 8

fn sparse_boundary(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(
        &cfg.name,
        &[
            "n",
            "delta",
            "budget",
            "c",
            "trials",
            "worst_random",
            "worst_adversarial",
            "worst_schedule",
            "ratio",
            "worst_regularized",
        ],
    );
    let ns = sizes(cfg, &[32, 64, 128]);
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![0.0025, 0.01, 0.04]);
    let trials = cfg.trials.unwrap_or(1000);
    let mut betas = Vec::new();
    for &n in &ns {
        let img = ib::disk_image(n, 0.35);
        let mut runs = Vec::new();
        for (di, &d) in deltas.iter().enumerate() {
            let e = ib::er_experiment(&img, d, trials, cfg.seed.wrapping_add((n * 31 + di) as u64))?;
            rep.row(vec![
                n.to_string(),
                d.to_string(),
                e.budget.to_string(),
                fmt_f(e.c),
                trials.to_string(),
                fmt_f(e.worst_random),
                fmt_f(e.worst_adversarial),
                e.worst_schedule.clone(),
                fmt_f(e.ratio),
                e.worst_regularized.map_or(String::new(), fmt_f),
            ]);
            runs.push(e);
        }
        betas.push((n, ib::fit_beta(&runs)));
    }
    if betas.is_empty() {
        return Ok(rep);
    }
    let mean = betas.iter().map(|b| b.1).sum::<f64>() / betas.len() as f64;
    let spread = betas.iter().map(|b| (b.1 - mean).abs() / mean).fold(0.0, f64::max);
    let text: Vec<String> = betas.iter().map(|(n, b)| format!("β({n}) = {b:.4}")).collect();
    for (n, b) in &betas {
        rep.note(&format!("beta_n{n}"), fmt_f(*b));
    }
    rep.check(
        "beta_stable_within_20_percent",
        spread <= 0.2,
        format!("{}; max relative deviation {:.3}", text.join(", "), spread),
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 9

fn chessboard(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["n", "moves", "earthmover_budget", "two_over_n", "distance"]);
    let mut ok_budget = true;
    let mut ok_dist = true;
    for n in sizes(cfg, &[64]) {
        let c = chessboard_certificate(n)?;
        let two_over_n = ratio(2, n as i128);
        ok_budget &= c.earthmover_budget <= two_over_n;
        ok_dist &= c.distance >= ratio(1, 4);
        rep.row(vec![
            n.to_string(),
            c.moves.len().to_string(),
            fmt_r(&c.earthmover_budget),
            fmt_r(&two_over_n),
            fmt_r(&c.distance),
        ]);
    }
    rep.check("budget_at_most_2_over_n", ok_budget, "");
    rep.check("distance_at_least_quarter", ok_dist, "");
    Ok(rep)
}

// ---------------------------------------------------------------- 10

fn qk_bound(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["graph", "n", "q", "k", "variation", "bound", "ok"]);
    let n = sizes(cfg, &[12])[0];
    let q = cfg.q.unwrap_or(3);
    let ks = cfg.ks.clone().unwrap_or_else(|| vec![6, 9, 12]);
    let count = cfg.count.unwrap_or(50);
    let rows: Result<Vec<Vec<Vec<String>>>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let g = random_graph(n, 2, cfg.seed, i);
            let plain = q_statistic(&g, q, QMode::Plain)?;
            ks.iter()
                .map(|&k| {
                    let sep = q_statistic(&g, q, QMode::KSeparated(k))?;
                    let v = variation_distance(&plain, &sep)?;
                    let bound = ratio((q * q) as i128, 2 * k as i128);
                    Ok(vec![
                        i.to_string(),
                        n.to_string(),
                        q.to_string(),
                        k.to_string(),
                        fmt_r(&v),
                        fmt_r(&bound),
                        (v <= bound).to_string(),
                    ])
                })
                .collect()
        })
        .collect();
    let mut fails = 0;
    for r in rows?.into_iter().flatten() {
        fails += usize::from(r[6] != "true");
        rep.row(r);
    }
    rep.check("variation_within_q2_over_2k", fails == 0, format!("{fails} violations"));
    Ok(rep)
}

// ---------------------------------------------------------------- 11

/// A 16-vertex graph whose A×B colors (A = 0..8, B = 8..16) come from `cell`.
fn pair_graph(cell: impl Fn(usize, usize) -> Symbol) -> OrderedGraph {
    OrderedGraph::from_fn(16, 2, |i, j| {
        let (a, b) = (i.min(j), i.max(j));
        if a < 8 && b >= 8 {
            cell(a, b - 8)
        } else {
            0
        }
    })
    .expect("valid graph")
}

/// Planted pair with known truth: even indices are regular at γ = 1/2 by
/// construction (at most six flips in a monochromatic pair move any density
/// by at most 6/16), odd indices hide an opposite block of area < 32.
pub fn planted_pair(seed: u64, idx: u64) -> (OrderedGraph, bool) {
    let mut rng = trial_rng(seed, idx);
    let base = rng.gen_range(0..2) as Symbol;
    if idx % 2 == 0 {
        let flips = rng.gen_range(0..=6);
        let cells: Vec<usize> = sample(&mut rng, 64, flips).into_vec();
        (pair_graph(|a, b| if cells.contains(&(a * 8 + b)) { 1 - base } else { base }), true)
    } else {
        let (ra, rb) = loop {
            let (x, y) = (rng.gen_range(4..8), rng.gen_range(4..8));
            if x * y < 32 {
                break (x, y);
            }
        };
        let rows = sample(&mut rng, 8, ra).into_vec();
        let cols = sample(&mut rng, 8, rb).into_vec();
        (pair_graph(|a, b| if rows.contains(&a) && cols.contains(&b) { 1 - base } else { base }), false)
    }
}

/// Half-size opposite block, found by random subset pairs at γ = 1/8.
fn planted_block(seed: u64, idx: u64) -> OrderedGraph {
    let mut rng = trial_rng(seed, idx);
    let base = rng.gen_range(0..2) as Symbol;
    let rows = sample(&mut rng, 8, 4).into_vec();
    let cols = sample(&mut rng, 8, 4).into_vec();
    pair_graph(|a, b| if rows.contains(&a) && cols.contains(&b) { 1 - base } else { base })
}

fn regularity_checkers(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(&cfg.name, &["case", "kind", "gamma", "truth", "exact", "sampled", "correct"]);
    let count = cfg.count.unwrap_or(100) as u64;
    let a: Vec<usize> = (0..8).collect();
    let b: Vec<usize> = (8..16).collect();
    let half = ratio(1, 2);
    let rows: Result<Vec<(Vec<String>, bool)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (g, truth) = planted_pair(cfg.seed, i);
            let v = is_regular_pair(&g, &a, &b, &half, PairMode::Exact)?;
            let ok = v.is_regular() == truth;
            Ok((
                vec![
                    i.to_string(),
                    "planted".into(),
                    "1/2".into(),
                    if truth { "regular" } else { "irregular" }.into(),
                    format!("{:?}", v.verdict),
                    String::new(),
                    ok.to_string(),
                ],
                ok,
            ))
        })
        .collect();
    let rows = rows?;
    let correct = rows.iter().filter(|r| r.1).count();
    for (r, _) in rows {
        rep.row(r);
    }
    rep.check("planted_pairs_classified", correct as u64 == count, format!("{correct}/{count} correct"));

    let eighth = ratio(1, 8);
    let mut agree = 0;
    let blocks = 50u64;
    for i in 0..blocks {
        let g = planted_block(cfg.seed.wrapping_add(1), i);
        let e = is_regular_pair(&g, &a, &b, &eighth, PairMode::Exact)?;
        let s = is_regular_pair(&g, &a, &b, &eighth, PairMode::Sampled { samples: 2000, seed: cfg.seed.wrapping_add(i) })?;
        let ok = e.verdict == Verdict::Irregular && s.verdict == Verdict::Irregular;
        agree += usize::from(ok);
        rep.row(vec![
            (count + i).to_string(),
            "block".into(),
            "1/8".into(),
            "irregular".into(),
            format!("{:?}", e.verdict),
            format!("{:?}", s.verdict),
            ok.to_string(),
        ]);
    }
    rep.check("exact_and_sampled_agree", agree as u64 == blocks, format!("{agree}/{blocks} planted blocks"));

    // one color-1 edge across the intervals of an 8-vertex graph
    let g = OrderedGraph::from_fn(8, 2, |i, j| u8::from((i.min(j), i.max(j)) == (0, 4)))?;
    let r = Refinement::consecutive(8, 2, 2)?;
    let inst = RegularityInstance::from_refinement(&g, &r, Rational::one())?;
    let before = satisfies_instance(&g, &inst)?.satisfied;
    let mut moved = inst.clone();
    moved.densities.insert((0, 0, 1, 0), vec![Rational::zero(), Rational::one()]);
    let after = satisfies_instance(&g, &moved)?.satisfied;
    rep.check(
        "instance_flips_under_perturbation",
        before && !after,
        format!("satisfied before: {before}, after: {after}"),
    );
    Ok(rep)
}

/// Ready-made configs reproducing every acceptance check.
pub fn default_configs(seed: u64) -> Vec<ExperimentConfig> {
    EXPERIMENTS.iter().map(|(n, _)| ExperimentConfig::new(n, seed)).collect()
}

/// Caps a config file may override; unset fields keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub max_permutation_n: Option<usize>,
    pub max_exhaustive_bits: Option<u32>,
    pub max_subset_enumeration: Option<u64>,
    pub max_pair_side: Option<usize>,
    pub max_instance_n: Option<usize>,
    pub max_instance_parts: Option<usize>,
}

impl LimitsConfig {
    pub fn apply(&self, base: Limits) -> Limits {
        Limits {
            max_permutation_n: self.max_permutation_n.unwrap_or(base.max_permutation_n),
            max_exhaustive_bits: self.max_exhaustive_bits.unwrap_or(base.max_exhaustive_bits),
            max_subset_enumeration: self.max_subset_enumeration.unwrap_or(base.max_subset_enumeration),
            max_pair_side: self.max_pair_side.unwrap_or(base.max_pair_side),
            max_instance_n: self.max_instance_n.unwrap_or(base.max_instance_n),
            max_instance_parts: self.max_instance_parts.unwrap_or(base.max_instance_parts),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub limits: LimitsConfig,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for e in &cfg.experiment {
            e.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Hex SHA-256 of a config text, recorded with every report.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    /// `# key: value` provenance lines, `# check` lines, then the CSV table.
    pub fn to_csv(&self, provenance: &[(String, String)]) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# experiment: {}\n", self.experiment));
        for (k, v) in provenance.iter().chain(&self.notes) {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        for c in &self.checks {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("# check {} {mark}: {}\n", c.name, c.detail));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: &str) -> ExperimentConfig {
        ExperimentConfig::new(name, 7)
    }

    #[test]
    fn small_runs_pass() {
        let mut c = quick("mixing-equivalence");
        c.sizes = Some(vec![1, 2, 3, 4]);
        assert!(run_experiment(&c).unwrap().passed());
        let mut c = quick("earthmover-mixing");
        c.sizes = Some(vec![2, 3, 4]);
        assert!(run_experiment(&c).unwrap().passed());
        let mut c = quick("er-transfer");
        c.sizes = Some(vec![2, 4, 6]);
        assert!(run_experiment(&c).unwrap().passed());
        let mut c = quick("qk-statistic-bound");
        c.count = Some(3);
        assert!(run_experiment(&c).unwrap().passed());
    }

    #[test]
    fn empty_grid_is_empty_success() {
        let mut c = quick("mixing-equivalence");
        c.sizes = Some(vec![]);
        let r = run_experiment(&c).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.passed());
    }

    #[test]
    fn capacity_is_reported_per_row() {
        let mut c = quick("mixing-equivalence");
        c.sizes = Some(vec![3, 9]);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows[1][3].contains("capacity"));
    }

    #[test]
    fn config_validation() {
        let mut c = quick("nope");
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.name = "string-er-test".into();
        c.eps = Some(1.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn planted_truths_hold_under_brute_force() {
        let a: Vec<usize> = (0..8).collect();
        let b: Vec<usize> = (8..16).collect();
        for i in 0..6 {
            let (g, truth) = planted_pair(3, i);
            let v = is_regular_pair(&g, &a, &b, &ratio(1, 2), PairMode::Exact).unwrap();
            assert_eq!(v.is_regular(), truth);
        }
    }

    #[test]
    fn config_round_trip_and_csv() {
        let text = "[limits]\nmax_pair_side = 10\n\n[[experiment]]\nname = \"chessboard-certificate\"\nseed = 3\nsizes = [8]\n";
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.limits.max_pair_side, Some(10));
        assert_eq!(ConfigFile::parse(&cfg.to_toml()).unwrap(), cfg);
        assert!(ConfigFile::parse("[[experiment]]\nname = \"chessboard-certificate\"\n").is_err());
        let r = run_experiment(&cfg.experiment[0]).unwrap();
        let csv = r.to_csv(&[("config_sha256".into(), config_hash(text))]).unwrap();
        assert!(csv.contains("# check budget_at_most_2_over_n PASS"));
        assert!(csv.lines().any(|l| l.starts_with("n,moves")));
        assert_eq!(config_hash("").len(), 64);
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = image_corpus(20, 16, 1);
        let b = image_corpus(20, 16, 1);
        assert_eq!(a, b);
        assert!(a.iter().any(|(c, _)| *c == "chessboard"));
    }
}
