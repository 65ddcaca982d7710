//! Property tests against naive oracles written here from the definitions.

use ordtest::imageboundary::{self as ib, Decomposition};
use ordtest::math::{pairs, ratio};
use ordtest::metrics::{
    earthmover_distance, inversions, min_basic_moves, q_statistic, variation_distance, EarthmoverMode, QMode,
};
use ordtest::regularity::{is_regular_pair, PairMode, Refinement};
use ordtest::structures::{apply_permutation, Image, OrderedGraph, OrderedString, OrderedStructure, Permutation};
use proptest::prelude::*;

fn naive_inversions(v: &[usize]) -> u64 {
    let mut c = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            c += u64::from(v[i] > v[j]);
        }
    }
    c
}

fn perm_strategy(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
}

/// Pixels of a 4-connected single-color component that touch (4-adjacently)
/// the flood fill from outside the image that avoids the component.
fn naive_outer_boundary(img: &Image, comp: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let (h, w) = (img.rows() as i64 + 2, img.cols() as i64 + 2);
    let inside = |p: (i64, i64)| comp.contains(&((p.0 - 1) as usize, (p.1 - 1) as usize));
    let mut seen = vec![false; (h * w) as usize];
    let mut stack = vec![(0i64, 0i64)];
    seen[0] = true;
    while let Some((r, c)) = stack.pop() {
        for (dr, dc) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            let q = (r + dr, c + dc);
            if q.0 < 0 || q.1 < 0 || q.0 >= h || q.1 >= w {
                continue;
            }
            let i = (q.0 * w + q.1) as usize;
            if !seen[i] && !inside(q) {
                seen[i] = true;
                stack.push(q);
            }
        }
    }
    let mut out: Vec<(usize, usize)> = comp
        .iter()
        .copied()
        .filter(|&(r, c)| {
            let (r, c) = (r as i64 + 1, c as i64 + 1);
            [(0, 1), (1, 0), (0, -1), (-1, 0)].iter().any(|(dr, dc)| seen[((r + dr) * w + c + dc) as usize])
        })
        .collect();
    out.sort();
    out
}

fn framed_image() -> impl Strategy<Value = Image> {
    (3usize..10).prop_flat_map(|n| {
        proptest::collection::vec(0u8..2, n * n).prop_map(move |v| {
            Image::from_fn(n + 2, n + 2, 2, |r, c| {
                if r == 0 || c == 0 || r == n + 1 || c == n + 1 {
                    0
                } else {
                    v[(r - 1) * n + c - 1]
                }
            })
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inversion_count_matches_definition(p in perm_strategy(7)) {
        let perm = Permutation::new(p.clone()).unwrap();
        prop_assert_eq!(inversions(&p), naive_inversions(&p));
        prop_assert_eq!(min_basic_moves(&perm).unwrap(), naive_inversions(&p));
    }

    #[test]
    fn string_earthmover_matches_permutation_search(bits in proptest::collection::vec(0u8..2, 1..7), p in perm_strategy(6)) {
        let n = bits.len().min(p.len());
        let p: Vec<usize> = p.into_iter().filter(|&v| v < n).collect();
        let f: OrderedStructure = OrderedString::new(bits[..n].to_vec(), 2).unwrap().into();
        let g = apply_permutation(&f, &Permutation::new(p).unwrap()).unwrap();
        let mut best = u64::MAX;
        for q in Permutation::all(n) {
            if apply_permutation(&f, &q).unwrap() == g {
                best = best.min(naive_inversions(q.as_slice()));
            }
        }
        let r = earthmover_distance(&f, &g, EarthmoverMode::Exact).unwrap();
        prop_assert_eq!(r.distance.absolute(), Some(best));
    }

    #[test]
    fn separated_statistic_is_close(colors in proptest::collection::vec(0u8..2, pairs(9)), k in 3usize..10) {
        let g = OrderedGraph::new(9, colors, 2).unwrap();
        let a = q_statistic(&g, 3, QMode::Plain).unwrap();
        let b = q_statistic(&g, 3, QMode::KSeparated(k)).unwrap();
        prop_assert!(variation_distance(&a, &b).unwrap() <= ratio(9, 2 * k as i128));
    }

    #[test]
    fn boundary_matches_flood_fill_oracle(img in framed_image()) {
        let dec = Decomposition::new(&img).unwrap();
        for s in dec.shapes().iter().filter(|s| !s.is_outer) {
            let mut b = dec.outer_boundary(s.id).unwrap();
            b.sort();
            prop_assert_eq!(&b, &naive_outer_boundary(&img, &s.pixels));
            let enc = dec.encircled(s.id).unwrap();
            prop_assert!(enc.len() <= b.len() * b.len());
            let path = dec.path_cover(s.id).unwrap();
            prop_assert!(b.iter().all(|p| path.contains(p)));
        }
        let rep = dec.boundary_report();
        prop_assert_eq!(rep.boundary_pixel_violations, 0);
    }

    #[test]
    fn regularize_shrinks_strictly(img in framed_image(), delta in 0.01f64..0.5) {
        let r = ib::regularize(&img, delta).unwrap();
        prop_assert!(r.strictly_decreasing);
        prop_assert!(r.boundary_sizes.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(r.per_iteration_bound_ok);
    }

    #[test]
    fn refinement_text_round_trip(n in 4usize..14, r in 1usize..3, k in 1usize..3) {
        prop_assume!(r * k <= n);
        let f = Refinement::consecutive(n, r, k).unwrap();
        prop_assert_eq!(Refinement::parse(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn exact_pair_check_matches_double_enumeration(cells in proptest::collection::vec(0u8..2, 16)) {
        // A = {0..4}, B = {4..8}; every pair of subsets of the allowed sizes
        let g = OrderedGraph::from_fn(8, 2, |i, j| if i < 4 && j >= 4 { cells[i * 4 + j - 4] } else { 0 }).unwrap();
        let gamma = ratio(1, 2);
        let d = |a: &[usize], b: &[usize]| {
            let ones: usize = a.iter().map(|&i| b.iter().filter(|&&j| cells[i * 4 + j - 4] == 1).count()).sum();
            ratio(ones as i128, (a.len() * b.len()) as i128)
        };
        let all_a: Vec<usize> = (0..4).collect();
        let all_b: Vec<usize> = (4..8).collect();
        let whole = d(&all_a, &all_b);
        let mut irregular = false;
        for ma in 1u32..16 {
            for mb in 1u32..16 {
                if ma.count_ones() < 2 || mb.count_ones() < 2 {
                    continue;
                }
                let a: Vec<usize> = (0..4).filter(|i| ma >> i & 1 == 1).collect();
                let b: Vec<usize> = (4..8).filter(|j| mb >> (j - 4) & 1 == 1).collect();
                // both colors: the σ = 0 density moves by the same amount
                let gap = d(&a, &b) - whole;
                if gap > gamma || -gap > gamma {
                    irregular = true;
                }
            }
        }
        let v = is_regular_pair(&g, &all_a, &all_b, &gamma, PairMode::Exact).unwrap();
        prop_assert_eq!(v.is_regular(), !irregular);
    }
}
