//! Hamming, earthmover and mixingness on a few small structures.

use ordtest::metrics::{earthmover_distance, hamming, mixing_set, EarthmoverMode};
use ordtest::structures::{OrderedGraph, OrderedString, OrderedStructure, Permutation};

fn main() -> ordtest::Result<()> {
    let f: OrderedStructure = OrderedString::from_bits("0110")?.into();
    let g: OrderedStructure = OrderedString::from_bits("1010")?.into();
    println!("hamming    {}", hamming(&f, &g)?);
    let e = earthmover_distance(&f, &g, EarthmoverMode::Exact)?;
    println!("earthmover {} via {:?}", e.distance, e.witness.map(|w| w.to_string()));

    let p = Permutation::from_one_based(&[3, 1, 2])?;
    let m = mixing_set(&p);
    println!("mixing set of {p}: {:?} ({})", m.pairs_one_based(), m.relative);

    // the path 0-1-2-3 against the path 0-2-1-3, then against a star
    let path = OrderedGraph::from_fn(4, 2, |i, j| u8::from(j == i + 1))?;
    let other = OrderedGraph::from_fn(4, 2, |i, j| u8::from(matches!((i, j), (0, 2) | (1, 2) | (1, 3))))?;
    let star = OrderedGraph::from_fn(4, 2, |i, _| u8::from(i == 0))?;
    let d = earthmover_distance(&path.clone().into(), &other.into(), EarthmoverMode::Exact)?;
    println!("path vs reordered path: {}", d.distance);
    let d = earthmover_distance(&path.into(), &star.into(), EarthmoverMode::Exact)?;
    println!("path vs star: {} (not isomorphic)", d.distance);
    Ok(())
}
