//! A planted irregular pair, then an instance read back from text.

use ordtest::math::ratio;
use ordtest::regularity::{is_regular_pair, satisfies_instance, PairMode, Refinement, RegularityInstance};
use ordtest::structures::OrderedGraph;

fn main() -> ordtest::Result<()> {
    // A = 0..6, B = 6..12, with an all-ones 3x3 corner
    let g = OrderedGraph::from_fn(12, 2, |i, j| u8::from(i < 3 && (6..9).contains(&j)))?;
    let a: Vec<usize> = (0..6).collect();
    let b: Vec<usize> = (6..12).collect();
    let v = is_regular_pair(&g, &a, &b, &ratio(1, 2), PairMode::Exact)?;
    println!("{:?}", v.verdict);
    if let Some(w) = v.witness {
        println!("witness A' {:?} B' {:?} color {} ({} vs {})", w.a, w.b, w.sigma, w.density, w.pair_density);
    }

    let r = Refinement::consecutive(12, 2, 2)?;
    let inst = RegularityInstance::from_refinement(&g, &r, ratio(1, 1))?;
    let text = inst.to_text();
    print!("{text}");
    let back = RegularityInstance::parse(&text)?;
    println!("satisfied: {}", satisfies_instance(&g, &back)?.satisfied);
    Ok(())
}
