//! The canonical, tolerant, piecewise and simulated testers on one input.

use ordtest::properties::by_name;
use ordtest::structures::OrderedStructure;
use ordtest::testers::{
    canonical_to_tolerant, run_canonical, run_piecewise, run_tester, CanonicalTest, SimulatedCanonical,
    TolerantToPiecewise,
};

fn main() -> ordtest::Result<()> {
    let p = by_name("monotone_string")?;
    let mut rng = ordtest::math::rng(3);
    let f: OrderedStructure = p.sample(1200, &mut rng).expect("sampler");

    let canon = CanonicalTest::from_property(p.as_ref(), 3, 2)?;
    println!("{}", run_canonical(&f, &canon, 500, 1)?);
    let small = p.sample(12, &mut rng).expect("sampler");
    println!("exact acceptance on n = 12: {}", canon.exact_acceptance(&small)?);

    let tolerant = canonical_to_tolerant(canon)?;
    println!("{}  (δ = {})", run_tester(&f, &tolerant, 200, 2)?, tolerant.delta());

    let piecewise = TolerantToPiecewise::new(tolerant, 4)?;
    println!("{}", run_piecewise(&f, &piecewise, 200, 3)?);

    // smallest block size allowed (the 27 queries of the tolerant test)
    let sim = SimulatedCanonical::with_block_size(piecewise, 27)?;
    println!("{}  (draws {} elements)", sim.run(&f, 200, 4)?, sim.drawn());
    Ok(())
}
