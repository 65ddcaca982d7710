//! Histogram-based test for monotone binary strings.

use ordtest::math::{rng, to_f64};
use ordtest::properties::{MonotoneString, Property};
use ordtest::structures::OrderedString;
use ordtest::testers::{string_er_test, string_parts};

fn main() -> ordtest::Result<()> {
    let p = MonotoneString::default();
    let eps = 0.25;
    let delta = |e: f64| p.er_bound(e).unwrap_or(0.0);
    println!("intervals: {}", string_parts(eps, &delta)?);

    let member = p.sample(2000, &mut rng(1)).expect("sampler");
    let member = member.as_string().expect("string").clone();
    // zeros and ones swapped: half far from monotone
    let far = OrderedString::new(member.entries().iter().rev().copied().collect(), 2)?;

    for (name, s) in [("member", &member), ("reversed", &far)] {
        let d = p.distance_oracle(&s.clone().into()).expect("oracle");
        let r = string_er_test(s, &p, eps, &delta, 7)?;
        println!(
            "{name:<9} d_H {:.3}  r {:.4}  accept {}  samples {}",
            to_f64(&d),
            to_f64(&r.r),
            r.accept,
            r.samples
        );
    }
    Ok(())
}
