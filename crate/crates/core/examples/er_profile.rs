//! Worst Hamming distance after random basic moves, for a few properties,
//! and the chessboard that a handful of column swaps pushes far away.

use ordtest::properties::{by_name, chessboard_certificate, er_profile};

fn main() -> ordtest::Result<()> {
    let budgets = [0.0, 0.001, 0.01, 0.05];
    for name in ["monotone_string", "p111"] {
        let p = by_name(name)?;
        println!("{name}");
        print!("{}", er_profile(p.as_ref(), 60, &budgets, 40, 11)?);
    }
    let c = chessboard_certificate(16)?;
    println!(
        "chessboard 16x16: {} column swaps (budget {}), distance {}",
        c.moves.len(),
        c.earthmover_budget,
        c.distance
    );
    Ok(())
}
