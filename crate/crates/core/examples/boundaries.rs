//! Boundary report and recoloring for a ring with a dot in its hole.

use ordtest::imageboundary::{boundary_report, regularize};
use ordtest::structures::{Alphabet, Image};

const PICTURE: &str = "\
000000000
011111110
010000010
010010010
010000010
011111110
000000000
000000000
000000000
";

fn main() -> ordtest::Result<()> {
    let img = Image::parse(PICTURE, &Alphabet::binary())?;
    let rep = boundary_report(&img)?;
    for s in &rep.per_shape {
        println!("shape {} color {} size {:>2} |B| {:>2} encircled {:>2}", s.shape, s.color, s.size, s.boundary, s.encircled);
    }
    println!("total |B| {}  black boundary {}", rep.total_boundary, rep.black_boundary);

    let r = regularize(&img, 0.2)?;
    println!("regularize: {} step(s), boundary sizes {:?}", r.iterations, r.boundary_sizes);
    print!("{}", r.image.to_text(&Alphabet::binary()));
    Ok(())
}
