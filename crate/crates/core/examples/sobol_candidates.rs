//! Sobol candidate lattices: the first points in the unit square, the
//! stratification of a 2^10 prefix, and a lattice over a particle bounding box.
//!
//! ```bash
//! cargo run -p kcomp --example sobol_candidates
//! ```

use kcomp::scenario::{expanded_bounding_box, reference_mixture, sample_gaussian_mixture, sobol_lattice};
use kcomp::Point;

fn main() -> kcomp::Result<()> {
    let unit = (Point::from([0.0, 0.0]), Point::from([1.0, 1.0]));
    for p in sobol_lattice(2, 8, &unit.0, &unit.1)? {
        println!("{:?}", p.coords());
    }

    let n = 1 << 10;
    let dim = 5;
    let lo = Point::from(vec![0.0; dim]);
    let hi = Point::from(vec![1.0; dim]);
    let pts = sobol_lattice(dim, n, &lo, &hi)?;
    for d in 0..dim {
        let mut cells: Vec<usize> = pts.iter().map(|p| (p.coords()[d] * n as f64) as usize).collect();
        cells.sort_unstable();
        let ok = cells.iter().enumerate().all(|(i, &c)| i == c);
        println!("dim {d}: one point per 1/{n} stratum: {ok}");
    }

    let clouds = sample_gaussian_mixture(&reference_mixture(), 100, 0)?;
    let pooled: Vec<Point> = clouds.into_iter().flatten().collect();
    let (lo, hi) = expanded_bounding_box(&pooled, 0.05).expect("nonempty cloud");
    let lattice = sobol_lattice(2, 256, &lo, &hi)?;
    println!("box {:?} .. {:?}, {} candidates", lo.coords(), hi.coords(), lattice.len());
    Ok(())
}
