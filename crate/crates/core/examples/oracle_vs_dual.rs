//! Random tiny selection instances solved by enumeration and by the dual
//! subgradient method side by side.
//!
//! ```bash
//! cargo run --release -p kcomp --example oracle_vs_dual -- [instances]
//! ```

use kcomp::selection::{run_subgradient, solve_exact, ParticleGroup, SelectionInstance, SolverConfig};
use kcomp::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> kcomp::Result<SelectionInstance> {
    let groups = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..groups).map(|_| rng.random_range(1..=8)).collect();
    let share = 1.0 / groups as f64;
    let point = |rng: &mut ChaCha8Rng| Point::from([rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
    let groups = sizes
        .iter()
        .map(|&n| ParticleGroup { weight: share / n as f64, particles: (0..n).map(|_| point(rng)).collect() })
        .collect();
    let k = rng.random_range(4..=12);
    let candidates = (0..k).map(|_| point(rng)).collect();
    let budget = rng.random_range(1..=4);
    let order = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
    SelectionInstance::new(groups, candidates, budget, order)
}

fn main() -> kcomp::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    println!("{:>4} {:>3} {:>3} {:>2} {:>10} {:>10} {:>10} {:>8}", "seed", "n", "K", "M", "exact", "dual", "bound", "rel.err");
    for seed in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng)?;
        let exact = solve_exact(&inst)?;
        let dual = run_subgradient(&inst, &SolverConfig { seed, ..Default::default() })?;
        let rel = if exact.objective > 0.0 { (dual.objective - exact.objective) / exact.objective } else { dual.objective };
        println!(
            "{seed:>4} {:>3} {:>3} {:>2} {:>10.5} {:>10.5} {:>10.5} {:>8.4}",
            inst.num_particles(),
            inst.num_candidates(),
            inst.budget(),
            exact.objective,
            dual.objective,
            dual.best_dual,
            rel
        );
    }
    Ok(())
}
