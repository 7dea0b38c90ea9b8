//! Selects 51 of 256 Sobol candidates for 500 particles drawn from the
//! five-component planar mixture and reports the achieved W_1.
//!
//! ```bash
//! cargo run --release -p kcomp --example select_mixture -- [seed]
//! ```

use std::time::Instant;

use kcomp::scenario::{expanded_bounding_box, reference_mixture, sample_gaussian_mixture, sobol_lattice};
use kcomp::selection::{run_subgradient, ParticleGroup, SelectionInstance, SolverConfig};

fn main() -> kcomp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let clouds = sample_gaussian_mixture(&reference_mixture(), 100, seed)?;
    let pooled: Vec<_> = clouds.iter().flatten().cloned().collect();
    let (lo, hi) = expanded_bounding_box(&pooled, 0.05).expect("nonempty cloud");
    let candidates = sobol_lattice(2, 256, &lo, &hi)?;
    let groups = clouds
        .into_iter()
        .map(|particles| ParticleGroup { weight: 0.2 / particles.len() as f64, particles })
        .collect();
    let instance = SelectionInstance::new(groups, candidates, 51, 1.0)?;

    let start = Instant::now();
    let result = run_subgradient(&instance, &SolverConfig { seed, ..Default::default() })?;
    println!("dim(beta)      {}", instance.beta_dim());
    println!("dim(gamma)     {}", instance.num_candidates());
    println!("selected       {}", result.selected().len());
    println!("iterations     {} ({:?})", result.iterations, result.termination);
    println!("W_1            {:.4}", result.distance(1.0));
    println!("best dual      {:.4}", result.best_dual);
    println!("duality gap    {:.4}", result.gap);
    println!("wall time (s)  {:.2}", start.elapsed().as_secs_f64());
    Ok(())
}
