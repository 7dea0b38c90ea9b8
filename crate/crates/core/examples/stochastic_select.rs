//! The mixture benchmark with mini-batches of candidates per iteration,
//! compared against the full-batch run.
//!
//! ```bash
//! cargo run --release -p kcomp --example stochastic_select -- [batch]
//! ```

use std::time::Instant;

use kcomp::scenario::{expanded_bounding_box, reference_mixture, sample_gaussian_mixture, sobol_lattice};
use kcomp::selection::{run_subgradient, ParticleGroup, SelectionInstance, SolverConfig};

fn main() -> kcomp::Result<()> {
    let batch: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let clouds = sample_gaussian_mixture(&reference_mixture(), 100, 0)?;
    let pooled: Vec<_> = clouds.iter().flatten().cloned().collect();
    let (lo, hi) = expanded_bounding_box(&pooled, 0.05).expect("nonempty cloud");
    let groups = clouds
        .into_iter()
        .map(|particles| ParticleGroup { weight: 0.2 / particles.len() as f64, particles })
        .collect();
    let instance = SelectionInstance::new(groups, sobol_lattice(2, 256, &lo, &hi)?, 51, 1.0)?;

    for (label, batch) in [("full", None), ("batch", Some(batch))] {
        let start = Instant::now();
        let r = run_subgradient(&instance, &SolverConfig { batch, ..Default::default() })?;
        println!(
            "{label:>5}: W_1 {:.4}  best dual {:.4}  gap {:.4}  {} iterations  {:.2}s",
            r.distance(1.0),
            r.best_dual,
            r.gap,
            r.iterations,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
