//! Compresses three stages of a correlated Gaussian random walk started at
//! the origin and prints the per-stage supports and integrated distances.
//!
//! ```bash
//! cargo run --release -p kcomp --example markov_pipeline
//! ```

use kcomp::pipeline::{approximate_system, CandidateSource, GenerativeSystem, StageSpec};
use kcomp::selection::SolverConfig;
use kcomp::Point;

fn main() -> kcomp::Result<()> {
    let system = GenerativeSystem::GaussianStep { covariance: vec![vec![1.0, 0.3], vec![0.3, 1.0]] };
    let stage = |n, k, m| StageSpec {
        samples_per_source: n,
        candidate_count: k,
        budget: m,
        order: 1.0,
        candidates: CandidateSource::Sobol,
    };
    let stages = [stage(200, 64, 5), stage(100, 128, 10), stage(50, 128, 15)];
    let solver = SolverConfig { max_iter: 2000, ..Default::default() };
    let sys = approximate_system(&system, Point::from([0.0, 0.0]), &stages, &solver, 7)?;

    for s in &sys.stages {
        println!(
            "t={} |X_t|={:>2} selected={:>2} delta={:.4} gap={:.4}",
            s.t,
            s.marginal.len(),
            s.diagnostics.selected,
            s.delta,
            s.diagnostics.gap
        );
    }
    println!("terminal marginal:");
    for (x, w) in sys.terminal.iter() {
        println!("  {:>7.3} {:>7.3}  {w:.4}", x.coords()[0], x.coords()[1]);
    }
    Ok(())
}
