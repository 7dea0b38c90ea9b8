//! Backward value evaluation on a compressed random walk with the expectation
//! and the mean-semideviation mappings, plus the kernel-error bound.
//!
//! ```bash
//! cargo run --release -p kcomp --example risk_evaluation
//! ```

use kcomp::pipeline::{approximate_system, CandidateSource, GenerativeSystem, StageSpec};
use kcomp::risk::{error_bound, evaluate_backward, expectation_mapping, semideviation_mapping, DiscreteSystem, RiskMapping};
use kcomp::selection::SolverConfig;
use kcomp::Point;

fn main() -> kcomp::Result<()> {
    let system = GenerativeSystem::GaussianStep { covariance: vec![vec![0.5, 0.0], vec![0.0, 0.5]] };
    let stages = vec![
        StageSpec { samples_per_source: 200, candidate_count: 64, budget: 6, order: 1.0, candidates: CandidateSource::Sobol };
        3
    ];
    let solver = SolverConfig { max_iter: 1500, ..Default::default() };
    let approx = approximate_system(&system, Point::from([0.0, 0.0]), &stages, &solver, 3)?;
    let discrete = DiscreteSystem::from(&approx);

    // distance from the origin, discounted per stage
    let cost = |t: usize, x: &Point| 0.9f64.powi(t as i32) * x.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
    let origin = Point::from([0.0, 0.0]);
    let mappings: Vec<(&str, Box<dyn RiskMapping>)> = vec![
        ("expectation", Box::new(expectation_mapping())),
        ("semideviation 0.5", Box::new(semideviation_mapping(0.5)?)),
        ("semideviation 1.0", Box::new(semideviation_mapping(1.0)?)),
    ];
    for (name, sigma) in &mappings {
        let table = evaluate_backward(&discrete, &cost, sigma.as_ref())?;
        println!("{name:>18}: v_0(0) = {:.4}", table.value(0, &origin).expect("x0 in support"));
    }

    let table = evaluate_backward(&discrete, &cost, &expectation_mapping())?;
    let lipschitz: Vec<f64> = (0..approx.horizon()).map(|t| table.stage(t + 1).lipschitz()).collect();
    let ones = vec![1.0; approx.horizon() - 1];
    let bound = error_bound(&lipschitz, &ones, &approx.deltas(), 0)?;
    println!("deltas {:?}", approx.deltas());
    println!("error bound at t=0 (unit contraction, discrete Lipschitz): {bound:.4}");
    Ok(())
}
