//! Exact W_p between two small planar distributions, the optimal plan, and
//! the integrated distance between two kernels.
//!
//! ```bash
//! cargo run -p kcomp --example wasserstein
//! ```

use kcomp::transport::{integrated_distance, wasserstein_exact};
use kcomp::{DiscreteDistribution, DiscreteKernel, Point};

fn main() -> kcomp::Result<()> {
    let mu = DiscreteDistribution::new(
        vec![Point::from([0.0, 0.0]), Point::from([1.0, 0.0]), Point::from([0.0, 2.0])],
        vec![0.5, 0.3, 0.2],
    )?;
    let nu = DiscreteDistribution::new(vec![Point::from([0.5, 0.5]), Point::from([0.0, 1.5])], vec![0.6, 0.4])?;

    for p in [1.0, 2.0] {
        let (value, plan) = wasserstein_exact(&mu, &nu, p)?;
        println!("W_{p} = {value:.6}");
        for (i, k, m) in plan.entries() {
            println!("  {:?} -> {:?}  mass {m:.3}", mu.support()[i].coords(), nu.support()[k].coords());
        }
    }

    // two kernels over the same sources, compared under lambda
    let sources = vec![Point::from([0.0]), Point::from([1.0])];
    let lambda = DiscreteDistribution::new(sources.clone(), vec![0.25, 0.75])?;
    let q = DiscreteKernel::new(
        sources.clone(),
        vec![
            DiscreteDistribution::uniform(vec![Point::from([-1.0]), Point::from([1.0])])?,
            DiscreteDistribution::dirac(Point::from([2.0])),
        ],
    )?;
    let q_tilde = DiscreteKernel::new(
        sources,
        vec![DiscreteDistribution::dirac(Point::from([0.0])), DiscreteDistribution::dirac(Point::from([2.5]))],
    )?;
    println!("integrated W_1 = {:.6}", integrated_distance(&lambda, &q, &q_tilde, 1.0)?);
    Ok(())
}
