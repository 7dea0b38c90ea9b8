//! Exact discrete transport: Wasserstein distances, nearest-point assignment
//! and the integrated transportation distance between kernels.

mod simplex;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_order, common_dim, cost_pow, DiscreteDistribution, DiscreteKernel, Point};

/// Default bound on each side of an exact transport problem.
pub const DEFAULT_SIZE_CAP: usize = 2000;

/// An optimal coupling together with its cost `Σ d_ik^p π_ik` (that is, `W_p^p`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols` masses, indexed against the original (unfiltered) inputs.
    pub plan: Vec<f64>,
    pub value: f64,
}

impl TransportPlan {
    pub fn mass(&self, i: usize, k: usize) -> f64 {
        self.plan[i * self.cols + k]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.plan.chunks(self.cols) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        out
    }

    /// Nonzero cells as `(i, k, mass)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.plan
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(move |(e, &m)| (e / self.cols, e % self.cols, m))
    }

    fn transposed(&self) -> TransportPlan {
        let mut plan = vec![0.0; self.plan.len()];
        for i in 0..self.rows {
            for k in 0..self.cols {
                plan[k * self.rows + i] = self.plan[i * self.cols + k];
            }
        }
        TransportPlan { rows: self.cols, cols: self.rows, plan, value: self.value }
    }
}

/// `W_p(μ, ν)` and an optimal plan, with the default size cap.
pub fn wasserstein_exact(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> Result<(f64, TransportPlan)> {
    wasserstein_exact_with_cap(mu, nu, p, DEFAULT_SIZE_CAP)
}

pub fn wasserstein_exact_with_cap(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    p: f64,
    cap: usize,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if mu.len() > cap || nu.len() > cap {
        return Err(Error::SizeCapExceeded { rows: mu.len(), cols: nu.len(), cap });
    }
    common_dim(mu.support().iter().chain(nu.support()))?;
    // Solve in a canonical orientation so that W(μ,ν) and W(ν,μ) agree bit for bit.
    let plan = if canonical_cmp(mu, nu) == Ordering::Greater {
        solve_plan(nu, mu, p).transposed()
    } else {
        solve_plan(mu, nu, p)
    };
    Ok((plan.value.max(0.0).powf(1.0 / p), plan))
}

fn canonical_cmp(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        let flat = |d: &DiscreteDistribution| {
            d.iter()
                .flat_map(|(x, w)| std::iter::once(w).chain(x.coords().iter().copied()))
                .collect::<Vec<_>>()
        };
        let (fa, fb) = (flat(a), flat(b));
        fa.iter()
            .zip(&fb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn solve_plan(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> TransportPlan {
    // zero-weight atoms are removed before solving and restored as empty rows/columns
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&k| nu.weights()[k] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&k| nu.weights()[k]).collect();
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &k in &cols {
            cost.push(cost_pow(mu.support()[i].coords(), nu.support()[k].coords(), p));
        }
    }
    let sol = simplex::solve(&supply, &demand, &cost);
    let (m, n) = (mu.len(), nu.len());
    let mut plan = vec![0.0; m * n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &k) in cols.iter().enumerate() {
            plan[i * n + k] = sol.flow[a * cols.len() + b];
        }
    }
    TransportPlan { rows: m, cols: n, plan, value: sol.value }
}

/// Nearest-point assignment of weighted particles to a fixed selected support.
///
/// Returns `Σ wᵢ d(xᵢ, z_{a(i)})^p` and the assignment `a`, ties going to the
/// lowest selected index. This is `W_p^p` between the particles and the
/// best distribution supported on `selected`.
pub fn assignment_distance(particles: &[Point], weights: &[f64], selected: &[Point], p: f64) -> Result<(f64, Vec<usize>)> {
    check_order(p)?;
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    if particles.len() != weights.len() {
        return Err(Error::LengthMismatch { left: particles.len(), right: weights.len() });
    }
    common_dim(particles.iter().chain(selected))?;
    let mut value = 0.0;
    let mut assignment = Vec::with_capacity(particles.len());
    for (x, w) in particles.iter().zip(weights) {
        let (best, d) = nearest(x, selected, p);
        assignment.push(best);
        value += w * d;
    }
    Ok((value, assignment))
}

pub(crate) fn nearest(x: &Point, selected: &[Point], p: f64) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, z) in selected.iter().enumerate() {
        let d = cost_pow(x.coords(), z.coords(), p);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    (best, best_d)
}

/// `(Σ_s λ^s W_p(Q_s, Q̃_s)^p)^{1/p}` for kernels sharing `λ`'s support as sources.
pub fn integrated_distance(
    lambda: &DiscreteDistribution,
    q: &DiscreteKernel,
    q_tilde: &DiscreteKernel,
    p: f64,
) -> Result<f64> {
    check_order(p)?;
    if !q.matches_sources(lambda) || !q_tilde.matches_sources(lambda) {
        return Err(Error::SourceMismatch);
    }
    let mut total = 0.0;
    for ((ls, a), b) in lambda.weights().iter().zip(q.rows()).zip(q_tilde.rows()) {
        if *ls == 0.0 {
            continue;
        }
        let (_, plan) = wasserstein_exact(a, b, p)?;
        total += ls * plan.value.max(0.0);
    }
    Ok(total.powf(1.0 / p))
}
