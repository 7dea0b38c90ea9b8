//! The particle-selection problem: choose at most `M` of `K` candidate
//! points and assign every particle to a chosen one, minimizing the
//! weighted transport cost.

pub mod dual;
pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_order, common_dim, cost_pow, Point, WEIGHT_TOLERANCE};

pub use dual::{
    batch_estimate, dual_value, duality_gap, inner_solution, primal_recovery, repair_feasibility, run_subgradient, subgradient,
    BatchEstimate, DualState, InnerSolution, IterationRecord, RecoveryMode, SelectionResult, SolverConfig, Termination,
};
pub use oracle::{solve_exact, ExactSelection};

/// Cost tables with more entries than this are recomputed on the fly.
pub const DENSE_COST_LIMIT: usize = 100_000_000;

/// One source state's particle cloud with its per-particle weight `w_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleGroup {
    pub weight: f64,
    pub particles: Vec<Point>,
}

#[derive(Debug, Clone)]
enum CostStore {
    /// Candidate-major weighted costs: entry `k * n + idx` is `w_s d_sik`.
    Dense(Vec<f64>),
    OnTheFly,
}

/// Data of the mixed-binary selection problem.
///
/// Particles are addressed by a flat index running over groups in order;
/// [`SelectionInstance::locate`] maps it back to `(s, i)`.
#[derive(Debug, Clone)]
pub struct SelectionInstance {
    groups: Vec<ParticleGroup>,
    candidates: Vec<Point>,
    budget: usize,
    order: f64,
    offsets: Vec<usize>,
    particle_weight: Vec<f64>,
    flat: Vec<Point>,
    costs: CostStore,
}

impl SelectionInstance {
    pub fn new(groups: Vec<ParticleGroup>, candidates: Vec<Point>, budget: usize, order: f64) -> Result<Self> {
        Self::with_dense_limit(groups, candidates, budget, order, DENSE_COST_LIMIT)
    }

    pub fn with_dense_limit(
        groups: Vec<ParticleGroup>,
        candidates: Vec<Point>,
        budget: usize,
        order: f64,
        dense_limit: usize,
    ) -> Result<Self> {
        check_order(order)?;
        if candidates.is_empty() || groups.iter().all(|g| g.particles.is_empty()) {
            return Err(Error::EmptyInstance);
        }
        if budget > candidates.len() {
            return Err(Error::InvalidConfig(format!(
                "budget {budget} exceeds candidate count {}",
                candidates.len()
            )));
        }
        if let Some(g) = groups.iter().find(|g| !(g.weight > 0.0) || !g.weight.is_finite()) {
            return Err(Error::InvalidConfig(format!("group weight {} must be positive", g.weight)));
        }
        let total: f64 = groups.iter().map(|g| g.weight * g.particles.len() as f64).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::WeightsNotNormalized { sum: total });
        }
        common_dim(candidates.iter().chain(groups.iter().flat_map(|g| &g.particles)))?;

        let mut offsets = Vec::with_capacity(groups.len() + 1);
        let mut particle_weight = Vec::new();
        let mut flat = Vec::new();
        offsets.push(0);
        for g in &groups {
            particle_weight.extend(std::iter::repeat_n(g.weight, g.particles.len()));
            flat.extend(g.particles.iter().cloned());
            offsets.push(flat.len());
        }
        let n = flat.len();
        let k_count = candidates.len();
        let costs = if n.saturating_mul(k_count) <= dense_limit {
            let mut table = vec![0.0; n * k_count];
            table.par_chunks_mut(n).zip(candidates.par_iter()).for_each(|(col, z)| {
                for ((c, x), w) in col.iter_mut().zip(&flat).zip(&particle_weight) {
                    *c = w * cost_pow(x.coords(), z.coords(), order);
                }
            });
            CostStore::Dense(table)
        } else {
            CostStore::OnTheFly
        };
        Ok(SelectionInstance { groups, candidates, budget, order, offsets, particle_weight, flat, costs })
    }

    pub fn groups(&self) -> &[ParticleGroup] {
        &self.groups
    }

    pub fn candidates(&self) -> &[Point] {
        &self.candidates
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn num_particles(&self) -> usize {
        self.flat.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// `dim(β) = Σ_s |I_s| · K`.
    pub fn beta_dim(&self) -> usize {
        self.num_particles() * self.num_candidates()
    }

    pub fn particle(&self, idx: usize) -> &Point {
        &self.flat[idx]
    }

    pub fn particle_weight(&self, idx: usize) -> f64 {
        self.particle_weight[idx]
    }

    /// Flat particle index range of group `s`.
    pub fn group_range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// `(group, index within group)` of a flat particle index.
    pub fn locate(&self, idx: usize) -> (usize, usize) {
        let s = self.offsets.partition_point(|&o| o <= idx) - 1;
        (s, idx - self.offsets[s])
    }

    /// Unweighted `d(x_si, ζ_k)^p`.
    pub fn cost(&self, idx: usize, k: usize) -> f64 {
        cost_pow(self.flat[idx].coords(), self.candidates[k].coords(), self.order)
    }

    /// `w_s d(x_si, ζ_k)^p`.
    pub fn weighted_cost(&self, idx: usize, k: usize) -> f64 {
        match &self.costs {
            CostStore::Dense(t) => t[k * self.flat.len() + idx],
            CostStore::OnTheFly => self.particle_weight[idx] * self.cost(idx, k),
        }
    }

    /// Weighted costs of every particle against candidate `k`.
    pub(crate) fn column<'a>(&'a self, k: usize, buf: &'a mut Vec<f64>) -> &'a [f64] {
        match &self.costs {
            CostStore::Dense(t) => {
                let n = self.flat.len();
                &t[k * n..(k + 1) * n]
            }
            CostStore::OnTheFly => {
                let z = self.candidates[k].coords();
                buf.clear();
                buf.extend(
                    self.flat
                        .iter()
                        .zip(&self.particle_weight)
                        .map(|(x, w)| w * cost_pow(x.coords(), z, self.order)),
                );
                buf
            }
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.costs, CostStore::Dense(_))
    }

    /// Objective of a selection under nearest-point assignment, and the
    /// per-particle candidate index. `None` when nothing is selected.
    pub fn evaluate_selection(&self, gamma: &[bool]) -> Option<(f64, Vec<usize>)> {
        let selected: Vec<usize> = (0..gamma.len()).filter(|&k| gamma[k]).collect();
        if selected.is_empty() {
            return None;
        }
        const CHUNK: usize = 256;
        let parts: Vec<(f64, Vec<usize>)> = (0..self.flat.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut total = 0.0;
                let mut assign = Vec::with_capacity(chunk.len());
                for &idx in chunk {
                    let mut best = selected[0];
                    let mut best_c = f64::INFINITY;
                    for &k in &selected {
                        let c = self.weighted_cost(idx, k);
                        if c < best_c {
                            best = k;
                            best_c = c;
                        }
                    }
                    total += best_c;
                    assign.push(best);
                }
                (total, assign)
            })
            .collect();
        let mut objective = 0.0;
        let mut assignment = Vec::with_capacity(self.flat.len());
        for (t, a) in parts {
            objective += t;
            assignment.extend(a);
        }
        Some((objective, assignment))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SelectionInstance {
        let groups = vec![
            ParticleGroup { weight: 0.25, particles: vec![Point::from([0.0, 0.0]), Point::from([1.0, 0.0])] },
            ParticleGroup { weight: 0.5, particles: vec![Point::from([3.0, 0.0])] },
        ];
        let cands = vec![Point::from([0.0, 0.0]), Point::from([3.0, 0.0])];
        SelectionInstance::new(groups, cands, 1, 1.0).unwrap()
    }

    #[test]
    fn flat_indexing() {
        let inst = tiny();
        assert_eq!(inst.num_particles(), 3);
        assert_eq!(inst.locate(0), (0, 0));
        assert_eq!(inst.locate(1), (0, 1));
        assert_eq!(inst.locate(2), (1, 0));
        assert_eq!(inst.group_range(1), 2..3);
        assert_eq!(inst.weighted_cost(2, 0), 1.5);
        assert_eq!(inst.beta_dim(), 6);
    }

    #[test]
    fn lazy_costs_match_dense() {
        let inst = tiny();
        let lazy = SelectionInstance::with_dense_limit(
            inst.groups().to_vec(),
            inst.candidates().to_vec(),
            1,
            1.0,
            0,
        )
        .unwrap();
        assert!(!lazy.is_dense());
        for idx in 0..3 {
            for k in 0..2 {
                assert_eq!(inst.weighted_cost(idx, k), lazy.weighted_cost(idx, k));
            }
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        assert_eq!(inst.column(1, &mut a), lazy.column(1, &mut b));
    }

    #[test]
    fn evaluate_selection_nearest() {
        let inst = tiny();
        let (v, a) = inst.evaluate_selection(&[true, true]).unwrap();
        assert_eq!(a, vec![0, 0, 1]);
        assert!((v - 0.25).abs() < 1e-15);
        assert!(inst.evaluate_selection(&[false, false]).is_none());
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let groups = vec![ParticleGroup { weight: 0.3, particles: vec![Point::from([0.0])] }];
        assert!(matches!(
            SelectionInstance::new(groups, vec![Point::from([0.0])], 1, 1.0),
            Err(Error::WeightsNotNormalized { .. })
        ));
    }
}
