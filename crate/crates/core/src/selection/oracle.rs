//! Exhaustive solver for tiny selection instances.
//!
//! For a fixed selection the best assignment sends every particle to its
//! nearest selected candidate, so only subsets need to be enumerated.

use serde::{Deserialize, Serialize};

use super::SelectionInstance;
use crate::error::{Error, Result};

pub const MAX_ENUM_CANDIDATES: usize = 20;
pub const MAX_ENUM_BUDGET: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSelection {
    pub gamma: Vec<bool>,
    pub objective: f64,
    /// Candidate index per flat particle index.
    pub assignment: Vec<usize>,
}

/// Minimum over all subsets of size `1..=M`.
///
/// Subsets are visited in lexicographic order of their sorted index lists and
/// only a strictly better objective replaces the incumbent, so ties resolve to
/// the lexicographically smallest index list.
pub fn solve_exact(instance: &SelectionInstance) -> Result<ExactSelection> {
    let k_count = instance.num_candidates();
    let budget = instance.budget();
    if k_count > MAX_ENUM_CANDIDATES || budget > MAX_ENUM_BUDGET {
        return Err(Error::EnumerationGuard { candidates: k_count, budget });
    }
    if budget == 0 {
        return Err(Error::InfeasibleBudget);
    }
    let n = instance.num_particles();
    let columns: Vec<Vec<f64>> = (0..k_count)
        .map(|k| (0..n).map(|idx| instance.weighted_cost(idx, k)).collect())
        .collect();

    let mut search = Search {
        columns: &columns,
        budget,
        best_value: f64::INFINITY,
        best_set: Vec::new(),
        stack: Vec::with_capacity(budget),
    };
    let start = vec![f64::INFINITY; n];
    search.descend(0, &start);

    let mut gamma = vec![false; k_count];
    for &k in &search.best_set {
        gamma[k] = true;
    }
    let (objective, assignment) = instance
        .evaluate_selection(&gamma)
        .expect("budget >= 1 so the best subset is nonempty");
    Ok(ExactSelection { gamma, objective, assignment })
}

struct Search<'a> {
    columns: &'a [Vec<f64>],
    budget: usize,
    best_value: f64,
    best_set: Vec<usize>,
    stack: Vec<usize>,
}

impl Search<'_> {
    /// Pre-order DFS over index lists extending `stack` with indices `>= from`.
    fn descend(&mut self, from: usize, mins: &[f64]) {
        for k in from..self.columns.len() {
            let next: Vec<f64> = mins.iter().zip(&self.columns[k]).map(|(a, b)| a.min(*b)).collect();
            self.stack.push(k);
            let value: f64 = next.iter().sum();
            if value < self.best_value {
                self.best_value = value;
                self.best_set = self.stack.clone();
            }
            if self.stack.len() < self.budget {
                self.descend(k + 1, &next);
            }
            self.stack.pop();
        }
    }
}
