//! Lagrangian dual of the selection problem and the momentum subgradient
//! method that maximizes it.
//!
//! Dualizing the coverage constraints `Σ_k β_sik = 1` (multipliers `θ_si`)
//! and the budget `Σ_k γ_k ≤ M` (multiplier `θ_0 ≥ 0`) leaves one small
//! problem per candidate `k`, solved in closed form:
//!
//! ```text
//! score_k = Σ_si max(0, θ_si − w_s d_sik)
//! γ_k     = 1  iff  score_k > θ_0
//! β_sik   = 1  iff  γ_k = 1 and w_s d_sik < θ_si
//! L_D(θ)  = Σ_k min(0, θ_0 − score_k) + Σ_si θ_si − M θ_0
//! ```
//!
//! The per-candidate work is split into fixed-size blocks evaluated in
//! parallel and reduced in block order, so results do not depend on the
//! number of worker threads.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectionInstance;
use crate::error::{Error, Result};

/// Candidates per parallel work item.
const BLOCK: usize = 32;

/// Multipliers and momentum buffers. `theta` and `momentum` use the flat particle index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub theta0: f64,
    pub theta: Vec<f64>,
    pub momentum0: f64,
    pub momentum: Vec<f64>,
    pub iteration: usize,
}

impl DualState {
    pub fn zeros(instance: &SelectionInstance) -> Self {
        let n = instance.num_particles();
        DualState { theta0: 0.0, theta: vec![0.0; n], momentum0: 0.0, momentum: vec![0.0; n], iteration: 0 }
    }

    /// `θ_si = min_k w_s d_sik`, and `θ_0` half the `M`-th largest score at that point.
    pub fn initial(instance: &SelectionInstance) -> Self {
        let n = instance.num_particles();
        let mut theta = vec![f64::INFINITY; n];
        let mut buf = Vec::new();
        for k in 0..instance.num_candidates() {
            for (t, c) in theta.iter_mut().zip(instance.column(k, &mut buf)) {
                *t = t.min(*c);
            }
        }
        let mut state = DualState { theta0: 0.0, theta, momentum0: 0.0, momentum: vec![0.0; n], iteration: 0 };
        let mut scores = evaluate(instance, &state, None).scores;
        scores.sort_by(|a, b| b.total_cmp(a));
        if instance.budget() > 0 {
            state.theta0 = (scores[instance.budget() - 1] / 2.0).max(0.0);
        }
        state
    }

    fn check(&self, instance: &SelectionInstance) -> Result<()> {
        if self.theta.len() != instance.num_particles() {
            return Err(Error::DimensionMismatch { expected: instance.num_particles(), found: self.theta.len() });
        }
        Ok(())
    }
}

/// One minimizer of the Lagrangian at a given `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub gamma: Vec<bool>,
    /// For each candidate, the flat indices of particles with `β_sik = 1`.
    pub beta: Vec<Vec<usize>>,
}

impl InnerSolution {
    pub fn selected(&self) -> usize {
        self.gamma.iter().filter(|&&g| g).count()
    }

    /// `Σ_k β_sik` per flat particle index.
    pub fn coverage(&self, n: usize) -> Vec<u32> {
        let mut cover = vec![0u32; n];
        for idx in self.beta.iter().flatten() {
            cover[*idx] += 1;
        }
        cover
    }
}

/// Aggregate of the closed-form inner solution over a set of candidates.
struct Evaluation {
    gamma: Vec<bool>,
    /// Scores for the evaluated candidates (all `K` when no batch was given).
    scores: Vec<f64>,
    cover: Vec<u32>,
    /// `Σ_k min(0, θ_0 − score_k)` over the evaluated candidates.
    inner_sum: f64,
    selected: usize,
}

struct BlockPart {
    gamma: Vec<bool>,
    scores: Vec<f64>,
    cover: Option<Vec<u32>>,
    inner_sum: f64,
}

fn evaluate(instance: &SelectionInstance, state: &DualState, batch: Option<&[usize]>) -> Evaluation {
    let n = instance.num_particles();
    let all: Vec<usize>;
    let ks: &[usize] = match batch {
        Some(b) => b,
        None => {
            all = (0..instance.num_candidates()).collect();
            &all
        }
    };
    let theta = &state.theta;
    let theta0 = state.theta0;
    let parts: Vec<BlockPart> = ks
        .par_chunks(BLOCK)
        .map(|block| {
            let mut buf = Vec::new();
            let mut part = BlockPart {
                gamma: Vec::with_capacity(block.len()),
                scores: Vec::with_capacity(block.len()),
                cover: None,
                inner_sum: 0.0,
            };
            for &k in block {
                let col = instance.column(k, &mut buf);
                let score: f64 = theta.iter().zip(col).map(|(t, c)| (t - c).max(0.0)).sum();
                let on = score > theta0;
                if on {
                    let cover = part.cover.get_or_insert_with(|| vec![0u32; n]);
                    for ((cv, t), c) in cover.iter_mut().zip(theta).zip(col) {
                        *cv += (c < t) as u32;
                    }
                }
                part.inner_sum += (theta0 - score).min(0.0);
                part.gamma.push(on);
                part.scores.push(score);
            }
            part
        })
        .collect();

    let mut eval = Evaluation {
        gamma: Vec::with_capacity(ks.len()),
        scores: Vec::with_capacity(ks.len()),
        cover: vec![0; n],
        inner_sum: 0.0,
        selected: 0,
    };
    for part in parts {
        eval.inner_sum += part.inner_sum;
        eval.selected += part.gamma.iter().filter(|&&g| g).count();
        eval.gamma.extend(part.gamma);
        eval.scores.extend(part.scores);
        if let Some(c) = part.cover {
            for (a, b) in eval.cover.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    eval
}

fn dual_from(instance: &SelectionInstance, state: &DualState, inner_sum: f64) -> f64 {
    let theta_sum: f64 = state.theta.iter().sum();
    inner_sum + theta_sum - instance.budget() as f64 * state.theta0
}

/// Closed-form minimizer `(γ̂, β̂)` of the Lagrangian at `state`.
pub fn inner_solution(instance: &SelectionInstance, state: &DualState) -> Result<InnerSolution> {
    state.check(instance)?;
    let eval = evaluate(instance, state, None);
    let mut buf = Vec::new();
    let beta = eval
        .gamma
        .iter()
        .enumerate()
        .map(|(k, &on)| {
            if !on {
                return Vec::new();
            }
            let col = instance.column(k, &mut buf);
            (0..col.len()).filter(|&idx| col[idx] < state.theta[idx]).collect()
        })
        .collect();
    Ok(InnerSolution { gamma: eval.gamma, beta })
}

/// `L_D(θ)`.
pub fn dual_value(instance: &SelectionInstance, state: &DualState) -> Result<f64> {
    state.check(instance)?;
    let eval = evaluate(instance, state, None);
    Ok(dual_from(instance, state, eval.inner_sum))
}

/// Supergradient `(Σγ̂ − M, 1 − Σ_k β̂_sik)` of `L_D` at the point where `inner` was computed.
pub fn subgradient(instance: &SelectionInstance, inner: &InnerSolution) -> (f64, Vec<f64>) {
    let g0 = inner.selected() as f64 - instance.budget() as f64;
    let g = inner.coverage(instance.num_particles()).into_iter().map(|c| 1.0 - c as f64).collect();
    (g0, g)
}

/// Mini-batch estimates of `L_D`, `Σγ − M` and `1 − Σ_k β_sik` at `state`,
/// scaling batch sums by `K / |batch|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEstimate {
    pub dual: f64,
    pub g0: f64,
    pub g: Vec<f64>,
}

pub fn batch_estimate(instance: &SelectionInstance, state: &DualState, batch: &[usize]) -> Result<BatchEstimate> {
    state.check(instance)?;
    let k_count = instance.num_candidates();
    if batch.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(&k) = batch.iter().find(|&&k| k >= k_count) {
        return Err(Error::IndexRange { index: k, horizon: k_count });
    }
    let eval = evaluate(instance, state, Some(batch));
    let scale = k_count as f64 / batch.len() as f64;
    Ok(BatchEstimate {
        dual: dual_from(instance, state, scale * eval.inner_sum),
        g0: scale * eval.selected as f64 - instance.budget() as f64,
        g: eval.cover.iter().map(|&c| 1.0 - scale * c as f64).collect(),
    })
}

/// Clears selected candidates with the largest `θ_0 − score_k` until at most `M` remain.
pub fn repair_feasibility(instance: &SelectionInstance, gamma: &[bool], budget: usize, state: &DualState) -> Vec<bool> {
    if gamma.iter().filter(|&&g| g).count() <= budget {
        return gamma.to_vec();
    }
    let scores = evaluate(instance, state, None).scores;
    repair_with_scores(gamma, budget, state.theta0, &scores)
}

/// Repairs to at most `M` points, then adds unselected candidates by
/// decreasing score (ties to the lower index) until `M` are selected.
/// Adding a point never increases the objective.
fn complete_with_scores(gamma: &[bool], budget: usize, theta0: f64, scores: &[f64]) -> Vec<bool> {
    let mut out = repair_with_scores(gamma, budget, theta0, scores);
    let count = out.iter().filter(|&&g| g).count();
    if count < budget {
        let mut off: Vec<usize> = (0..out.len()).filter(|&k| !out[k]).collect();
        off.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &k in off.iter().take(budget - count) {
            out[k] = true;
        }
    }
    out
}

fn repair_with_scores(gamma: &[bool], budget: usize, theta0: f64, scores: &[f64]) -> Vec<bool> {
    let mut out = gamma.to_vec();
    let mut on: Vec<usize> = (0..gamma.len()).filter(|&k| gamma[k]).collect();
    if on.len() <= budget {
        return out;
    }
    // largest braces value first; ties clear the higher index first
    on.sort_by(|&a, &b| (theta0 - scores[b]).total_cmp(&(theta0 - scores[a])).then(b.cmp(&a)));
    for &k in on.iter().take(on.len() - budget) {
        out[k] = false;
    }
    out
}

/// Objective minus best dual bound.
pub fn duality_gap(objective: f64, best_dual: f64) -> f64 {
    objective - best_dual
}

/// How the averaged selection `γ̄` is turned back into a binary vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RecoveryMode {
    /// The `M` largest entries of `γ̄`, ties to the lower index.
    #[default]
    TopM,
    /// Each `k` independently with probability `γ̄_k`.
    Sample { seed: u64 },
}

/// Step-size weighted average of recent inner selections and its rounding.
///
/// `history` holds `(γ^(j), α^(j))` pairs.
pub fn primal_recovery(history: &[(Vec<bool>, f64)], budget: usize, mode: RecoveryMode) -> Result<(Vec<f64>, Vec<bool>)> {
    let Some((first, _)) = history.first() else {
        return Err(Error::EmptyHistory);
    };
    let k_count = first.len();
    let alpha_sum: f64 = history.iter().map(|(_, a)| a).sum();
    let mut bar = vec![0.0; k_count];
    // accumulate in the same order as `alpha_sum` so a constant history averages exactly
    for (gamma, alpha) in history {
        for (b, &g) in bar.iter_mut().zip(gamma) {
            if g {
                *b += alpha;
            }
        }
    }
    bar.iter_mut().for_each(|b| *b /= alpha_sum);
    let rounded = match mode {
        RecoveryMode::TopM => {
            let mut order: Vec<usize> = (0..k_count).collect();
            order.sort_by(|&a, &b| bar[b].total_cmp(&bar[a]).then(a.cmp(&b)));
            let mut out = vec![false; k_count];
            for &k in order.iter().take(budget) {
                out[k] = true;
            }
            out
        }
        RecoveryMode::Sample { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            bar.iter().map(|&b| rng.random::<f64>() < b).collect()
        }
    };
    Ok((bar, rounded))
}

/// Parameters of the momentum subgradient method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial step size `α^(0)`; step `j` uses `α^(0) / √(j+1)`.
    pub alpha0: f64,
    /// Tolerance on the change of `L_D` between iterations.
    pub epsilon: f64,
    /// Momentum decay for `θ_0`.
    pub kappa1: f64,
    /// Momentum decay for `θ_si`.
    pub kappa2: f64,
    /// Relative band around `M` that `Σγ` must reach before stopping.
    pub band: f64,
    pub max_iter: usize,
    /// Candidates per iteration in the stochastic variant; `None` runs the full loop.
    pub batch: Option<usize>,
    /// Maximum number of near-optimal iterates averaged for primal recovery.
    pub recovery_window: usize,
    /// Iterates whose dual value is within this relative distance of the best are averaged.
    pub recovery_tolerance: f64,
    pub recovery: RecoveryMode,
    /// In the stochastic variant, the exact dual is evaluated every this many iterations.
    pub exact_dual_every: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha0: 0.01,
            epsilon: 1e-7,
            kappa1: 0.35,
            kappa2: 0.35,
            band: 0.05,
            max_iter: 5000,
            batch: None,
            recovery_window: 50,
            recovery_tolerance: 0.01,
            recovery: RecoveryMode::TopM,
            exact_dual_every: 10,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, num_candidates: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.alpha0 > 0.0) {
            return bad("alpha0 must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.kappa1) || !(0.0..1.0).contains(&self.kappa2) {
            return bad("kappa1 and kappa2 must lie in [0, 1)");
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            return bad("band must lie in (0, 1)");
        }
        if self.max_iter == 0 || self.recovery_window == 0 || self.exact_dual_every == 0 {
            return bad("max_iter, recovery_window and exact_dual_every must be positive");
        }
        if let Some(b) = self.batch {
            if b == 0 || b > num_candidates {
                return bad("batch must lie in 1..=K");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `Σγ` inside the band and the dual value settled.
    Converged,
    /// Iteration limit reached; the result is the best found so far.
    MaxIterations,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `L_D(θ^(j))`, or its unbiased estimate in the stochastic variant.
    pub dual_value: f64,
    /// `Σγ` (estimated in the stochastic variant).
    pub selected: f64,
    pub step: f64,
    pub theta0: f64,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub gamma: Vec<bool>,
    /// Selected candidate index per flat particle index.
    pub assignment: Vec<usize>,
    /// `Σ_s w_s Σ_i d_{s,i,a(s,i)}`, i.e. `W_p^p` against the particle kernel.
    pub objective: f64,
    pub best_dual: f64,
    pub gap: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub state: DualState,
}

impl SelectionResult {
    pub fn selected(&self) -> Vec<usize> {
        (0..self.gamma.len()).filter(|&k| self.gamma[k]).collect()
    }

    /// `objective^{1/p}`: the integrated transportation distance achieved.
    pub fn distance(&self, order: f64) -> f64 {
        self.objective.max(0.0).powf(1.0 / order)
    }

    /// Diagnostics as CSV: `j,L_D,sum_gamma,alpha,theta0,elapsed_ms`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("j,L_D,sum_gamma,alpha,theta0,elapsed_ms\n");
        for r in &self.history {
            out.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                r.iteration, r.dual_value, r.selected, r.step, r.theta0, r.elapsed_ms
            ));
        }
        out
    }
}

/// Maximizes `L_D` by the momentum subgradient method, then recovers a
/// selection with at most `M` points.
pub fn run_subgradient(instance: &SelectionInstance, config: &SolverConfig) -> Result<SelectionResult> {
    let k_count = instance.num_candidates();
    let n = instance.num_particles();
    if n == 0 || k_count == 0 {
        return Err(Error::EmptyInstance);
    }
    config.validate(k_count)?;
    let budget = instance.budget();
    let m = budget as f64;
    let lower = (1.0 - config.band) * m;
    let upper = (1.0 + config.band) * m;

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = DualState::initial(instance);
    let mut history = Vec::new();
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_gamma: Option<Vec<bool>> = None;
    let mut window: std::collections::VecDeque<(Vec<bool>, f64, f64)> = Default::default();
    let mut prev_dual: Option<f64> = None;
    let mut termination = Termination::MaxIterations;
    let mut last: Option<(Vec<bool>, Vec<f64>)> = None;
    // best budget-feasible selection seen along the iterates
    let mut incumbent: Option<(Vec<bool>, f64, Vec<usize>)> = None;
    let mut last_tried: Option<Vec<bool>> = None;

    for j in 0..config.max_iter {
        state.iteration = j;
        let step = config.alpha0 / ((j + 1) as f64).sqrt();
        let batch = config.batch.map(|b| {
            let mut ks = sample(&mut rng, k_count, b).into_vec();
            ks.sort_unstable();
            ks
        });
        let eval = evaluate(instance, &state, batch.as_deref());
        let scale = batch.as_ref().map_or(1.0, |b| k_count as f64 / b.len() as f64);
        let selected = scale * eval.selected as f64;
        let dual = dual_from(instance, &state, scale * eval.inner_sum);

        let exact = match &batch {
            None => Some((dual, eval.gamma.clone(), eval.scores.clone())),
            Some(_) if j % config.exact_dual_every == 0 => {
                let full = evaluate(instance, &state, None);
                Some((dual_from(instance, &state, full.inner_sum), full.gamma, full.scores))
            }
            Some(_) => None,
        };
        if let Some((exact_dual, gamma, scores)) = exact {
            if exact_dual > best_dual {
                best_dual = exact_dual;
                best_gamma = Some(gamma.clone());
            }
            if exact_dual >= best_dual - config.recovery_tolerance * best_dual.abs() {
                window.push_back((gamma.clone(), step, exact_dual));
                if window.len() > config.recovery_window {
                    window.pop_front();
                }
            }
            let candidate = complete_with_scores(&gamma, budget, state.theta0, &scores);
            if last_tried.as_ref() != Some(&candidate) {
                if let Some((obj, assign)) = instance.evaluate_selection(&candidate) {
                    if incumbent.as_ref().is_none_or(|(_, b, _)| obj < *b) {
                        incumbent = Some((candidate.clone(), obj, assign));
                    }
                }
                last_tried = Some(candidate);
            }
            last = Some((gamma, scores));
        }

        history.push(IterationRecord {
            iteration: j,
            dual_value: dual,
            selected,
            step,
            theta0: state.theta0,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        let settled = prev_dual.is_some_and(|p| (dual - p).abs() <= config.epsilon);
        if settled && selected >= lower && selected <= upper {
            termination = Termination::Converged;
            break;
        }
        prev_dual = Some(dual);

        let g0 = selected - m;
        state.momentum0 = (1.0 - config.kappa1) * g0 + config.kappa1 * state.momentum0;
        state.theta0 = (state.theta0 + step * state.momentum0).max(0.0);
        for ((mo, th), cv) in state.momentum.iter_mut().zip(state.theta.iter_mut()).zip(&eval.cover) {
            let g = 1.0 - scale * *cv as f64;
            *mo = (1.0 - config.kappa2) * g + config.kappa2 * *mo;
            *th += step * *mo;
        }
    }

    // exact evaluation at the final multipliers
    let final_eval = evaluate(instance, &state, None);
    let final_dual = dual_from(instance, &state, final_eval.inner_sum);
    if final_dual > best_dual {
        best_dual = final_dual;
        best_gamma = Some(final_eval.gamma.clone());
    }
    if config.batch.is_some() || last.is_none() {
        last = Some((final_eval.gamma.clone(), final_eval.scores.clone()));
    }
    let (last_gamma, last_scores) = last.expect("at least one exact evaluation");

    let mut recovery: Vec<(Vec<bool>, f64)> = window
        .into_iter()
        .filter(|(_, _, d)| *d >= best_dual - config.recovery_tolerance * best_dual.abs())
        .map(|(g, a, _)| (g, a))
        .collect();
    if recovery.is_empty() {
        recovery.push((best_gamma.clone().expect("best iterate recorded"), 1.0));
    }
    let (_, recovered) = primal_recovery(&recovery, budget, config.recovery)?;

    // Candidate primal solutions: the final inner selection and the rounded
    // average of near-optimal iterates, both completed to the budget, against
    // the incumbent.
    let options = [
        complete_with_scores(&last_gamma, budget, state.theta0, &last_scores),
        complete_with_scores(&recovered, budget, state.theta0, &final_eval.scores),
    ];
    let mut best = incumbent;
    for gamma in options {
        if let Some((obj, assign)) = instance.evaluate_selection(&gamma) {
            if best.as_ref().is_none_or(|(_, b, _)| obj < *b) {
                best = Some((gamma, obj, assign));
            }
        }
    }
    let (gamma, objective, assignment) = match best {
        Some(b) => b,
        None => {
            // nothing selected anywhere: fall back to the M cheapest candidates
            let (_, fallback) = primal_recovery(&[(vec![false; k_count], 1.0)], budget.max(1), RecoveryMode::TopM)?;
            let (obj, assign) = instance.evaluate_selection(&fallback).expect("fallback selects a point");
            (fallback, obj, assign)
        }
    };

    Ok(SelectionResult {
        gap: duality_gap(objective, best_dual),
        gamma,
        assignment,
        objective,
        best_dual,
        termination,
        iterations: history.len(),
        history,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;
    use crate::selection::ParticleGroup;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::from([x])).collect()
    }

    fn instance(budget: usize) -> SelectionInstance {
        let groups = vec![
            ParticleGroup { weight: 0.125, particles: line(&[0.0, 0.5, 1.0, 4.0]) },
            ParticleGroup { weight: 0.125, particles: line(&[4.5, 5.0, 9.0, 9.5]) },
        ];
        SelectionInstance::new(groups, line(&[0.0, 0.5, 1.0, 4.0, 4.5, 5.0, 9.0, 9.5]), budget, 1.0).unwrap()
    }

    #[test]
    fn zero_multipliers_select_nothing() {
        let inst = instance(3);
        let state = DualState::zeros(&inst);
        let inner = inner_solution(&inst, &state).unwrap();
        assert!(inner.gamma.iter().all(|g| !g));
        assert!(inner.beta.iter().all(|b| b.is_empty()));
        assert_eq!(dual_value(&inst, &state).unwrap(), 0.0);
        let (g0, g) = subgradient(&inst, &inner);
        assert_eq!(g0, -3.0);
        assert!(g.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn large_threshold_selects_everything() {
        let groups = vec![ParticleGroup { weight: 1.0, particles: line(&[0.0]) }];
        let inst = SelectionInstance::new(groups, line(&[1.0, -1.0, 1.0]), 1, 1.0).unwrap();
        let mut state = DualState::zeros(&inst);
        state.theta[0] = 10.0;
        let inner = inner_solution(&inst, &state).unwrap();
        assert_eq!(inner.gamma, vec![true; 3]);
        assert!(inner.beta.iter().all(|b| b == &vec![0]));
    }

    #[test]
    fn huge_budget_multiplier_zeroes_inner_terms() {
        let inst = instance(2);
        let mut state = DualState::initial(&inst);
        for (i, t) in state.theta.iter_mut().enumerate() {
            *t += 0.01 * i as f64;
        }
        state.theta0 = 1e6;
        let expected = state.theta.iter().sum::<f64>() - 2.0 * 1e6;
        assert_eq!(dual_value(&inst, &state).unwrap(), expected);
    }

    #[test]
    fn saturated_coverage() {
        // every particle sits on its own candidate and is covered exactly once
        let inst = instance(3);
        let mut state = DualState::zeros(&inst);
        state.theta.iter_mut().for_each(|t| *t = 0.01);
        let inner = inner_solution(&inst, &state).unwrap();
        assert_eq!(inner.selected(), 8);
        let (g0, g) = subgradient(&inst, &inner);
        assert_eq!(g0, 5.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn repair_clears_weakest() {
        let gamma = vec![true, true, true];
        let scores = [11.0, 11.0, 1.1];
        assert_eq!(repair_with_scores(&gamma, 2, 1.0, &scores), vec![true, true, false]);
        assert_eq!(repair_with_scores(&gamma, 3, 1.0, &scores), gamma);
    }

    #[test]
    fn recovery_examples() {
        let same = vec![(vec![true, false, true], 0.3), (vec![true, false, true], 0.1)];
        let (bar, _) = primal_recovery(&same, 2, RecoveryMode::TopM).unwrap();
        assert_eq!(bar, vec![1.0, 0.0, 1.0]);
        let alt = vec![(vec![true, false], 0.5), (vec![false, true], 0.5)];
        let (bar, rounded) = primal_recovery(&alt, 1, RecoveryMode::TopM).unwrap();
        assert_eq!(bar, vec![0.5, 0.5]);
        assert_eq!(rounded, vec![true, false]);
        assert_eq!(primal_recovery(&[], 1, RecoveryMode::TopM), Err(Error::EmptyHistory));
        let (_, a) = primal_recovery(&alt, 1, RecoveryMode::Sample { seed: 3 }).unwrap();
        let (_, b) = primal_recovery(&alt, 1, RecoveryMode::Sample { seed: 3 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perfect_cover_is_found() {
        let inst = instance(8);
        let res = run_subgradient(&inst, &SolverConfig::default()).unwrap();
        assert!(res.objective.abs() < 1e-9, "{}", res.objective);
        assert!(res.gap >= -1e-9);
    }

    #[test]
    fn result_respects_budget() {
        let inst = instance(2);
        let res = run_subgradient(&inst, &SolverConfig::default()).unwrap();
        assert!(res.selected().len() <= 2);
        assert!(res.assignment.iter().all(|&k| res.gamma[k]));
        assert!(res.gap >= -1e-9);
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig { kappa1: 1.0, ..Default::default() };
        assert!(cfg.validate(4).is_err());
        let cfg = SolverConfig { batch: Some(5), ..Default::default() };
        assert!(cfg.validate(4).is_err());
    }
}
