//! Stage-by-stage compression of a sampled Markov system.
//!
//! Starting from `λ̃_0 = δ_{x0}`, each stage samples particle clouds from the
//! true kernel at every support point of `λ̃_t`, selects at most `M_{t+1}`
//! representative points, forms the implied kernel `Q̃_t` from the particle
//! assignment and pushes the marginal forward: `λ̃_{t+1} = λ̃_t ∘ Q̃_t`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compose_marginal, DiscreteDistribution, DiscreteKernel, Point};
use crate::scenario::{expanded_bounding_box, sobol_lattice, GaussianComponent};
use crate::selection::{run_subgradient, ParticleGroup, SelectionInstance, SolverConfig, Termination};

/// Sampling access to the true transition kernels.
pub trait TransitionSampler: Sync {
    /// `n` i.i.d. draws from `Q_t(· | state)`.
    fn sample(&self, stage: usize, state: &Point, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point>;
}

impl<F> TransitionSampler for F
where
    F: Fn(usize, &Point, usize, &mut ChaCha8Rng) -> Vec<Point> + Sync,
{
    fn sample(&self, stage: usize, state: &Point, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        self(stage, state, n, rng)
    }
}

/// Ready-made generative systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GenerativeSystem {
    /// `x' = x + ξ`, `ξ ~ N(0, Σ)`.
    GaussianStep { covariance: Vec<Vec<f64>> },
    /// `x'` drawn from an equally weighted Gaussian mixture, independent of `x`.
    Mixture { components: Vec<GaussianComponent> },
    /// `x' = x + shift` with probability one.
    Deterministic { shift: Vec<f64> },
}

impl TransitionSampler for GenerativeSystem {
    fn sample(&self, _stage: usize, state: &Point, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        use rand::Rng;
        match self {
            GenerativeSystem::GaussianStep { covariance } => {
                let comp = GaussianComponent::new(state.clone(), covariance.clone())
                    .expect("covariance validated at construction");
                comp.sample(n, rng)
            }
            GenerativeSystem::Mixture { components } => (0..n)
                .map(|_| {
                    let c = rng.random_range(0..components.len());
                    components[c].sample(1, rng).pop().expect("one sample")
                })
                .collect(),
            GenerativeSystem::Deterministic { shift } => {
                let next: Vec<f64> = state.coords().iter().zip(shift).map(|(x, s)| x + s).collect();
                vec![Point::from(next); n]
            }
        }
    }
}

impl GenerativeSystem {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            GenerativeSystem::GaussianStep { covariance } => {
                GaussianComponent::new(Point::from(vec![0.0; dim]), covariance.clone()).map(|_| ())
            }
            GenerativeSystem::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidConfig("mixture needs at least one component".into()));
                }
                match components.iter().find(|c| c.dim() != dim) {
                    Some(c) => Err(Error::DimensionMismatch { expected: dim, found: c.dim() }),
                    None => Ok(()),
                }
            }
            GenerativeSystem::Deterministic { shift } if shift.len() != dim => {
                Err(Error::DimensionMismatch { expected: dim, found: shift.len() })
            }
            GenerativeSystem::Deterministic { .. } => Ok(()),
        }
    }
}

/// Where a stage's candidate points come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    /// Sobol points over the pooled particle bounding box widened by 5% per side.
    #[default]
    Sobol,
    /// A seeded uniform subsample of the particles themselves.
    Particles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub samples_per_source: usize,
    pub candidate_count: usize,
    pub budget: usize,
    #[serde(default = "default_order")]
    pub order: f64,
    #[serde(default)]
    pub candidates: CandidateSource,
}

fn default_order() -> f64 {
    1.0
}

/// Selection weights `w_s = λ^s / |I_s|` and costs for one stage.
pub fn build_stage_instance(
    marginal: &DiscreteDistribution,
    clouds: &[Vec<Point>],
    candidates: Vec<Point>,
    order: f64,
    budget: usize,
) -> Result<SelectionInstance> {
    if clouds.len() != marginal.len() {
        return Err(Error::SourceMismatch);
    }
    if let Some(s) = clouds.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptyCloud(s));
    }
    let groups = clouds
        .iter()
        .zip(marginal.weights())
        .map(|(cloud, &l)| ParticleGroup { weight: l / cloud.len() as f64, particles: cloud.clone() })
        .collect();
    SelectionInstance::new(groups, candidates, budget, order)
}

/// Kernel whose row `s` puts mass `#{i : a(s,i) = k} / |I_s|` on candidate `k`.
///
/// Rows list selected candidates with positive mass, in candidate order.
pub fn implied_kernel(
    instance: &SelectionInstance,
    sources: &[Point],
    gamma: &[bool],
    assignment: &[usize],
) -> Result<DiscreteKernel> {
    if sources.len() != instance.groups().len() {
        return Err(Error::SourceMismatch);
    }
    if assignment.len() != instance.num_particles() {
        return Err(Error::LengthMismatch { left: assignment.len(), right: instance.num_particles() });
    }
    let k_count = instance.num_candidates();
    let mut rows = Vec::with_capacity(sources.len());
    for s in 0..sources.len() {
        let range = instance.group_range(s);
        let size = range.len() as f64;
        let mut counts = vec![0usize; k_count];
        for idx in range.clone() {
            let k = assignment[idx];
            if k >= k_count || !gamma[k] {
                let (group, particle) = instance.locate(idx);
                return Err(Error::UnselectedAssignment { group, particle, candidate: k });
            }
            counts[k] += 1;
        }
        let (support, weights): (Vec<Point>, Vec<f64>) = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (instance.candidates()[k].clone(), c as f64 / size))
            .unzip();
        rows.push(DiscreteDistribution::new(support, weights)?);
    }
    DiscreteKernel::new(sources.to_vec(), rows)
}

/// Solver outcome kept with each stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub beta_dim: usize,
    pub candidates: usize,
    pub selected: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub best_dual: f64,
    pub gap: f64,
}

/// One compressed transition `λ̃_t → λ̃_{t+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub t: usize,
    /// `λ̃_t`; its support is `X_t` and the kernel's source list.
    pub marginal: DiscreteDistribution,
    pub kernel: DiscreteKernel,
    /// Achieved `W_p^{λ̃_t}` between the particle kernel and `Q̃_t`.
    pub delta: f64,
    pub order: f64,
    pub diagnostics: StageDiagnostics,
    /// Sampled particles per source; not serialized.
    #[serde(skip)]
    pub clouds: Vec<Vec<Point>>,
}

impl Stage {
    pub fn support(&self) -> &[Point] {
        self.marginal.support()
    }

    /// The sampled (empirical) kernel with uniform particle weights.
    pub fn empirical_kernel(&self) -> Result<DiscreteKernel> {
        let rows = self
            .clouds
            .iter()
            .map(|c| DiscreteDistribution::uniform(c.clone()))
            .collect::<Result<Vec<_>>>()?;
        DiscreteKernel::new(self.marginal.support().to_vec(), rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximateSystem {
    pub stages: Vec<Stage>,
    /// `λ̃_T`.
    pub terminal: DiscreteDistribution,
}

impl ApproximateSystem {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn marginal(&self, t: usize) -> &DiscreteDistribution {
        if t == self.stages.len() {
            &self.terminal
        } else {
            &self.stages[t].marginal
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.delta).collect()
    }

    pub fn kernels(&self) -> Vec<DiscreteKernel> {
        self.stages.iter().map(|s| s.kernel.clone()).collect()
    }
}

fn stage_rng(seed: u64, t: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    rng.set_stream(stream);
    rng
}

/// Compresses `stages.len()` transitions of `system` started at `x0`.
pub fn approximate_system(
    system: &dyn TransitionSampler,
    x0: Point,
    stages: &[StageSpec],
    solver: &SolverConfig,
    seed: u64,
) -> Result<ApproximateSystem> {
    let mut marginal = DiscreteDistribution::dirac(x0);
    let mut out = Vec::with_capacity(stages.len());
    for (t, spec) in stages.iter().enumerate() {
        if spec.budget == 0 || spec.budget > spec.candidate_count || spec.samples_per_source == 0 {
            return Err(Error::StageBudgetInfeasible { stage: t, budget: spec.budget, candidates: spec.candidate_count });
        }
        let clouds: Vec<Vec<Point>> = marginal
            .support()
            .par_iter()
            .enumerate()
            .map(|(s, z)| system.sample(t, z, spec.samples_per_source, &mut stage_rng(seed, t, s as u64)))
            .collect();
        let candidates = stage_candidates(&clouds, spec, seed, t)?;
        let instance = build_stage_instance(&marginal, &clouds, candidates, spec.order, spec.budget)?;
        let result = run_subgradient(&instance, &SolverConfig { seed: solver.seed.wrapping_add(t as u64), ..solver.clone() })?;
        let kernel = implied_kernel(&instance, marginal.support(), &result.gamma, &result.assignment)?;
        let next = compose_marginal(&marginal, &kernel)?;
        log::info!(
            "stage {t}: {} sources, {} selected, delta {:.5}",
            marginal.len(),
            next.len(),
            result.distance(spec.order)
        );
        out.push(Stage {
            t,
            delta: result.distance(spec.order),
            order: spec.order,
            diagnostics: StageDiagnostics {
                beta_dim: instance.beta_dim(),
                candidates: instance.num_candidates(),
                selected: result.selected().len(),
                iterations: result.iterations,
                termination: result.termination,
                best_dual: result.best_dual,
                gap: result.gap,
            },
            marginal: std::mem::replace(&mut marginal, next),
            kernel,
            clouds,
        });
    }
    Ok(ApproximateSystem { stages: out, terminal: marginal })
}

fn stage_candidates(clouds: &[Vec<Point>], spec: &StageSpec, seed: u64, t: usize) -> Result<Vec<Point>> {
    let pooled: Vec<Point> = clouds.iter().flatten().cloned().collect();
    match spec.candidates {
        CandidateSource::Sobol => {
            let (lo, hi) = expanded_bounding_box(&pooled, 0.05).ok_or(Error::EmptyCloud(0))?;
            sobol_lattice(lo.dim(), spec.candidate_count, &lo, &hi)
        }
        CandidateSource::Particles => {
            if spec.candidate_count > pooled.len() {
                return Err(Error::StageBudgetInfeasible {
                    stage: t,
                    budget: spec.candidate_count,
                    candidates: pooled.len(),
                });
            }
            let mut rng = stage_rng(seed, t, u64::MAX);
            let mut picks = sample(&mut rng, pooled.len(), spec.candidate_count).into_vec();
            picks.sort_unstable();
            Ok(picks.into_iter().map(|i| pooled[i].clone()).collect())
        }
    }
}
