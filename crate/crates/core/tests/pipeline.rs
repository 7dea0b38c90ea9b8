mod common;

use kcomp::pipeline::{approximate_system, CandidateSource, GenerativeSystem, StageSpec};
use kcomp::selection::SolverConfig;
use kcomp::transport::integrated_distance;
use kcomp::{compose_marginal, Point};

fn walk() -> GenerativeSystem {
    GenerativeSystem::GaussianStep { covariance: vec![vec![1.0, 0.2], vec![0.2, 0.5]] }
}

fn stages(source: CandidateSource) -> Vec<StageSpec> {
    vec![
        StageSpec { samples_per_source: 40, candidate_count: 32, budget: 4, order: 1.0, candidates: source },
        StageSpec { samples_per_source: 20, candidate_count: 48, budget: 6, order: 1.0, candidates: source },
        StageSpec { samples_per_source: 10, candidate_count: 48, budget: 6, order: 2.0, candidates: source },
    ]
}

#[test]
fn stage_delta_equals_integrated_distance_to_particle_kernel() {
    for source in [CandidateSource::Sobol, CandidateSource::Particles] {
        let cfg = SolverConfig { max_iter: 400, ..Default::default() };
        let sys = approximate_system(&walk(), Point::from([0.0, 0.0]), &stages(source), &cfg, 2).unwrap();
        for stage in &sys.stages {
            let empirical = stage.empirical_kernel().unwrap();
            let recomputed = integrated_distance(&stage.marginal, &empirical, &stage.kernel, stage.order).unwrap();
            assert!((recomputed - stage.delta).abs() < 1e-9, "stage {}: {} vs {}", stage.t, recomputed, stage.delta);
            assert!(stage.diagnostics.selected <= stage.diagnostics.candidates);
        }
    }
}

#[test]
fn marginals_follow_the_compressed_kernels() {
    let cfg = SolverConfig { max_iter: 300, ..Default::default() };
    let sys = approximate_system(&walk(), Point::from([1.0, -1.0]), &stages(CandidateSource::Sobol), &cfg, 9).unwrap();
    assert_eq!(sys.marginal(0).support(), &[Point::from([1.0, -1.0])]);
    for t in 0..sys.horizon() {
        let next = compose_marginal(sys.marginal(t), &sys.stages[t].kernel).unwrap();
        assert_eq!(&next, sys.marginal(t + 1));
        let total: f64 = sys.marginal(t + 1).weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(sys.marginal(t + 1).len() <= stages(CandidateSource::Sobol)[t].budget);
    }
}

#[test]
fn fixed_seed_reproduces_the_system() {
    let cfg = SolverConfig { max_iter: 200, ..Default::default() };
    let a = approximate_system(&walk(), Point::from([0.0, 0.0]), &stages(CandidateSource::Particles), &cfg, 4).unwrap();
    let b = approximate_system(&walk(), Point::from([0.0, 0.0]), &stages(CandidateSource::Particles), &cfg, 4).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn mixture_system_and_custom_sampler() {
    let comps = kcomp::scenario::reference_mixture();
    let system = GenerativeSystem::Mixture { components: comps };
    let spec = vec![StageSpec { samples_per_source: 50, candidate_count: 64, budget: 8, order: 1.0, candidates: CandidateSource::Sobol }];
    let cfg = SolverConfig { max_iter: 300, ..Default::default() };
    let sys = approximate_system(&system, Point::from([0.0, 0.0]), &spec, &cfg, 0).unwrap();
    assert!(sys.terminal.len() <= 8);

    // any closure works as a transition sampler
    let shift = |_t: usize, x: &Point, n: usize, _rng: &mut rand_chacha::ChaCha8Rng| {
        vec![Point::from(x.coords().iter().map(|c| c + 2.0).collect::<Vec<f64>>()); n]
    };
    let spec = vec![StageSpec { samples_per_source: 3, candidate_count: 2, budget: 1, order: 1.0, candidates: CandidateSource::Particles }];
    let sys = approximate_system(&shift, Point::from([0.0]), &spec, &cfg, 0).unwrap();
    assert_eq!(sys.terminal.support(), &[Point::from([2.0])]);
    assert_eq!(sys.deltas(), vec![0.0]);
}
