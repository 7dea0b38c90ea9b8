mod common;

use common::{distribution, kernel, min_matching, point, rng};
use kcomp::transport::{assignment_distance, integrated_distance, wasserstein_exact};
use kcomp::{compose_marginal, pairwise_cost, DiscreteDistribution, Point};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), p in prop_oneof![Just(1.0), Just(2.0), Just(1.5)]) {
        let mut r = rng(seed);
        let a = distribution(&mut r, 8, 2);
        let b = distribution(&mut r, 8, 2);
        let c = distribution(&mut r, 8, 2);
        let (ab, _) = wasserstein_exact(&a, &b, p).unwrap();
        let (ba, _) = wasserstein_exact(&b, &a, p).unwrap();
        let (bc, _) = wasserstein_exact(&b, &c, p).unwrap();
        let (ac, _) = wasserstein_exact(&a, &c, p).unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert_eq!(wasserstein_exact(&a, &a, p).unwrap().0, 0.0);
    }

    #[test]
    fn plan_marginals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = distribution(&mut r, 8, 3);
        let b = distribution(&mut r, 8, 3);
        let (_, plan) = wasserstein_exact(&a, &b, 2.0).unwrap();
        for (x, y) in plan.row_sums().iter().zip(a.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for (x, y) in plan.col_sums().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!(plan.entries().all(|(_, _, m)| m >= 0.0));
    }

    #[test]
    fn equal_weight_instances_match_permutation_search(seed in any::<u64>(), p in prop_oneof![Just(1.0), Just(2.0)]) {
        let mut r = rng(seed);
        let n = r.random_range(1..=7);
        let xs: Vec<Point> = (0..n).map(|_| point(&mut r, 2)).collect();
        let ys: Vec<Point> = (0..n).map(|_| point(&mut r, 2)).collect();
        let a = DiscreteDistribution::uniform(xs.clone()).unwrap();
        let b = DiscreteDistribution::uniform(ys.clone()).unwrap();
        let (w, _) = wasserstein_exact(&a, &b, p).unwrap();
        let expected = (min_matching(&xs, &ys, p) / n as f64).powf(1.0 / p);
        prop_assert!((w - expected).abs() <= 1e-9, "{} vs {}", w, expected);
    }

    #[test]
    fn outer_inequality(seed in any::<u64>(), p in prop_oneof![Just(1.0), Just(2.0)]) {
        let mut r = rng(seed);
        let lambda = distribution(&mut r, 5, 2);
        let q = kernel(&mut r, lambda.support(), 5, 2);
        let qt = kernel(&mut r, lambda.support(), 5, 2);
        let upper = integrated_distance(&lambda, &q, &qt, p).unwrap();
        let a = compose_marginal(&lambda, &q).unwrap();
        let b = compose_marginal(&lambda, &qt).unwrap();
        let (lower, _) = wasserstein_exact(&a, &b, p).unwrap();
        prop_assert!(lower <= upper + 1e-9, "{} > {}", lower, upper);
    }

    #[test]
    fn compose_is_linear_in_lambda(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut r = rng(seed);
        let sources: Vec<Point> = (0..4).map(|_| point(&mut r, 2)).collect();
        let q = kernel(&mut r, &sources, 4, 2);
        let l1 = DiscreteDistribution::new(sources.clone(), common::weights(&mut r, 4)).unwrap();
        let l2 = DiscreteDistribution::new(sources.clone(), common::weights(&mut r, 4)).unwrap();
        let mix_w: Vec<f64> = l1.weights().iter().zip(l2.weights()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let mix = DiscreteDistribution::new(sources, mix_w).unwrap();
        let m = compose_marginal(&mix, &q).unwrap();
        let m1 = compose_marginal(&l1, &q).unwrap();
        let m2 = compose_marginal(&l2, &q).unwrap();
        for x in m.support() {
            let expected = t * m1.mass_at(x) + (1.0 - t) * m2.mass_at(x);
            prop_assert!((m.mass_at(x) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_matrix_symmetry(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pts: Vec<Point> = (0..6).map(|_| point(&mut r, 3)).collect();
        let c = pairwise_cost(&pts, &pts, 1.0).unwrap();
        for i in 0..6 {
            prop_assert_eq!(c.get(i, i), 0.0);
            for j in 0..6 {
                prop_assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
    }

    #[test]
    fn assignment_distance_shrinks_with_more_points(seed in any::<u64>()) {
        let mut r = rng(seed);
        let xs: Vec<Point> = (0..10).map(|_| point(&mut r, 2)).collect();
        let w = vec![0.1; 10];
        let zs: Vec<Point> = (0..5).map(|_| point(&mut r, 2)).collect();
        let mut prev = f64::INFINITY;
        for m in 1..=zs.len() {
            let (v, _) = assignment_distance(&xs, &w, &zs[..m], 1.0).unwrap();
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn assignment_equals_transport_to_induced_measure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let xs: Vec<Point> = (0..6).map(|_| point(&mut r, 2)).collect();
        let zs: Vec<Point> = (0..3).map(|_| point(&mut r, 2)).collect();
        let w = vec![1.0 / 6.0; 6];
        let (v, a) = assignment_distance(&xs, &w, &zs, 1.0).unwrap();
        let mut mass = [0.0; 3];
        for &k in &a {
            mass[k] += 1.0 / 6.0;
        }
        let total: f64 = mass.iter().sum();
        let nu = DiscreteDistribution::new(zs, mass.iter().map(|m| m / total).collect()).unwrap();
        let mu = DiscreteDistribution::uniform(xs).unwrap();
        let (exact, _) = wasserstein_exact(&mu, &nu, 1.0).unwrap();
        prop_assert!((exact - v).abs() < 1e-9);
    }
}
