#![allow(dead_code)]

use kcomp::selection::{ParticleGroup, SelectionInstance};
use kcomp::{DiscreteDistribution, DiscreteKernel, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    Point::from((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<f64>>())
}

/// Random weights on `n` atoms, some possibly zero, normalized to one.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.05..1.0) }).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    raw.iter().map(|w| w / total).collect()
}

pub fn distribution(rng: &mut ChaCha8Rng, max_len: usize, dim: usize) -> DiscreteDistribution {
    let n = rng.random_range(1..=max_len);
    let support = (0..n).map(|_| point(rng, dim)).collect();
    DiscreteDistribution::new(support, weights(rng, n)).unwrap()
}

pub fn kernel(rng: &mut ChaCha8Rng, sources: &[Point], max_len: usize, dim: usize) -> DiscreteKernel {
    let rows = sources.iter().map(|_| distribution(rng, max_len, dim)).collect();
    DiscreteKernel::new(sources.to_vec(), rows).unwrap()
}

/// A selection instance in the tiny regime: ≤3 groups, ≤8 particles each,
/// K ≤ 12, M ≤ 4, p ∈ {1, 2}.
pub fn tiny_instance(rng: &mut ChaCha8Rng) -> SelectionInstance {
    tiny_instance_with(rng, 12)
}

pub fn tiny_instance_with(rng: &mut ChaCha8Rng, max_k: usize) -> SelectionInstance {
    let groups = rng.random_range(1..=3);
    let lambda = weights_positive(rng, groups);
    let groups = lambda
        .iter()
        .map(|&l| {
            let n = rng.random_range(1..=8);
            ParticleGroup { weight: l / n as f64, particles: (0..n).map(|_| point(rng, 2)).collect() }
        })
        .collect();
    let k = rng.random_range(2..=max_k);
    let candidates = (0..k).map(|_| point(rng, 2)).collect();
    let budget = rng.random_range(1..=4.min(k));
    let order = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
    SelectionInstance::new(groups, candidates, budget, order).unwrap()
}

pub fn weights_positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// All subsets of `0..k` with size in `1..=m`, as indicator vectors.
pub fn subsets(k: usize, m: usize) -> Vec<Vec<bool>> {
    (1u32..1 << k)
        .filter(|mask| (mask.count_ones() as usize) <= m)
        .map(|mask| (0..k).map(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// All `b`-element subsets of `0..k` in lexicographic order.
pub fn combinations(k: usize, b: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, b: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == b {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            go(i + 1, k, b, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, b, &mut Vec::new(), &mut out);
    out
}

/// Minimum matching cost between two equal-size point lists, by enumerating
/// every permutation (Heap's algorithm).
pub fn min_matching(a: &[Point], b: &[Point], p: f64) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    let cost = |i: usize, j: usize| {
        let d: f64 = a[i].coords().iter().zip(b[j].coords()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        d.powf(p)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |perm: &[usize]| (0..n).map(|i| cost(i, perm[i])).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// `L(γ; θ) = Σθ_si − Mθ_0 + θ_0|γ| + Σ_{k∈γ} Σ_si min(0, w d_sik − θ_si)`,
/// the Lagrangian minimized over β for a fixed selection.
pub fn lagrangian_for_subset(inst: &SelectionInstance, theta0: f64, theta: &[f64], gamma: &[bool]) -> f64 {
    let mut value: f64 = theta.iter().sum::<f64>() - inst.budget() as f64 * theta0;
    for (k, &on) in gamma.iter().enumerate() {
        if on {
            value += theta0;
            for (idx, t) in theta.iter().enumerate() {
                value += (inst.weighted_cost(idx, k) - t).min(0.0);
            }
        }
    }
    value
}

/// Dual value by enumerating all `2^K` selections, the empty one included.
pub fn enumerated_dual(inst: &SelectionInstance, theta0: f64, theta: &[f64]) -> f64 {
    let k = inst.num_candidates();
    (0u32..1 << k)
        .map(|mask| {
            let gamma: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
            lagrangian_for_subset(inst, theta0, theta, &gamma)
        })
        .fold(f64::INFINITY, f64::min)
}

/// A layered finite system: `layers[t]` is `X_t`, `rows[t][x]` weights over `X_{t+1}`.
pub struct Layered {
    pub layers: Vec<Vec<Point>>,
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl Layered {
    pub fn random(rng: &mut ChaCha8Rng, horizon: usize, max_states: usize, dim: usize) -> Self {
        let mut layers = vec![vec![point(rng, dim)]];
        for _ in 0..horizon {
            let n = rng.random_range(1..=max_states);
            layers.push((0..n).map(|_| point(rng, dim)).collect());
        }
        let rows = (0..horizon)
            .map(|t| layers[t].iter().map(|_| weights_positive(rng, layers[t + 1].len())).collect())
            .collect();
        Layered { layers, rows }
    }

    /// Same atoms, each row mixed with fresh random weights.
    pub fn perturbed(&self, rng: &mut ChaCha8Rng, eps: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .map(|row| {
                        let noise = weights_positive(rng, row.len());
                        row.iter().zip(noise).map(|(a, b)| (1.0 - eps) * a + eps * b).collect()
                    })
                    .collect()
            })
            .collect();
        Layered { layers: self.layers.clone(), rows }
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn kernel(&self, t: usize) -> DiscreteKernel {
        let rows = self.rows[t]
            .iter()
            .map(|w| DiscreteDistribution::new(self.layers[t + 1].clone(), w.clone()).unwrap())
            .collect();
        DiscreteKernel::new(self.layers[t].clone(), rows).unwrap()
    }

    pub fn kernels(&self) -> Vec<DiscreteKernel> {
        (0..self.horizon()).map(|t| self.kernel(t)).collect()
    }

    /// Expected total cost from `(t, x)` by summing over all forward paths.
    pub fn path_expectation(&self, cost: &dyn Fn(usize, &Point) -> f64, t: usize, x: usize) -> f64 {
        fn walk(sys: &Layered, cost: &dyn Fn(usize, &Point) -> f64, t: usize, x: usize, prob: f64, acc: f64) -> f64 {
            let acc = acc + cost(t, &sys.layers[t][x]);
            if t == sys.horizon() {
                return prob * acc;
            }
            sys.rows[t][x]
                .iter()
                .enumerate()
                .map(|(y, w)| walk(sys, cost, t + 1, y, prob * w, acc))
                .sum()
        }
        walk(self, cost, t, x, 1.0, 0.0)
    }
}
