//! Backward evaluation of value functions over discrete systems with
//! transition risk mappings, and the kernel-error bound on the result.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cost_pow, DiscreteDistribution, DiscreteKernel, Point};
use crate::pipeline::ApproximateSystem;

/// Aggregates next-stage values under a next-state distribution.
///
/// `values[i]` is the next-stage value at `next.support()[i]`. Implementations
/// must be pure and monotone in `values`.
pub trait RiskMapping: Sync {
    fn apply(&self, state: &Point, next: &DiscreteDistribution, values: &[f64]) -> f64;
}

/// `σ(x, μ, v) = E_μ[v]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Expectation;

impl RiskMapping for Expectation {
    fn apply(&self, _state: &Point, next: &DiscreteDistribution, values: &[f64]) -> f64 {
        next.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

pub fn expectation_mapping() -> Expectation {
    Expectation
}

/// Mean-upper-semideviation: `E_μ[v] + κ E_μ[(v − E_μ[v])₊]`, monotone for `κ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSemideviation {
    kappa: f64,
}

impl MeanSemideviation {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl RiskMapping for MeanSemideviation {
    fn apply(&self, state: &Point, next: &DiscreteDistribution, values: &[f64]) -> f64 {
        let mean = Expectation.apply(state, next, values);
        let upper: f64 = next.weights().iter().zip(values).map(|(w, v)| w * (v - mean).max(0.0)).sum();
        mean + self.kappa * upper
    }
}

pub fn semideviation_mapping(kappa: f64) -> Result<MeanSemideviation> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidKappa(kappa));
    }
    Ok(MeanSemideviation { kappa })
}

/// Serializable choice of mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MappingSpec {
    #[default]
    Expectation,
    Semideviation { kappa: f64 },
}

impl MappingSpec {
    pub fn build(&self) -> Result<Box<dyn RiskMapping>> {
        Ok(match *self {
            MappingSpec::Expectation => Box::new(Expectation),
            MappingSpec::Semideviation { kappa } => Box::new(semideviation_mapping(kappa)?),
        })
    }
}

/// `c(x) = constant + linear·x + norm ‖x‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AffineNormCost {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub norm: f64,
}

impl AffineNormCost {
    pub fn eval(&self, x: &Point) -> f64 {
        let lin: f64 = self.linear.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        let norm = x.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        self.constant + lin + self.norm * norm
    }
}

/// A finite-state system: `kernels[t]` maps `X_t` into `X_{t+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSystem {
    pub kernels: Vec<DiscreteKernel>,
}

impl DiscreteSystem {
    pub fn new(kernels: Vec<DiscreteKernel>) -> Self {
        DiscreteSystem { kernels }
    }

    pub fn horizon(&self) -> usize {
        self.kernels.len()
    }

    /// `X_T`: distinct atoms of the last kernel's rows, first-appearance order.
    pub fn terminal_support(&self) -> Vec<Point> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        if let Some(last) = self.kernels.last() {
            for row in last.rows() {
                for p in row.support() {
                    if seen.insert(p.key(), ()).is_none() {
                        out.push(p.clone());
                    }
                }
            }
        }
        out
    }
}

impl From<&ApproximateSystem> for DiscreteSystem {
    fn from(sys: &ApproximateSystem) -> Self {
        DiscreteSystem::new(sys.kernels())
    }
}

/// Values of one stage, keyed by exact coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageValues {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    #[serde(skip)]
    index: HashMap<Vec<u64>, usize>,
}

impl StageValues {
    fn new(points: Vec<Point>, values: Vec<f64>) -> Self {
        let index = points.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
        StageValues { points, values, index }
    }

    pub fn get(&self, x: &Point) -> Option<f64> {
        self.index.get(&x.key()).map(|&i| self.values[i])
    }

    /// `max |v(y) − v(y')| / d(y, y')` over distinct support pairs.
    pub fn lipschitz(&self) -> f64 {
        let mut l: f64 = 0.0;
        for i in 0..self.points.len() {
            for j in 0..i {
                let d = cost_pow(self.points[i].coords(), self.points[j].coords(), 1.0);
                if d > 0.0 {
                    l = l.max((self.values[i] - self.values[j]).abs() / d);
                }
            }
        }
        l
    }
}

/// `v_0, …, v_T` on the supports `X_0, …, X_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub stages: Vec<StageValues>,
}

impl ValueTable {
    pub fn stage(&self, t: usize) -> &StageValues {
        &self.stages[t]
    }

    pub fn value(&self, t: usize, x: &Point) -> Option<f64> {
        self.stages.get(t)?.get(x)
    }

    /// CSV rows `t,x_1,…,x_d,v`.
    pub fn to_csv(&self) -> String {
        let dim = self.stages.iter().flat_map(|s| s.points.first()).map(|p| p.dim()).next().unwrap_or(0);
        let mut out = String::from("t");
        for d in 0..dim {
            out.push_str(&format!(",x{}", d + 1));
        }
        out.push_str(",v\n");
        for (t, st) in self.stages.iter().enumerate() {
            for (p, v) in st.points.iter().zip(&st.values) {
                out.push_str(&t.to_string());
                for c in p.coords() {
                    out.push_str(&format!(",{c}"));
                }
                out.push_str(&format!(",{v}\n"));
            }
        }
        out
    }
}

/// `v_T = c_T` on `X_T`; `v_t(x) = c_t(x) + σ(x, Q_t(x), v_{t+1})` for `x ∈ X_t`.
pub fn evaluate_backward(
    system: &DiscreteSystem,
    costs: &(dyn Fn(usize, &Point) -> f64 + Sync),
    sigma: &dyn RiskMapping,
) -> Result<ValueTable> {
    let horizon = system.horizon();
    let terminal = system.terminal_support();
    let terminal_values = terminal.iter().map(|x| costs(horizon, x)).collect();
    let mut stages = vec![StageValues::new(terminal, terminal_values)];
    for t in (0..horizon).rev() {
        let next = stages.last().expect("terminal stage present");
        let kernel = &system.kernels[t];
        let values = kernel
            .sources()
            .par_iter()
            .zip(kernel.rows().par_iter())
            .map(|(x, row)| {
                let next_values = row
                    .support()
                    .iter()
                    .map(|y| next.get(y).ok_or(Error::MissingValue(t + 1)))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(costs(t, x) + sigma.apply(x, row, &next_values))
            })
            .collect::<Result<Vec<f64>>>()?;
        stages.push(StageValues::new(kernel.sources().to_vec(), values));
    }
    stages.reverse();
    Ok(ValueTable { stages })
}

/// `Σ_{τ=t}^{T−1} L_τ (Π_{j=t}^{τ−1} K_j) Δ_τ` with `T = delta.len()`.
pub fn error_bound(lipschitz: &[f64], contraction: &[f64], delta: &[f64], t: usize) -> Result<f64> {
    let horizon = delta.len();
    if t >= horizon {
        return Err(Error::IndexRange { index: t, horizon });
    }
    if lipschitz.len() < horizon {
        return Err(Error::IndexRange { index: lipschitz.len(), horizon });
    }
    if contraction.len() + 1 < horizon {
        return Err(Error::IndexRange { index: contraction.len(), horizon });
    }
    let mut total = 0.0;
    let mut product = 1.0;
    for tau in t..horizon {
        total += lipschitz[tau] * product * delta[tau];
        if tau + 1 < horizon {
            product *= contraction[tau];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> DiscreteDistribution {
        DiscreteDistribution::dirac(Point::from([x]))
    }

    #[test]
    fn expectation_examples() {
        let x = Point::from([0.0]);
        assert_eq!(Expectation.apply(&x, &dirac(3.0), &[7.0]), 7.0);
        let mu = DiscreteDistribution::uniform(vec![Point::from([0.0]), Point::from([1.0])]).unwrap();
        assert_eq!(Expectation.apply(&x, &mu, &[0.0, 2.0]), 1.0);
    }

    #[test]
    fn semideviation_examples() {
        let x = Point::from([0.0]);
        let mu = DiscreteDistribution::uniform(vec![Point::from([0.0]), Point::from([1.0])]).unwrap();
        assert_eq!(semideviation_mapping(1.0).unwrap().apply(&x, &mu, &[0.0, 2.0]), 1.5);
        assert_eq!(semideviation_mapping(0.0).unwrap().apply(&x, &mu, &[0.0, 2.0]), 1.0);
        assert_eq!(semideviation_mapping(1.5).unwrap_err(), Error::InvalidKappa(1.5));
    }

    #[test]
    fn deterministic_chain_path_sum() {
        let k0 = DiscreteKernel::new(vec![Point::from([0.0])], vec![dirac(1.0)]).unwrap();
        let k1 = DiscreteKernel::new(vec![Point::from([1.0])], vec![dirac(2.0)]).unwrap();
        let sys = DiscreteSystem::new(vec![k0, k1]);
        let costs = |t: usize, x: &Point| (t + 1) as f64 * 10.0 + x.coords()[0];
        let table = evaluate_backward(&sys, &costs, &Expectation).unwrap();
        // c0(0) + c1(1) + c2(2) = 10 + 21 + 32
        assert_eq!(table.value(0, &Point::from([0.0])), Some(63.0));
        let zero = |_: usize, _: &Point| 0.0;
        let table = evaluate_backward(&sys, &zero, &Expectation).unwrap();
        assert!(table.stages.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn missing_value_is_reported() {
        let k0 = DiscreteKernel::new(vec![Point::from([0.0])], vec![dirac(1.0)]).unwrap();
        let k1 = DiscreteKernel::new(vec![Point::from([5.0])], vec![dirac(2.0)]).unwrap();
        let sys = DiscreteSystem::new(vec![k0, k1]);
        let zero = |_: usize, _: &Point| 0.0;
        assert_eq!(evaluate_backward(&sys, &zero, &Expectation).unwrap_err(), Error::MissingValue(1));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(error_bound(&[1.0, 1.0], &[1.0], &[0.0, 0.0], 0).unwrap(), 0.0);
        assert!((error_bound(&[1.0, 1.0], &[1.0], &[0.1, 0.2], 0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(error_bound(&[2.0, 3.0], &[5.0], &[0.1, 0.2], 1).unwrap(), 3.0 * 0.2);
        assert!(matches!(error_bound(&[1.0], &[], &[0.1], 1), Err(Error::IndexRange { .. })));
    }

    #[test]
    fn cost_expression() {
        let c = AffineNormCost { constant: 1.0, linear: vec![2.0, 0.0], norm: 0.5 };
        assert_eq!(c.eval(&Point::from([3.0, 4.0])), 1.0 + 6.0 + 2.5);
    }
}
