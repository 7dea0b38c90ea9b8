//! Points, finitely supported measures, kernels and cost matrices.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum(weights) - 1|` accepted by every constructor.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A point of the Euclidean state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Bit-level key for exact coordinate equality (`-0.0` and `0.0` collapse).
    pub(crate) fn key(&self) -> Vec<u64> {
        self.0
            .iter()
            .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
            .collect()
    }
}

impl From<Vec<f64>> for Point {
    /// Panics on non-finite coordinates. Use [`Point::new`] for fallible construction.
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords).expect("point coordinates must be finite")
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(coords: [f64; N]) -> Self {
        Point::from(coords.to_vec())
    }
}

/// Squared Euclidean distance. Callers are responsible for equal dimensions.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `‖a − b‖₂^p`. The `p = 2` case skips the square root so integer inputs stay exact.
#[inline]
pub fn cost_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq = squared_distance(a, b);
    if p == 2.0 {
        sq
    } else if p == 1.0 {
        sq.sqrt()
    } else {
        sq.sqrt().powf(p)
    }
}

pub(crate) fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidOrder(p));
    }
    Ok(())
}

pub(crate) fn common_dim<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> Result<Option<usize>> {
    let mut dim = None;
    for p in points {
        match dim {
            None => dim = Some(p.dim()),
            Some(d) if d != p.dim() => {
                return Err(Error::DimensionMismatch { expected: d, found: p.dim() })
            }
            _ => {}
        }
    }
    Ok(dim)
}

/// A finitely supported probability measure `Σ wᵢ δ_{xᵢ}`.
///
/// Support points need not be distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DiscreteDistribution {
    support: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDistribution {
    support: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        validate_distribution(raw.support, raw.weights)
    }
}

/// Builds a distribution after checking lengths, finiteness, signs and normalization.
pub fn validate_distribution(support: Vec<Point>, weights: Vec<f64>) -> Result<DiscreteDistribution> {
    if support.len() != weights.len() {
        return Err(Error::LengthMismatch { left: support.len(), right: weights.len() });
    }
    if support.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if weights.iter().any(|w| !w.is_finite())
        || support.iter().any(|p| p.coords().iter().any(|c| !c.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(Error::NegativeWeight { index, weight });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::WeightsNotNormalized { sum });
    }
    common_dim(&support)?;
    Ok(DiscreteDistribution { support, weights })
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        validate_distribution(support, weights)
    }

    pub fn dirac(point: Point) -> Self {
        DiscreteDistribution { support: vec![point], weights: vec![1.0] }
    }

    /// Equal weights `1/n` on each point.
    pub fn uniform(support: Vec<Point>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::EmptyDistribution);
        }
        let w = 1.0 / n as f64;
        // n * (1/n) can miss 1 by a few ulps; that is well inside tolerance.
        validate_distribution(support, vec![w; n])
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    /// Drops zero-weight atoms. The result is never empty.
    pub fn without_null_atoms(&self) -> DiscreteDistribution {
        let (support, weights) = self
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| (p.clone(), w))
            .unzip();
        DiscreteDistribution { support, weights }
    }

    /// Merges atoms with identical coordinates, keeping first-appearance order.
    pub fn merged(&self) -> DiscreteDistribution {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut support = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (p, w) in self.iter() {
            match index.get(&p.key()) {
                Some(&j) => weights[j] += w,
                None => {
                    index.insert(p.key(), support.len());
                    support.push(p.clone());
                    weights.push(w);
                }
            }
        }
        DiscreteDistribution { support, weights }
    }

    /// Weight attached to the atoms equal to `point` (summed over duplicates).
    pub fn mass_at(&self, point: &Point) -> f64 {
        let key = point.key();
        self.iter().filter(|(p, _)| p.key() == key).map(|(_, w)| w).sum()
    }
}

/// A kernel with finitely many sources, one discrete row per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct DiscreteKernel {
    sources: Vec<Point>,
    rows: Vec<DiscreteDistribution>,
}

#[derive(Deserialize)]
struct RawKernel {
    sources: Vec<Point>,
    rows: Vec<DiscreteDistribution>,
}

impl TryFrom<RawKernel> for DiscreteKernel {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        DiscreteKernel::new(raw.sources, raw.rows)
    }
}

impl DiscreteKernel {
    pub fn new(sources: Vec<Point>, rows: Vec<DiscreteDistribution>) -> Result<Self> {
        if sources.len() != rows.len() {
            return Err(Error::LengthMismatch { left: sources.len(), right: rows.len() });
        }
        common_dim(&sources)?;
        Ok(DiscreteKernel { sources, rows })
    }

    pub fn sources(&self) -> &[Point] {
        &self.sources
    }

    pub fn rows(&self) -> &[DiscreteDistribution] {
        &self.rows
    }

    pub fn row(&self, s: usize) -> &DiscreteDistribution {
        &self.rows[s]
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// True when `lambda`'s support is exactly this kernel's source list, in order.
    pub fn matches_sources(&self, lambda: &DiscreteDistribution) -> bool {
        lambda.support().len() == self.sources.len()
            && lambda.support().iter().zip(&self.sources).all(|(a, b)| a.key() == b.key())
    }
}

/// Mixture `λ∘Q`: the law of the next state when the current one is drawn from `λ`.
pub fn compose_marginal(lambda: &DiscreteDistribution, kernel: &DiscreteKernel) -> Result<DiscreteDistribution> {
    if !kernel.matches_sources(lambda) {
        return Err(Error::SourceMismatch);
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut support = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (row, ls) in kernel.rows().iter().zip(lambda.weights()) {
        for (y, q) in row.iter() {
            let mass = ls * q;
            match index.get(&y.key()) {
                Some(&j) => weights[j] += mass,
                None => {
                    index.insert(y.key(), support.len());
                    support.push(y.clone());
                    weights.push(mass);
                }
            }
        }
    }
    validate_distribution(support, weights)
}

/// Dense matrix of `d(aᵢ, b_k)^p`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    order: f64,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.entries[i * self.cols + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Euclidean cost matrix `‖Aᵢ − B_k‖₂^p`, rows computed in parallel.
pub fn pairwise_cost(a: &[Point], b: &[Point], p: f64) -> Result<CostMatrix> {
    check_order(p)?;
    common_dim(a.iter().chain(b))?;
    let cols = b.len();
    let mut entries = vec![0.0; a.len() * cols];
    if cols > 0 {
        entries
            .par_chunks_mut(cols)
            .zip(a.par_iter())
            .for_each(|(row, x)| {
                for (e, y) in row.iter_mut().zip(b) {
                    *e = cost_pow(x.coords(), y.coords(), p);
                }
            });
    }
    Ok(CostMatrix { rows: a.len(), cols, entries, order: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 2]]) -> Vec<Point> {
        v.iter().map(|&c| Point::from(c)).collect()
    }

    #[test]
    fn dirac_is_valid() {
        let d = validate_distribution(pts(&[[0.0, 0.0]]), vec![1.0]).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let err = validate_distribution(pts(&[[0.0, 0.0], [1.0, 1.0]]), vec![0.5, 0.6]).unwrap_err();
        assert!(matches!(err, Error::WeightsNotNormalized { .. }));
        assert!(validate_distribution(pts(&[[0.0, 0.0], [1.0, 1.0]]), vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            validate_distribution(pts(&[[0.0, 0.0]]), vec![0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            validate_distribution(pts(&[[0.0, 0.0], [1.0, 0.0]]), vec![1.5, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            validate_distribution(pts(&[[0.0, 0.0]]), vec![f64::NAN]),
            Err(Error::NonFinite)
        ));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn compose_single_source() {
        let lambda = DiscreteDistribution::dirac(Point::from([9.0, 9.0]));
        let row = validate_distribution(pts(&[[0.0, 0.0], [1.0, 0.0]]), vec![0.3, 0.7]).unwrap();
        let q = DiscreteKernel::new(pts(&[[9.0, 9.0]]), vec![row]).unwrap();
        let m = compose_marginal(&lambda, &q).unwrap();
        assert_eq!(m.weights(), &[0.3, 0.7]);
    }

    #[test]
    fn compose_merges_identical_rows() {
        let lambda = DiscreteDistribution::new(pts(&[[0.0, 0.0], [1.0, 0.0]]), vec![0.5, 0.5]).unwrap();
        let a = DiscreteDistribution::dirac(Point::from([5.0, 5.0]));
        let q = DiscreteKernel::new(lambda.support().to_vec(), vec![a.clone(), a]).unwrap();
        let m = compose_marginal(&lambda, &q).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn compose_two_sources() {
        // Expected by enumeration: a = .5*.2, b = .5*.8 + .5*.4, c = .5*.6.
        let lambda = DiscreteDistribution::new(pts(&[[0.0, 0.0], [1.0, 0.0]]), vec![0.5, 0.5]).unwrap();
        let r1 = DiscreteDistribution::new(pts(&[[10.0, 0.0], [11.0, 0.0]]), vec![0.2, 0.8]).unwrap();
        let r2 = DiscreteDistribution::new(pts(&[[11.0, 0.0], [12.0, 0.0]]), vec![0.4, 0.6]).unwrap();
        let q = DiscreteKernel::new(lambda.support().to_vec(), vec![r1, r2]).unwrap();
        let m = compose_marginal(&lambda, &q).unwrap();
        assert_eq!(m.len(), 3);
        assert!((m.mass_at(&Point::from([10.0, 0.0])) - 0.1).abs() < 1e-15);
        assert!((m.mass_at(&Point::from([11.0, 0.0])) - 0.6).abs() < 1e-15);
        assert!((m.mass_at(&Point::from([12.0, 0.0])) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn compose_rejects_source_mismatch() {
        let lambda = DiscreteDistribution::dirac(Point::from([0.0, 0.0]));
        let q = DiscreteKernel::new(pts(&[[1.0, 0.0]]), vec![lambda.clone()]).unwrap();
        assert_eq!(compose_marginal(&lambda, &q), Err(Error::SourceMismatch));
    }

    #[test]
    fn pairwise_cost_examples() {
        let a = pts(&[[0.0, 0.0]]);
        let b = pts(&[[3.0, 4.0]]);
        assert_eq!(pairwise_cost(&a, &b, 1.0).unwrap().entries(), &[5.0]);
        assert_eq!(pairwise_cost(&a, &b, 2.0).unwrap().entries(), &[25.0]);
        let c = pairwise_cost(&pts(&[[1.0, 1.0], [2.0, 2.0]]), &pts(&[[1.0, 1.0]]), 1.0).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
        assert!((c.get(1, 0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_cost_errors() {
        let a = pts(&[[0.0, 0.0]]);
        assert_eq!(pairwise_cost(&a, &a, 0.5), Err(Error::InvalidOrder(0.5)));
        let b = vec![Point::from([1.0])];
        assert!(matches!(pairwise_cost(&a, &b, 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_schema() {
        let d = DiscreteDistribution::new(pts(&[[0.0, 1.0], [2.0, 3.0]]), vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"support":[[0.0,1.0],[2.0,3.0]],"weights":[0.25,0.75]}"#);
        let back: DiscreteDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"support":[[0.0]],"weights":[0.9]}"#;
        assert!(serde_json::from_str::<DiscreteDistribution>(bad).is_err());
    }
}
