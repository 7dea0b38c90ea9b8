//! Seeded scenario generators: Gaussian mixture particle clouds and Sobol
//! candidate lattices.
//!
//! Normal variates come from the ziggurat sampler of `rand_distr`
//! (`StandardNormal`) fed by ChaCha8. Component `c` of a mixture draws from
//! ChaCha8 seeded with the run seed on stream `c`, so each cloud is fixed by
//! `(seed, c)` alone.
//!
//! Sobol direction numbers are the `new-joe-kuo-6.21201` set of S. Joe and
//! F. Y. Kuo (<https://web.maths.unsw.edu.au/~fkuo/sobol/>), first 13
//! dimensions. Points are produced in Gray-code order starting at the origin.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Point;

/// A normal distribution `N(mean, covariance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComponent", into = "RawComponent")]
pub struct GaussianComponent {
    mean: Point,
    covariance: Vec<Vec<f64>>,
    #[serde(skip)]
    factor: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawComponent {
    mean: Point,
    covariance: Vec<Vec<f64>>,
}

impl TryFrom<RawComponent> for GaussianComponent {
    type Error = Error;
    fn try_from(raw: RawComponent) -> Result<Self> {
        GaussianComponent::new(raw.mean, raw.covariance)
    }
}

impl From<GaussianComponent> for RawComponent {
    fn from(c: GaussianComponent) -> Self {
        RawComponent { mean: c.mean, covariance: c.covariance }
    }
}

impl GaussianComponent {
    pub fn new(mean: Point, covariance: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.dim();
        if covariance.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.len() });
        }
        if let Some(r) = covariance.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
        for i in 0..d {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs() > 1e-12 {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
        let factor = m.cholesky().ok_or(Error::NotPositiveDefinite)?.unpack();
        Ok(GaussianComponent { mean, covariance, factor })
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    pub fn covariance(&self) -> &[Vec<f64>] {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// Draws `n` points as `mean + L z` with `z` standard normal and `L Lᵀ = Σ`.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        let d = self.dim();
        let mean = DVector::from_column_slice(self.mean.coords());
        (0..n)
            .map(|_| {
                let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
                let x = &mean + &self.factor * z;
                Point::from(x.as_slice().to_vec())
            })
            .collect()
    }
}

/// One cloud of `n_per_component` samples for each component.
pub fn sample_gaussian_mixture(components: &[GaussianComponent], n_per_component: usize, seed: u64) -> Result<Vec<Vec<Point>>> {
    if n_per_component == 0 {
        return Err(Error::InvalidConfig("n_per_component must be at least 1".into()));
    }
    Ok(components
        .iter()
        .enumerate()
        .map(|(c, comp)| comp.sample(n_per_component, &mut component_rng(seed, c as u64)))
        .collect())
}

pub(crate) fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The five-component planar mixture used as the reference benchmark.
pub fn reference_mixture() -> Vec<GaussianComponent> {
    let spec: [([f64; 2], [[f64; 2]; 2]); 5] = [
        ([0.0, 0.0], [[0.5, -0.2], [-0.2, 0.5]]),
        ([4.0, -1.0], [[2.0, 0.0], [0.0, 2.0]]),
        ([-3.0, 3.0], [[1.0, -0.1], [-0.1, 1.0]]),
        ([2.5, 2.5], [[2.0, 0.5], [0.5, 2.0]]),
        ([-1.0, -2.0], [[1.6, -1.2], [-1.2, 1.6]]),
    ];
    spec.iter()
        .map(|(m, s)| {
            GaussianComponent::new(Point::from(*m), s.iter().map(|r| r.to_vec()).collect())
                .expect("reference covariances are positive definite")
        })
        .collect()
}

/// `(s, a, m_1..m_s)` for Sobol dimensions 2 and up.
const DIRECTIONS: [(u32, u32, &[u32]); 12] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
];

pub const MAX_SOBOL_DIM: usize = DIRECTIONS.len() + 1;
const BITS: usize = 32;

fn direction_vectors(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (31 - i);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[dim - 1];
    let s = s as usize;
    for i in 0..s {
        v[i] = m[i] << (31 - i);
    }
    for i in s..BITS {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for k in 0..s - 1 {
            if (a >> k) & 1 == 1 {
                v[i] ^= v[i - s + 1 + k];
            }
        }
    }
    v
}

/// The first `count` Sobol points in `[0,1)^dim`, mapped affinely into `[low, high)`.
pub fn sobol_lattice(dim: usize, count: usize, low: &Point, high: &Point) -> Result<Vec<Point>> {
    if dim == 0 || dim > MAX_SOBOL_DIM {
        return Err(Error::DimUnsupported(dim));
    }
    if low.dim() != dim || high.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: low.dim().min(high.dim()) });
    }
    if let Some(c) = (0..dim).find(|&c| low.coords()[c] >= high.coords()[c]) {
        return Err(Error::DegenerateBox(c));
    }
    if count == 0 || count as u64 > 1u64 << BITS {
        return Err(Error::InvalidConfig(format!("Sobol count {count} out of range")));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(direction_vectors).collect();
    let mut x = vec![0u32; dim];
    let mut out = Vec::with_capacity(count);
    let scale = 1.0 / (1u64 << BITS) as f64;
    for i in 0..count {
        if i > 0 {
            let c = (i - 1).trailing_ones() as usize;
            for (xd, v) in x.iter_mut().zip(&dirs) {
                *xd ^= v[c];
            }
        }
        let coords: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(d, &xd)| {
                let (lo, hi) = (low.coords()[d], high.coords()[d]);
                // u < 1 strictly; clamp guards against rounding onto `hi`
                let y = lo + (xd as f64 * scale) * (hi - lo);
                if y >= hi { lo.max(hi - (hi - lo) * f64::EPSILON) } else { y }
            })
            .collect();
        out.push(Point::from(coords));
    }
    Ok(out)
}

/// Axis-aligned bounding box of `points`, widened by `margin` times its extent on every side.
pub fn expanded_bounding_box(points: &[Point], margin: f64) -> Option<(Point, Point)> {
    let first = points.first()?;
    let d = first.dim();
    let mut lo = first.coords().to_vec();
    let mut hi = lo.clone();
    for p in points {
        for c in 0..d {
            lo[c] = lo[c].min(p.coords()[c]);
            hi[c] = hi[c].max(p.coords()[c]);
        }
    }
    for c in 0..d {
        let ext = hi[c] - lo[c];
        let pad = if ext > 0.0 { margin * ext } else { 0.5 };
        lo[c] -= pad;
        hi[c] += pad;
    }
    Some((Point::from(lo), Point::from(hi)))
}
