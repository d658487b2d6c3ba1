//! Generators for canonical test spaces, and magnitude of homogeneous spaces.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::magnitude::MagnitudeError;
use crate::metric::{FiniteMetricSpace, MetricError};

/// Largest supported Cantor level.
pub const MAX_CANTOR_LEVEL: u32 = 12;
/// Largest supported Sierpinski level.
pub const MAX_SIERPINSKI_LEVEL: u32 = 8;
/// Tolerance of the row-multiset comparison.
pub const TRANSITIVITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("level {level} exceeds the maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },
    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("row {row} is not a permutation of row 0")]
    NotTransitive { row: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Magnitude(#[from] MagnitudeError),
}

fn positive(name: &'static str, value: f64) -> Result<(), SpaceError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SpaceError::InvalidParameter {
            name,
            requirement: "finite and positive",
            value,
        })
    }
}

fn at_least(name: &'static str, value: usize, min: usize) -> Result<(), SpaceError> {
    if value >= min {
        Ok(())
    } else {
        Err(SpaceError::InvalidParameter {
            name,
            requirement: if min == 1 { "at least 1" } else { "at least 2" },
            value: value as f64,
        })
    }
}

fn line(xs: Vec<f64>) -> FiniteMetricSpace {
    let n = xs.len();
    let dist = DMatrix::from_fn(n, n, |i, j| (xs[i] - xs[j]).abs());
    FiniteMetricSpace::from_parts_unchecked(dist, Some(xs.into_iter().map(|x| vec![x]).collect()))
}

/// `n` evenly spaced points on `[0, length]`, both endpoints included.
pub fn interval_grid(length: f64, n: usize) -> Result<FiniteMetricSpace, SpaceError> {
    positive("length", length)?;
    at_least("n", n, 2)?;
    let xs = (0..n)
        .map(|i| length * i as f64 / (n - 1) as f64)
        .collect();
    Ok(line(xs))
}

/// All `2^{k+1}` interval endpoints of the level-`k` middle-thirds
/// construction on `[0, 1]`, in increasing order.
pub fn cantor_endpoints(level: u32) -> Result<FiniteMetricSpace, SpaceError> {
    if level > MAX_CANTOR_LEVEL {
        return Err(SpaceError::LevelTooLarge {
            level,
            max: MAX_CANTOR_LEVEL,
        });
    }
    // Left endpoints as integer numerators over 3^k.
    let mut lefts: Vec<u64> = vec![0];
    for _ in 0..level {
        lefts = lefts
            .iter()
            .flat_map(|&a| [3 * a, 3 * a + 2])
            .collect();
    }
    let denom = 3u64.pow(level) as f64;
    let xs = lefts
        .iter()
        .flat_map(|&a| [a as f64 / denom, (a + 1) as f64 / denom])
        .collect();
    Ok(line(xs))
}

/// Distance used on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleMetric {
    /// Arc length.
    #[default]
    Geodesic,
    /// Euclidean distance in the plane.
    Chordal,
}

/// A finite space whose distance rows are all permutations of one another.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSpace {
    base: FiniteMetricSpace,
}

impl HomogeneousSpace {
    /// Check the row-multiset certificate.
    pub fn certify(base: FiniteMetricSpace) -> Result<Self, SpaceError> {
        let n = base.len();
        let sorted_row = |i: usize| {
            let mut r: Vec<f64> = (0..n).map(|j| base.dist(i, j)).collect();
            r.sort_by(f64::total_cmp);
            r
        };
        let first = sorted_row(0);
        let scale = base.diameter().max(f64::MIN_POSITIVE);
        for i in 1..n {
            let r = sorted_row(i);
            let same = first
                .iter()
                .zip(&r)
                .all(|(a, b)| (a - b).abs() <= TRANSITIVITY_TOLERANCE * scale);
            if !same {
                return Err(SpaceError::NotTransitive { row: i });
            }
        }
        Ok(HomogeneousSpace { base })
    }

    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn into_base(self) -> FiniteMetricSpace {
        self.base
    }

    /// Always true for a constructed value.
    pub fn transitive(&self) -> bool {
        true
    }
}

/// `n` equally spaced points on the circle of radius `radius`.
pub fn circle_uniform(
    radius: f64,
    n: usize,
    metric: CircleMetric,
) -> Result<HomogeneousSpace, SpaceError> {
    positive("radius", radius)?;
    at_least("n", n, 2)?;
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            vec![radius * a.cos(), radius * a.sin()]
        })
        .collect();
    // Distances depend only on the cyclic offset, so every row is an
    // exact rotation of row 0.
    let by_offset: Vec<f64> = (0..n)
        .map(|k| {
            let steps = k.min(n - k) as f64;
            let angle = 2.0 * PI * steps / n as f64;
            match metric {
                CircleMetric::Geodesic => radius * angle,
                CircleMetric::Chordal => 2.0 * radius * (angle / 2.0).sin(),
            }
        })
        .collect();
    let dist = DMatrix::from_fn(n, n, |i, j| by_offset[(j + n - i) % n]);
    let ambient = match metric {
        CircleMetric::Chordal => Some(coords),
        CircleMetric::Geodesic => None,
    };
    HomogeneousSpace::certify(FiniteMetricSpace::from_parts_unchecked(dist, ambient))
}

/// Vertices of all level-`k` triangles of the Sierpinski gasket built on
/// the unit equilateral triangle with vertices `(0,0)`, `(1,0)`,
/// `(1/2, √3/2)`.
pub fn sierpinski_points(level: u32) -> Result<FiniteMetricSpace, SpaceError> {
    if level > MAX_SIERPINSKI_LEVEL {
        return Err(SpaceError::LevelTooLarge {
            level,
            max: MAX_SIERPINSKI_LEVEL,
        });
    }
    // Lattice coordinates (a, b) meaning a·e1 + b·e2 over 2^k, with
    // e1 = (1, 0) and e2 = (1/2, √3/2).
    let mut triangles: Vec<(u64, u64)> = vec![(0, 0)];
    for _ in 0..level {
        triangles = triangles
            .iter()
            .flat_map(|&(a, b)| [(2 * a, 2 * b), (2 * a + 1, 2 * b), (2 * a, 2 * b + 1)])
            .collect();
    }
    let vertices: BTreeSet<(u64, u64)> = triangles
        .iter()
        .flat_map(|&(a, b)| [(a, b), (a + 1, b), (a, b + 1)])
        .collect();
    let side = 2f64.powi(level as i32);
    let h = 3f64.sqrt() / 2.0;
    let coords = vertices
        .into_iter()
        .map(|(a, b)| vec![(a as f64 + b as f64 / 2.0) / side, b as f64 * h / side])
        .collect();
    Ok(FiniteMetricSpace::from_points(coords)?)
}

/// `per_side × per_side` grid filling the square `[0, side]²`.
pub fn grid2d(side: f64, per_side: usize) -> Result<FiniteMetricSpace, SpaceError> {
    positive("side", side)?;
    at_least("per_side", per_side, 2)?;
    let step = |i: usize| side * i as f64 / (per_side - 1) as f64;
    let coords = (0..per_side)
        .flat_map(|i| (0..per_side).map(move |j| (i, j)))
        .map(|(i, j)| vec![step(i), step(j)])
        .collect();
    Ok(FiniteMetricSpace::from_points(coords)?)
}

/// `n` points uniform in `[0, 1]^dim`, reproducible from `seed`.
pub fn random_cloud(n: usize, dim: usize, seed: u64) -> Result<FiniteMetricSpace, SpaceError> {
    at_least("n", n, 1)?;
    at_least("dim", dim, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    Ok(FiniteMetricSpace::from_points(coords)?)
}

/// `N / Σ_j exp(-t d(a₀, a_j))`, the magnitude of a homogeneous space.
pub fn homogeneous_magnitude(space: &HomogeneousSpace, t: f64) -> Result<f64, SpaceError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(MagnitudeError::InvalidScale(t).into());
    }
    let base = space.base();
    let n = base.len();
    let row: f64 = (0..n).map(|j| (-t * base.dist(0, j)).exp()).sum();
    Ok(n as f64 / row)
}

/// `πrt / (1 - exp(-πrt))`, the magnitude of the continuum geodesic circle
/// of radius `r` at scale `t`.
pub fn circle_continuum_magnitude(radius: f64, t: f64) -> Result<f64, SpaceError> {
    positive("radius", radius)?;
    positive("t", t)?;
    let x = PI * radius * t;
    // x / (1 - e^{-x}) = x / -expm1(-x)
    Ok(x / -(-x).exp_m1())
}
