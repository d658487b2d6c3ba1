//! Ultrametric spaces: ball partitions, ultraweightings and ultramagnitude.
//!
//! All radius comparisons are `d ≤ r` on stored values with no tolerance.
//! At scale `t` the radius is `1 / t`, matching the covering and packing
//! numbers of [`crate::dimension`] at `ε = 1 / t`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dimension::{self, DimensionError, DimensionEstimate, WindowPolicy};
use crate::magnitude::CurvePoint;
use crate::metric::FiniteMetricSpace;

/// Largest tree the generator will build.
pub const MAX_TREE_POINTS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum UltraError {
    #[error("not ultrametric: d({i},{k}) = {direct} > max(d({i},{j}), d({j},{k})) = {bound}")]
    NotUltrametric {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        bound: f64,
    },
    #[error("level distances must be positive, finite and strictly decreasing")]
    NonDecreasingLevels,
    #[error("expected {expected} level distances, got {found}")]
    LevelCount { expected: usize, found: usize },
    #[error("tree too large: {0} leaves")]
    TooLarge(usize),
    #[error("branching must be at least 1")]
    InvalidBranching,
    #[error("invalid radius or scale {0}")]
    InvalidScale(f64),
}

/// A metric space certified to satisfy the strong triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricSpace {
    base: FiniteMetricSpace,
}

impl UltrametricSpace {
    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn certified(&self) -> bool {
        true
    }

    /// Distinct off-diagonal distances, increasing.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let n = self.len();
        let set: BTreeSet<u64> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.base.dist(i, j).to_bits())
            .collect();
        // Positive finite floats order like their bit patterns.
        set.into_iter().map(f64::from_bits).collect()
    }
}

/// Check `d(i,k) ≤ max(d(i,j), d(j,k))` for every triple.
pub fn validate_ultrametric(space: FiniteMetricSpace) -> Result<UltrametricSpace, UltraError> {
    let n = space.len();
    for i in 0..n {
        for k in (i + 1)..n {
            let direct = space.dist(i, k);
            for j in 0..n {
                let bound = space.dist(i, j).max(space.dist(j, k));
                if direct > bound {
                    return Err(UltraError::NotUltrametric {
                        i,
                        j,
                        k,
                        direct,
                        bound,
                    });
                }
            }
        }
    }
    Ok(UltrametricSpace { base: space })
}

/// Closed balls of one radius, which partition an ultrametric space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BallPartition {
    pub radius_bits: u64,
    /// Blocks in order of their smallest index, each sorted.
    pub blocks: Vec<Vec<usize>>,
}

impl BallPartition {
    pub fn radius(&self) -> f64 {
        f64::from_bits(self.radius_bits)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block index of every point.
    pub fn block_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // The smaller index becomes the root, so roots are block minima.
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Equivalence classes of `d(a, b) ≤ radius`.
pub fn ball_partition(space: &UltrametricSpace, radius: f64) -> Result<BallPartition, UltraError> {
    if radius.is_nan() || radius < 0.0 {
        return Err(UltraError::InvalidScale(radius));
    }
    let n = space.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if space.base.dist(i, j) <= radius {
                uf.union(i, j);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    Ok(BallPartition {
        radius_bits: radius.to_bits(),
        blocks,
    })
}

/// The ultraweighting `w(a) = 1 / #B(a, 1)` as exact rationals.
pub fn ultraweighting_exact(space: &UltrametricSpace) -> Vec<Ratio<u64>> {
    let p = ball_partition(space, 1.0).expect("radius 1 is valid");
    let block = p.block_of(space.len());
    block
        .into_iter()
        .map(|b| Ratio::new(1, p.blocks[b].len() as u64))
        .collect()
}

/// The ultraweighting as floats.
pub fn ultraweighting(space: &UltrametricSpace) -> Vec<f64> {
    ultraweighting_exact(space)
        .into_iter()
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .collect()
}

/// `ξ w` for the similarity `ξ(a, b) = [d(a, b) ≤ 1]`, exactly.
pub fn apply_similarity(space: &UltrametricSpace, w: &[Ratio<u64>]) -> Vec<Ratio<u64>> {
    let n = space.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| space.base.dist(i, j) <= 1.0)
                .map(|j| w[j])
                .sum()
        })
        .collect()
}

/// `|tA|_U`, the number of closed balls of radius `1/t`.
pub fn ultramagnitude(space: &UltrametricSpace, t: f64) -> Result<usize, UltraError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(UltraError::InvalidScale(t));
    }
    Ok(ball_partition(space, 1.0 / t)?.len())
}

/// One step of the ultramagnitude function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UltraStep {
    /// A breakpoint `1/d` for a distinct distance `d`.
    pub t: f64,
    /// `|tA|_U` at the breakpoint itself. Just above it the value is the
    /// next row's, or `n` after the last row.
    pub value: usize,
}

/// `|tA|_U` at every breakpoint, in increasing `t`.
pub fn ultramagnitude_steps(space: &UltrametricSpace) -> Vec<UltraStep> {
    let mut ds = space.distinct_distances();
    ds.reverse();
    ds.into_iter()
        .map(|d| {
            let t = 1.0 / d;
            UltraStep {
                t,
                value: ultramagnitude(space, t).expect("breakpoints are positive"),
            }
        })
        .collect()
}

/// `|tA|_U` over a grid of scales.
pub fn ultramagnitude_curve(space: &UltrametricSpace, grid: &[f64]) -> Result<Vec<CurvePoint>, UltraError> {
    grid.iter()
        .map(|&t| {
            Ok(CurvePoint {
                t,
                value: ultramagnitude(space, t)? as f64,
            })
        })
        .collect()
}

/// Slope of `log |tA|_U` against `log t`.
pub fn ultramagnitude_dimension(
    space: &UltrametricSpace,
    grid: &[f64],
    policy: WindowPolicy,
) -> Result<DimensionEstimate, DimensionError> {
    let curve = ultramagnitude_curve(space, grid).map_err(|_| DimensionError::InvalidGrid)?;
    dimension::scaling_exponent(&curve, space.len(), policy)
}

/// Leaves of a rooted tree of height `depth`; two leaves whose lowest
/// common ancestor sits at level `l` are at distance `level_distances[l]`.
///
/// Without a seed every internal node has `branching` children. With a
/// seed each node draws its child count uniformly from `1..=branching`.
pub fn ultrametric_tree(
    depth: usize,
    branching: usize,
    level_distances: &[f64],
    seed: Option<u64>,
) -> Result<UltrametricSpace, UltraError> {
    if branching == 0 {
        return Err(UltraError::InvalidBranching);
    }
    if level_distances.len() != depth {
        return Err(UltraError::LevelCount {
            expected: depth,
            found: level_distances.len(),
        });
    }
    let ok = level_distances.iter().all(|d| d.is_finite() && *d > 0.0)
        && level_distances.windows(2).all(|w| w[0] > w[1]);
    if !ok {
        return Err(UltraError::NonDecreasingLevels);
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    // Each leaf is its path of child indices from the root.
    let mut paths: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in &paths {
            let k = match rng.as_mut() {
                Some(r) => r.gen_range(1..=branching),
                None => branching,
            };
            for c in 0..k {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
            if next.len() > MAX_TREE_POINTS {
                return Err(UltraError::TooLarge(next.len()));
            }
        }
        paths = next;
    }
    let n = paths.len();
    let dist = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let level = paths[i]
            .iter()
            .zip(&paths[j])
            .position(|(a, b)| a != b)
            .expect("distinct leaves differ somewhere");
        level_distances[level]
    });
    Ok(UltrametricSpace {
        base: FiniteMetricSpace::from_parts_unchecked(dist, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: Vec<Vec<f64>>) -> FiniteMetricSpace {
        let n = rows.len();
        FiniteMetricSpace::from_rows(&rows, 1e-9).unwrap_or_else(|e| panic!("{n}: {e}"))
    }

    #[test]
    fn validation() {
        assert!(validate_ultrametric(space(vec![vec![0.0, 1.0], vec![1.0, 0.0]])).is_ok());
        let eq = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(validate_ultrametric(space(eq)).is_ok());
        let line = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        match validate_ultrametric(space(line)) {
            Err(UltraError::NotUltrametric { i, j, k, direct, bound }) => {
                assert_eq!((i, j, k), (0, 1, 2));
                assert_eq!((direct, bound), (2.0, 1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partitions() {
        let s = validate_ultrametric(space(vec![
            vec![0.0, 0.5, 2.0],
            vec![0.5, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ]))
        .unwrap();
        assert_eq!(ball_partition(&s, 1.0).unwrap().blocks, vec![vec![0, 1], vec![2]]);
        assert_eq!(ball_partition(&s, 2.0).unwrap().len(), 1);
        assert_eq!(ball_partition(&s, 0.4).unwrap().len(), 3);
        let w = ultraweighting(&s);
        assert_eq!(w, vec![0.5, 0.5, 1.0]);
        let exact = ultraweighting_exact(&s);
        assert!(apply_similarity(&s, &exact).iter().all(|v| *v == Ratio::from_integer(1)));
        let total: Ratio<u64> = exact.iter().sum();
        assert_eq!(total, Ratio::from_integer(ultramagnitude(&s, 1.0).unwrap() as u64));
    }

    #[test]
    fn extreme_weightings() {
        let far = ultrametric_tree(1, 4, &[3.0], None).unwrap();
        assert_eq!(ultraweighting(&far), vec![1.0; 4]);
        let near = ultrametric_tree(1, 4, &[0.5], None).unwrap();
        assert_eq!(ultraweighting(&near), vec![0.25; 4]);
    }

    #[test]
    fn trees() {
        let t = ultrametric_tree(1, 3, &[2.0], None).unwrap();
        assert_eq!(t.len(), 3);
        assert!((0..3).all(|i| (0..3).all(|j| i == j || t.base().dist(i, j) == 2.0)));
        let t = ultrametric_tree(2, 2, &[2.0, 0.5], None).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(ball_partition(&t, 1.0).unwrap().len(), 2);
        assert!(validate_ultrametric(t.base().clone()).is_ok());
        assert_eq!(
            ultrametric_tree(2, 2, &[0.5, 2.0], None),
            Err(UltraError::NonDecreasingLevels)
        );
        assert_eq!(
            ultrametric_tree(2, 2, &[1.0, 1.0], None),
            Err(UltraError::NonDecreasingLevels)
        );
        let r = ultrametric_tree(3, 3, &[4.0, 1.0, 0.25], Some(9)).unwrap();
        assert_eq!(r, ultrametric_tree(3, 3, &[4.0, 1.0, 0.25], Some(9)).unwrap());
        assert!(validate_ultrametric(r.base().clone()).is_ok());
    }

    #[test]
    fn ultramagnitude_limits_and_steps() {
        let t = ultrametric_tree(2, 2, &[2.0, 0.5], None).unwrap();
        assert_eq!(ultramagnitude(&t, 0.5).unwrap(), 1);
        assert_eq!(ultramagnitude(&t, 0.1).unwrap(), 1);
        assert_eq!(ultramagnitude(&t, 2.5).unwrap(), 4);
        let steps = ultramagnitude_steps(&t);
        assert_eq!(
            steps,
            vec![UltraStep { t: 0.5, value: 1 }, UltraStep { t: 2.0, value: 2 }]
        );
        assert!(ultramagnitude(&t, 0.0).is_err());
    }
}
