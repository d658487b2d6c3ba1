//! Independent oracles and random inputs shared by the integration tests.
#![allow(dead_code)]

use metric_magnitude::metric::FiniteMetricSpace;
use metric_magnitude::nalgebra::{DMatrix, DVector};
use metric_magnitude::ultra::{self, UltrametricSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, side: f64) -> FiniteMetricSpace {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>() * side).collect())
        .collect();
    FiniteMetricSpace::from_points(pts).expect("distinct points")
}

pub fn line_points(xs: &[f64]) -> FiniteMetricSpace {
    FiniteMetricSpace::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap()
}

/// Sorted random points on a line with gaps at least `min_gap`.
pub fn random_line(rng: &mut ChaCha8Rng, n: usize, min_gap: f64, max_gap: f64) -> Vec<f64> {
    let mut x = rng.gen::<f64>();
    let mut v = vec![x];
    for _ in 1..n {
        x += rng.gen_range(min_gap..max_gap);
        v.push(x);
    }
    v
}

/// Magnitude of a subset of the line: `1 + Σ tanh(t g / 2)` over the gaps.
pub fn line_magnitude(xs: &[f64], t: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    1.0 + s.windows(2).map(|w| (t * (w[1] - w[0]) / 2.0).tanh()).sum::<f64>()
}

/// Dense LU solve of `ζ w = 1`, summed.
pub fn lu_magnitude(space: &FiniteMetricSpace, t: f64) -> f64 {
    let n = space.len();
    let z = DMatrix::from_fn(n, n, |i, j| (-t * space.dist(i, j)).exp());
    z.lu().solve(&DVector::from_element(n, 1.0)).expect("nonsingular").sum()
}

/// Minimum number of closed `eps`-balls centred in the space covering it.
pub fn exhaustive_cover(space: &FiniteMetricSpace, eps: f64) -> usize {
    let n = space.len();
    assert!(n <= 16);
    let balls: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&x| space.dist(c, x) <= eps).fold(0, |m, x| m | 1 << x))
        .collect();
    let full = (1u32 << n) - 1;
    (1u32..=full)
        .filter(|s| {
            let covered = (0..n).filter(|&c| s >> c & 1 == 1).fold(0, |m, c| m | balls[c]);
            covered == full
        })
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap()
}

/// Maximum number of pairwise disjoint closed `eps`-balls in the space.
pub fn exhaustive_packing(space: &FiniteMetricSpace, eps: f64) -> usize {
    let n = space.len();
    assert!(n <= 16);
    let balls: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&x| space.dist(c, x) <= eps).fold(0, |m, x| m | 1 << x))
        .collect();
    (1u32..(1u32 << n))
        .filter(|s| {
            let mut seen = 0u32;
            for c in (0..n).filter(|&c| s >> c & 1 == 1) {
                if seen & balls[c] != 0 {
                    return false;
                }
                seen |= balls[c];
            }
            true
        })
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap()
}

/// Random ultrametric tree with random level distances and at most
/// `max_points` leaves.
pub fn random_tree(rng: &mut ChaCha8Rng, max_points: usize) -> UltrametricSpace {
    loop {
        let depth = rng.gen_range(1..=4);
        let branching = rng.gen_range(2..=3);
        let mut levels: Vec<f64> = (0..depth).map(|_| rng.gen_range(0.05..4.0)).collect();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        if levels.len() != depth {
            continue;
        }
        let seed = rng.gen();
        let tree = ultra::ultrametric_tree(depth, branching, &levels, Some(seed)).unwrap();
        if tree.len() <= max_points {
            return tree;
        }
    }
}
