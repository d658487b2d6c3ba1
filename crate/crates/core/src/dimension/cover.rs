//! Covering and packing numbers with ball centres restricted to the space.
//!
//! `N(A, ε)` is the fewest closed balls `B(a, ε) = {x ∈ A : d(a, x) ≤ ε}`
//! covering `A`. `M(A, ε)` is the most closed balls that are pairwise
//! disjoint as subsets of `A`: two balls collide when some point of `A`
//! lies within `ε` of both centres.
//!
//! Exact answers come from a sweep on the line (any size) or from branch
//! and bound on bitmasks (up to [`EXACT_LIMIT`] points); larger spaces get
//! greedy bounds, flagged as inexact.

use rayon::prelude::*;
use serde::Serialize;

use crate::metric::FiniteMetricSpace;

/// Largest space solved exactly by branch and bound.
pub const EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountResult {
    pub count: usize,
    /// `false` when `count` is only a greedy bound.
    pub exact: bool,
    /// Ball centres realising `count`.
    pub centers: Vec<usize>,
}

/// Fixed-size bitset over point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn empty(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn intersection_count(&self, other: &BitSet) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn intersects(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    fn union_with(&mut self, other: &BitSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a |= b);
    }

    fn difference_with(&mut self, other: &BitSet) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a &= !b);
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

fn balls(space: &FiniteMetricSpace, epsilon: f64) -> Vec<BitSet> {
    let n = space.len();
    (0..n)
        .map(|c| {
            let mut b = BitSet::empty(n);
            for x in 0..n {
                if space.dist(c, x) <= epsilon {
                    b.insert(x);
                }
            }
            b
        })
        .collect()
}

fn ball_masks(space: &FiniteMetricSpace, epsilon: f64) -> Vec<u32> {
    let n = space.len();
    (0..n)
        .map(|c| {
            (0..n)
                .filter(|&x| space.dist(c, x) <= epsilon)
                .fold(0u32, |m, x| m | (1 << x))
        })
        .collect()
}

/// Greedy set cover: repeatedly take the ball covering the most uncovered
/// points, ties to the lowest index. An upper bound on `N(A, ε)`.
pub fn greedy_covering(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    let n = space.len();
    let balls = balls(space, epsilon);
    let mut uncovered = BitSet::full(n);
    let mut centers = Vec::new();
    while !uncovered.is_empty() {
        let (best, _) = balls
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.intersection_count(&uncovered)))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        uncovered.difference_with(&balls[best]);
        centers.push(best);
    }
    CountResult {
        count: centers.len(),
        exact: false,
        centers,
    }
}

/// Greedy maximal packing: scan centres by increasing ball size (ties to
/// the lowest index), keep every ball disjoint from those already kept.
/// A lower bound on `M(A, ε)`.
pub fn greedy_packing(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    let n = space.len();
    let balls = balls(space, epsilon);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (balls[i].count(), i));
    let mut occupied = BitSet::empty(n);
    let mut centers = Vec::new();
    for i in order {
        if !balls[i].intersects(&occupied) {
            occupied.union_with(&balls[i]);
            centers.push(i);
        }
    }
    centers.sort_unstable();
    CountResult {
        count: centers.len(),
        exact: false,
        centers,
    }
}

/// Points of a one-dimensional space sorted by coordinate.
fn line_order(space: &FiniteMetricSpace) -> Option<Vec<usize>> {
    let coords = space.ambient()?;
    if coords[0].len() != 1 {
        return None;
    }
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0]));
    Some(order)
}

// On the line, the leftmost uncovered point must be covered by some ball;
// the rightmost centre within reach of it covers a superset of what any
// other choice covers to its right.
fn line_covering(space: &FiniteMetricSpace, order: &[usize], epsilon: f64) -> CountResult {
    let n = order.len();
    let mut centers = Vec::new();
    let mut i = 0;
    while i < n {
        let p = order[i];
        let mut j = i;
        while j + 1 < n && space.dist(p, order[j + 1]) <= epsilon {
            j += 1;
        }
        let c = order[j];
        centers.push(c);
        i = j + 1;
        while i < n && space.dist(c, order[i]) <= epsilon {
            i += 1;
        }
    }
    centers.sort_unstable();
    CountResult {
        count: centers.len(),
        exact: true,
        centers,
    }
}

// Balls on the line are runs of consecutive points whose endpoints are
// monotone in the centre, so interval scheduling by right end is optimal.
fn line_packing(space: &FiniteMetricSpace, order: &[usize], epsilon: f64) -> CountResult {
    let n = order.len();
    let mut centers = Vec::new();
    let mut last_right: Option<usize> = None;
    let mut left = 0;
    let mut right = 0;
    for k in 0..n {
        let c = order[k];
        while space.dist(c, order[left]) > epsilon {
            left += 1;
        }
        right = right.max(k);
        while right + 1 < n && space.dist(c, order[right + 1]) <= epsilon {
            right += 1;
        }
        if last_right.is_none_or(|r| left > r) {
            centers.push(c);
            last_right = Some(right);
        }
    }
    centers.sort_unstable();
    CountResult {
        count: centers.len(),
        exact: true,
        centers,
    }
}

struct CoverSearch<'a> {
    balls: &'a [u32],
    containing: Vec<Vec<usize>>,
    max_ball: u32,
    best: Vec<usize>,
    current: Vec<usize>,
}

impl CoverSearch<'_> {
    fn search(&mut self, uncovered: u32) {
        if uncovered == 0 {
            if self.current.len() < self.best.len() {
                self.best = self.current.clone();
            }
            return;
        }
        let bound = uncovered.count_ones().div_ceil(self.max_ball) as usize;
        if self.current.len() + bound >= self.best.len() {
            return;
        }
        // Branch on the uncovered point with the fewest covering balls.
        let mut pivot = usize::MAX;
        let mut options = usize::MAX;
        for e in 0..32 {
            if uncovered & (1 << e) != 0 && self.containing[e].len() < options {
                pivot = e;
                options = self.containing[e].len();
            }
        }
        let mut choices = self.containing[pivot].clone();
        choices.sort_by_key(|&b| std::cmp::Reverse((self.balls[b] & uncovered).count_ones()));
        for b in choices {
            self.current.push(b);
            self.search(uncovered & !self.balls[b]);
            self.current.pop();
        }
    }
}

fn exact_covering_small(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    let n = space.len();
    let masks = ball_masks(space, epsilon);
    let containing = (0..n)
        .map(|e| (0..n).filter(|&b| masks[b] & (1 << e) != 0).collect())
        .collect();
    let greedy = greedy_covering(space, epsilon);
    let mut search = CoverSearch {
        balls: &masks,
        containing,
        max_ball: masks.iter().map(|m| m.count_ones()).max().unwrap_or(1),
        best: greedy.centers,
        current: Vec::new(),
    };
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    search.search(all);
    let mut centers = search.best;
    centers.sort_unstable();
    CountResult {
        count: centers.len(),
        exact: true,
        centers,
    }
}

fn max_disjoint(conflict: &[u32], candidates: u32, current: &mut Vec<usize>, best: &mut Vec<usize>) {
    if candidates == 0 {
        if current.len() > best.len() {
            *best = current.clone();
        }
        return;
    }
    if current.len() + candidates.count_ones() as usize <= best.len() {
        return;
    }
    let v = candidates.trailing_zeros() as usize;
    let rest = candidates & !(1 << v);
    current.push(v);
    max_disjoint(conflict, rest & !conflict[v], current, best);
    current.pop();
    max_disjoint(conflict, rest, current, best);
}

fn exact_packing_small(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    let n = space.len();
    let masks = ball_masks(space, epsilon);
    let conflict: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && masks[i] & masks[j] != 0)
                .fold(0u32, |m, j| m | (1 << j))
        })
        .collect();
    let mut best = greedy_packing(space, epsilon).centers;
    let all = (1u32 << n) - 1;
    max_disjoint(&conflict, all, &mut Vec::new(), &mut best);
    best.sort_unstable();
    CountResult {
        count: best.len(),
        exact: true,
        centers: best,
    }
}

/// `N(A, ε)`.
pub fn covering_number(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    if let Some(order) = line_order(space) {
        return line_covering(space, &order, epsilon);
    }
    if space.len() <= EXACT_LIMIT {
        exact_covering_small(space, epsilon)
    } else {
        greedy_covering(space, epsilon)
    }
}

/// `M(A, ε)`.
pub fn packing_number(space: &FiniteMetricSpace, epsilon: f64) -> CountResult {
    if let Some(order) = line_order(space) {
        return line_packing(space, &order, epsilon);
    }
    if space.len() <= EXACT_LIMIT {
        exact_packing_small(space, epsilon)
    } else {
        greedy_packing(space, epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverRow {
    pub epsilon: f64,
    pub covering: usize,
    pub packing: usize,
    /// Both counts are exact.
    pub exact: bool,
}

/// Covering and packing numbers over a grid of radii, evaluated in parallel.
pub fn cover_table(space: &FiniteMetricSpace, epsilons: &[f64]) -> Vec<CoverRow> {
    epsilons
        .par_iter()
        .map(|&epsilon| {
            let c = covering_number(space, epsilon);
            let p = packing_number(space, epsilon);
            CoverRow {
                epsilon,
                covering: c.count,
                packing: p.count,
                exact: c.exact && p.exact,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn plane(pts: &[(f64, f64)]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_points(pts.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    #[test]
    fn large_radius_gives_one_ball() {
        let s = plane(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.8), (0.9, 0.9)]);
        let eps = s.diameter();
        assert_eq!(covering_number(&s, eps).count, 1);
        assert_eq!(packing_number(&s, eps).count, 1);
        assert!(covering_number(&s, eps).exact);
    }

    #[test]
    fn two_separated_points() {
        let s = plane(&[(0.0, 0.0), (3.0, 0.0)]);
        assert_eq!(covering_number(&s, 1.0).count, 2);
        assert_eq!(packing_number(&s, 1.0).count, 2);
    }

    #[test]
    fn equally_spaced_small_radius() {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let s = line(&xs);
        assert_eq!(packing_number(&s, 0.2).count, 9);
        assert_eq!(covering_number(&s, 0.2).count, 9);
        // Radius one spacing: each ball holds three consecutive points.
        assert_eq!(covering_number(&s, 0.5).count, 3);
        assert_eq!(packing_number(&s, 0.5).count, 3);
    }

    #[test]
    fn packing_uses_balls_within_the_space() {
        // Points 0 and 2 with radius 1: the balls {0} and {2} are disjoint
        // subsets of the space even though the centres are 2ε apart.
        let s = line(&[0.0, 2.0]);
        assert_eq!(packing_number(&s, 1.0).count, 2);
        let s = line(&[0.0, 1.0, 2.0]);
        assert_eq!(packing_number(&s, 1.0).count, 1);
    }

    #[test]
    fn line_sweep_agrees_with_branch_and_bound() {
        let xs = [0.0, 0.1, 0.15, 0.4, 0.45, 0.9, 1.3, 1.31, 1.8, 2.5, 2.55, 2.6];
        let s = line(&xs);
        // Same metric without the ambient coordinates, so the generic
        // n <= 24 search runs.
        let bare = FiniteMetricSpace::validate(s.distances().clone(), 1e-9).unwrap();
        for eps in [0.03, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.5] {
            assert_eq!(covering_number(&s, eps).count, covering_number(&bare, eps).count, "{eps}");
            assert_eq!(packing_number(&s, eps).count, packing_number(&bare, eps).count, "{eps}");
        }
    }

    #[test]
    fn greedy_flags_inexact() {
        let s = plane(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(!greedy_covering(&s, 0.1).exact);
        assert!(!greedy_packing(&s, 0.1).exact);
    }

    #[test]
    fn large_spaces_fall_back_to_greedy() {
        let pts: Vec<(f64, f64)> = (0..30).map(|i| ((i % 6) as f64, (i / 6) as f64)).collect();
        let s = plane(&pts);
        let c = covering_number(&s, 1.0);
        assert!(!c.exact);
        let t = cover_table(&s, &[1.0, 2.0]);
        assert!(!t[0].exact);
        assert!(t[0].covering >= t[1].covering);
    }
}
