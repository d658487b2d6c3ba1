//! Finite metric spaces: construction, validation, rescaling, and the
//! positive-definiteness / negative-type tests.

pub mod io;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance for the triangle inequality and symmetry, applied to
/// the matrix after dividing by its largest entry.
pub const DEFAULT_TRIANGLE_TOLERANCE: f64 = 1e-9;

/// Errors raised while building or validating a metric space.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("distance matrix is empty")]
    Empty,
    #[error("distance matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite distance at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at {i}")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("points {i} and {j} are at distance zero (duplicate points)")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality fails for ({i}, {j}, {k}): d(i,k) = {direct} > d(i,j) + d(j,k) = {detour}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        detour: f64,
    },
    #[error("points {i} and {j} coincide")]
    DuplicatePoint { i: usize, j: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} labels, got {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("invalid scale factor {0}; must be finite and positive")]
    InvalidScale(f64),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A validated finite metric space.
///
/// Immutable after construction; every constructor enforces the metric
/// axioms, so downstream code never re-checks them.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    dist: DMatrix<f64>,
    labels: Option<Vec<String>>,
    ambient: Option<Vec<Vec<f64>>>,
}

impl FiniteMetricSpace {
    /// Validate a square distance matrix.
    pub fn validate(matrix: DMatrix<f64>, tolerance: f64) -> Result<Self, MetricError> {
        validate_matrix(&matrix, tolerance)?;
        Ok(FiniteMetricSpace {
            dist: symmetrized(matrix),
            labels: None,
            ambient: None,
        })
    }

    /// Validate a matrix given as rows.
    pub fn from_rows(rows: &[Vec<f64>], tolerance: f64) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        for r in rows {
            if r.len() != n {
                return Err(MetricError::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::validate(DMatrix::from_fn(n, n, |i, j| rows[i][j]), tolerance)
    }

    /// Pairwise Euclidean distances of a point cloud; the coordinates are kept.
    pub fn from_points(coords: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let dim = coords[0].len();
        for (index, p) in coords.iter().enumerate() {
            if p.len() != dim {
                return Err(MetricError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if let Some(j) = p.iter().position(|x| !x.is_finite()) {
                return Err(MetricError::NonFinite { i: index, j });
            }
        }
        let dist = euclidean_matrix(&coords);
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[(i, j)] == 0.0 {
                    return Err(MetricError::DuplicatePoint { i, j });
                }
            }
        }
        Ok(FiniteMetricSpace {
            dist,
            labels: None,
            ambient: Some(coords),
        })
    }

    /// Trusted constructor for generators whose distances are metric by
    /// construction. Small inputs are still fully validated in debug builds.
    pub(crate) fn from_parts_unchecked(
        dist: DMatrix<f64>,
        ambient: Option<Vec<Vec<f64>>>,
    ) -> Self {
        debug_assert!(
            dist.nrows() > 200 || validate_matrix(&dist, DEFAULT_TRIANGLE_TOLERANCE).is_ok()
        );
        FiniteMetricSpace {
            dist,
            labels: None,
            ambient,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.len() {
            return Err(MetricError::LabelCount {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.dist.nrows()
    }

    /// Always false: validation rejects empty matrices.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn ambient(&self) -> Option<&[Vec<f64>]> {
        self.ambient.as_deref()
    }

    /// Dimension of the ambient Euclidean coordinates, if any.
    pub fn ambient_dimension(&self) -> Option<usize> {
        self.ambient.as_ref().map(|c| c[0].len())
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest off-diagonal distance, `None` for a single point.
    pub fn min_separation(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist[(i, j)];
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// The subspace on the given point indices (in the given order).
    /// Indices must be distinct.
    pub fn subspace(&self, indices: &[usize]) -> FiniteMetricSpace {
        let m = indices.len();
        let dist = DMatrix::from_fn(m, m, |a, b| self.dist[(indices[a], indices[b])]);
        FiniteMetricSpace {
            dist,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            ambient: self
                .ambient
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i].clone()).collect()),
        }
    }

    /// Lazy view of `tA = (A, t·d)`.
    pub fn rescale(&self, t: f64) -> Result<ScaledSpace<'_>, MetricError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(MetricError::InvalidScale(t));
        }
        Ok(ScaledSpace { base: self, t })
    }
}

/// The space `tA`: the same points with every distance multiplied by `t`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledSpace<'a> {
    base: &'a FiniteMetricSpace,
    t: f64,
}

impl<'a> ScaledSpace<'a> {
    pub fn base(&self) -> &'a FiniteMetricSpace {
        self.base
    }

    pub fn scale(&self) -> f64 {
        self.t
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.t * self.base.dist(i, j)
    }

    pub fn materialized_matrix(&self) -> DMatrix<f64> {
        self.base.distances() * self.t
    }

    /// Owned copy of `tA`; ambient coordinates are scaled along with distances.
    pub fn materialize(&self) -> FiniteMetricSpace {
        FiniteMetricSpace {
            dist: self.materialized_matrix(),
            labels: self.base.labels.clone(),
            ambient: self.base.ambient.as_ref().map(|c| {
                c.iter()
                    .map(|p| p.iter().map(|x| x * self.t).collect())
                    .collect()
            }),
        }
    }
}

fn euclidean_matrix(coords: &[Vec<f64>]) -> DMatrix<f64> {
    let n = coords.len();
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    dist
}

fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

fn validate_matrix(m: &DMatrix<f64>, tolerance: f64) -> Result<(), MetricError> {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return Err(MetricError::Empty);
    }
    if rows != cols {
        return Err(MetricError::NotSquare { rows, cols });
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(MetricError::NonFinite { i, j });
            }
        }
    }
    let scale = m.iter().copied().fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    for i in 0..n {
        if m[(i, i)] != 0.0 {
            return Err(MetricError::NonZeroDiagonal {
                i,
                value: m[(i, i)],
            });
        }
        for j in 0..n {
            let v = m[(i, j)];
            if v < 0.0 {
                return Err(MetricError::NegativeDistance { i, j, value: v });
            }
            if i < j {
                let w = m[(j, i)];
                if (v - w).abs() / scale > tolerance {
                    return Err(MetricError::AsymmetricMatrix { i, j, a: v, b: w });
                }
                if v == 0.0 || w == 0.0 {
                    return Err(MetricError::ZeroOffDiagonal { i, j });
                }
            }
        }
    }
    for i in 0..n {
        for k in (i + 1)..n {
            let direct = m[(i, k)];
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let detour = m[(i, j)] + m[(j, k)];
                if (direct - detour) / scale > tolerance {
                    return Err(MetricError::TriangleViolation {
                        i,
                        j,
                        k,
                        direct,
                        detour,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Spectral summary of a symmetric matrix built from a space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefinitenessReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Entries `exp(-t d(i,j))`.
pub(crate) fn zeta_matrix(space: &FiniteMetricSpace, t: f64) -> DMatrix<f64> {
    space.distances().map(|d| (-t * d).exp())
}

fn spectral_extremes(m: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m);
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Smallest and largest eigenvalue of `ζ_t`; positive definite iff the
/// smallest exceeds `-tolerance * largest`.
pub fn definiteness(space: &FiniteMetricSpace, t: f64, tolerance: f64) -> DefinitenessReport {
    let (lo, hi) = spectral_extremes(zeta_matrix(space, t));
    DefinitenessReport {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        tolerance,
        holds: lo > -tolerance * hi,
    }
}

pub fn is_positive_definite(space: &FiniteMetricSpace, t: f64, tolerance: f64) -> bool {
    definiteness(space, t, tolerance).holds
}

/// Spectrum of the doubly centered matrix `-J D J / 2`. The distance matrix
/// is conditionally negative definite iff this is positive semidefinite.
pub fn negative_type_report(space: &FiniteMetricSpace, tolerance: f64) -> DefinitenessReport {
    let n = space.len();
    let d = space.distances();
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let (lo, hi) = spectral_extremes(centered);
    let scale = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    DefinitenessReport {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        tolerance,
        holds: lo >= -tolerance * scale,
    }
}

pub fn is_negative_type(space: &FiniteMetricSpace, tolerance: f64) -> bool {
    negative_type_report(space, tolerance).holds
}

/// Per-scale positive-definiteness over a t-grid; a consistency diagnostic
/// for [`is_negative_type`], which remains the authoritative answer.
pub fn positive_definite_sweep(
    space: &FiniteMetricSpace,
    t_grid: &[f64],
    tolerance: f64,
) -> Vec<(f64, DefinitenessReport)> {
    t_grid
        .iter()
        .map(|&t| (t, definiteness(space, t, tolerance)))
        .collect()
}

/// The 20-point log grid on [0.01, 100] used by the negative-type diagnostic.
pub fn standard_sweep_grid() -> Vec<f64> {
    crate::grid::log_grid(0.01, 100.0, 20)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&[f64]]) -> Vec<Vec<f64>> {
        r.iter().map(|x| x.to_vec()).collect()
    }

    #[test]
    fn single_point_is_valid() {
        let s = FiniteMetricSpace::from_rows(&rows(&[&[0.0]]), DEFAULT_TRIANGLE_TOLERANCE)
            .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.min_separation(), None);
        assert_eq!(s.diameter(), 0.0);
    }

    #[test]
    fn collinear_points_validate() {
        let m = rows(&[&[0.0, 1.0, 3.0], &[1.0, 0.0, 2.0], &[3.0, 2.0, 0.0]]);
        let s = FiniteMetricSpace::from_rows(&m, DEFAULT_TRIANGLE_TOLERANCE).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.dist(1, 2), 2.0);
        assert_eq!(s.dist(0, 2), 3.0);
    }

    #[test]
    fn triangle_violation_reports_triple() {
        let m = rows(&[&[0.0, 1.0, 5.0], &[1.0, 0.0, 1.0], &[5.0, 1.0, 0.0]]);
        let err = FiniteMetricSpace::from_rows(&m, DEFAULT_TRIANGLE_TOLERANCE).unwrap_err();
        match err {
            MetricError::TriangleViolation { i, j, k, .. } => assert_eq!((i, j, k), (0, 1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_errors() {
        let asym = rows(&[&[0.0, 1.0], &[2.0, 0.0]]);
        assert!(matches!(
            FiniteMetricSpace::from_rows(&asym, 1e-9),
            Err(MetricError::AsymmetricMatrix { .. })
        ));
        let neg = rows(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        assert!(matches!(
            FiniteMetricSpace::from_rows(&neg, 1e-9),
            Err(MetricError::NegativeDistance { .. })
        ));
        let zero = rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            FiniteMetricSpace::from_rows(&zero, 1e-9),
            Err(MetricError::ZeroOffDiagonal { i: 0, j: 1 })
        ));
        let ragged = rows(&[&[0.0, 1.0], &[1.0]]);
        assert!(matches!(
            FiniteMetricSpace::from_rows(&ragged, 1e-9),
            Err(MetricError::NotSquare { .. })
        ));
        let nan = rows(&[&[0.0, f64::NAN], &[f64::NAN, 0.0]]);
        assert!(matches!(
            FiniteMetricSpace::from_rows(&nan, 1e-9),
            Err(MetricError::NonFinite { .. })
        ));
    }

    #[test]
    fn from_points_examples() {
        let a = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(a.dist(0, 1), 1.0);
        let b = FiniteMetricSpace::from_points(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(b.dist(0, 1), 5.0);
        let sq = FiniteMetricSpace::from_points(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let mut d: Vec<f64> = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| sq.dist(i, j))
            .collect();
        d.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        assert_eq!(d, vec![1.0, 1.0, 1.0, 1.0, r2, r2]);
        assert_eq!(sq.ambient_dimension(), Some(2));
    }

    #[test]
    fn from_points_errors() {
        assert!(matches!(
            FiniteMetricSpace::from_points(vec![vec![0.0, 1.0], vec![0.0, 1.0]]),
            Err(MetricError::DuplicatePoint { i: 0, j: 1 })
        ));
        assert!(matches!(
            FiniteMetricSpace::from_points(vec![vec![0.0, 1.0], vec![0.0]]),
            Err(MetricError::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::from_points(vec![]),
            Err(MetricError::Empty)
        ));
    }

    #[test]
    fn two_points_positive_definite_and_negative_type() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![0.3]]).unwrap();
        for t in [0.01, 1.0, 100.0] {
            let r = definiteness(&s, t, 1e-12);
            assert!(r.holds);
            let q = (-0.3 * t).exp();
            assert!((r.min_eigenvalue - (1.0 - q)).abs() < 1e-12);
            assert!((r.max_eigenvalue - (1.0 + q)).abs() < 1e-12);
        }
        assert!(is_negative_type(&s, 1e-10));
    }

    #[test]
    fn rescale_views() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let v = s.rescale(2.5).unwrap();
        assert_eq!(v.dist(0, 2), 7.5);
        let m = v.materialize();
        assert_eq!(m.ambient().unwrap()[2], vec![7.5]);
        assert!(FiniteMetricSpace::validate(v.materialized_matrix(), 1e-9).is_ok());
        assert!(matches!(s.rescale(0.0), Err(MetricError::InvalidScale(_))));
        assert!(matches!(s.rescale(f64::NAN), Err(MetricError::InvalidScale(_))));
    }

    #[test]
    fn labels_must_match() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(s.clone().with_labels(vec!["a".into()]).is_err());
        let l = s.with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(l.subspace(&[1]).labels().unwrap(), &["b".to_string()]);
    }
}
