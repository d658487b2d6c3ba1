//! Weightings, magnitude, the magnitude function, and potential functions.
//!
//! A weighting of a finite space at scale `t` is the solution `w` of
//! `ζ_t w = 1` where `ζ_t[i][j] = exp(-t·d(i,j))`; the magnitude is `Σ w`.
//! The potential `h(x) = Σ_a exp(-t·d(x,a)) w(a)` equals 1 on the space and
//! satisfies `h'' = t² h` off the space on the line.

use std::cell::OnceCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{zeta_matrix, FiniteMetricSpace};

/// Default bound on `max |ζ_t w - 1|`.
pub const DEFAULT_SOLVER_TOLERANCE: f64 = 1e-10;
/// Condition estimates above this are reported through [`Weighting::ill_conditioned`].
pub const CONDITION_WARNING: f64 = 1e12;
/// Condition estimates above this are refused.
pub const CONDITION_LIMIT: f64 = 1e14;

const REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum MagnitudeError {
    #[error("invalid scale {0}; must be finite and positive")]
    InvalidScale(f64),
    #[error("scale grid must be nonempty, positive and strictly increasing")]
    InvalidGrid,
    #[error("similarity matrix is numerically singular (condition estimate {condition_estimate:e})")]
    SingularSystem { condition_estimate: f64 },
    #[error("similarity matrix is ill-conditioned (condition estimate {condition_estimate:e})")]
    IllConditioned { condition_estimate: f64 },
    #[error("query matrix has {found} columns, expected {expected}")]
    QueryShape { expected: usize, found: usize },
    #[error("query distance at ({row}, {col}) is negative or non-finite")]
    BadQueryDistance { row: usize, col: usize },
    #[error("space has no ambient coordinates")]
    NoAmbientCoordinates,
    #[error("expected one-dimensional ambient coordinates, found dimension {0}")]
    NotOneDimensional(usize),
    #[error("query point {x} is within {distance} of the space (minimum {minimum})")]
    QueryTooClose { x: f64, distance: f64, minimum: f64 },
    #[error("finite-difference step {0} must be finite and positive")]
    InvalidStep(f64),
}

fn check_scale(t: f64) -> Result<(), MagnitudeError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(MagnitudeError::InvalidScale(t))
    }
}

/// Which factorization produced a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    PivotedLu,
}

enum Factorization {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factorization {
    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Factorization::Cholesky(c) => Some(c.solve(b)),
            Factorization::Lu(lu) => lu.solve(b),
        }
    }

    fn method(&self) -> SolveMethod {
        match self {
            Factorization::Cholesky(_) => SolveMethod::Cholesky,
            Factorization::Lu(_) => SolveMethod::PivotedLu,
        }
    }
}

struct Factored {
    factorization: Factorization,
    condition_estimate: f64,
}

/// `ζ_t` together with a lazily computed factorization.
pub struct SimilarityMatrix {
    entries: DMatrix<f64>,
    t: f64,
    factored: OnceCell<Result<Factored, MagnitudeError>>,
}

impl std::fmt::Debug for SimilarityMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimilarityMatrix")
            .field("n", &self.entries.nrows())
            .field("t", &self.t)
            .field("method", &self.method())
            .field("condition_estimate", &self.condition_estimate())
            .finish()
    }
}

/// Result of a single right-hand-side solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    /// `max |ζ x - b|`.
    pub residual: f64,
}

impl SimilarityMatrix {
    pub fn new(space: &FiniteMetricSpace, t: f64) -> Result<Self, MagnitudeError> {
        check_scale(t)?;
        Ok(SimilarityMatrix {
            entries: zeta_matrix(space, t),
            t,
            factored: OnceCell::new(),
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn factored(&self) -> Result<&Factored, MagnitudeError> {
        self.factored
            .get_or_init(|| factorize(&self.entries))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Factorization used, if it has been computed.
    pub fn method(&self) -> Option<SolveMethod> {
        self.factored
            .get()
            .and_then(|f| f.as_ref().ok())
            .map(|f| f.factorization.method())
    }

    /// 1-norm condition estimate, if the factorization has been computed.
    pub fn condition_estimate(&self) -> Option<f64> {
        self.factored
            .get()
            .and_then(|f| f.as_ref().ok())
            .map(|f| f.condition_estimate)
    }

    /// Relative Frobenius error of rebuilding the matrix from its factors.
    pub fn reconstruction_error(&self) -> Result<f64, MagnitudeError> {
        let f = self.factored()?;
        let rebuilt = match &f.factorization {
            Factorization::Cholesky(c) => {
                let l = c.l();
                &l * l.transpose()
            }
            Factorization::Lu(lu) => {
                let (p, l, u) = lu.clone().unpack();
                let mut m = l * u;
                p.inv_permute_rows(&mut m);
                m
            }
        };
        Ok((rebuilt - &self.entries).norm() / self.entries.norm())
    }

    /// Solve `ζ x = b` with iterative refinement. LU solutions always get
    /// the refinement steps; Cholesky ones only while above `tolerance`.
    pub fn solve(&self, b: &DVector<f64>, tolerance: f64) -> Result<Solution, MagnitudeError> {
        let f = self.factored()?;
        let singular = MagnitudeError::SingularSystem {
            condition_estimate: f.condition_estimate,
        };
        let mut x = f.factorization.solve(b).ok_or_else(|| singular.clone())?;
        let mut r = b - &self.entries * &x;
        let mut residual = r.amax();
        let always = f.factorization.method() == SolveMethod::PivotedLu;
        for _ in 0..REFINEMENT_STEPS {
            if !always && residual <= tolerance {
                break;
            }
            let dx = f.factorization.solve(&r).ok_or_else(|| singular.clone())?;
            let candidate = &x + dx;
            let r_new = b - &self.entries * &candidate;
            let res_new = r_new.amax();
            if res_new < residual {
                x = candidate;
                r = r_new;
                residual = res_new;
            } else if !always {
                break;
            }
        }
        if !residual.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(singular);
        }
        Ok(Solution { x, residual })
    }
}

fn factorize(entries: &DMatrix<f64>) -> Result<Factored, MagnitudeError> {
    let factorization = match Cholesky::new(entries.clone()) {
        Some(c) if c.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) => {
            Factorization::Cholesky(c)
        }
        _ => {
            log::debug!("Cholesky failed; falling back to pivoted LU");
            let lu = entries.clone().lu();
            if !lu.is_invertible() {
                return Err(MagnitudeError::SingularSystem {
                    condition_estimate: f64::INFINITY,
                });
            }
            Factorization::Lu(lu)
        }
    };
    let inverse_norm = inverse_norm1_estimate(&factorization, entries.nrows());
    let norm = (0..entries.ncols())
        .map(|j| entries.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let condition_estimate = norm * inverse_norm;
    if !condition_estimate.is_finite() {
        return Err(MagnitudeError::SingularSystem { condition_estimate });
    }
    if condition_estimate > CONDITION_LIMIT {
        return Err(MagnitudeError::IllConditioned { condition_estimate });
    }
    Ok(Factored {
        factorization,
        condition_estimate,
    })
}

/// Hager's estimator of `‖ζ⁻¹‖₁` (ζ is symmetric so ζ⁻ᵀ = ζ⁻¹).
fn inverse_norm1_estimate(f: &Factorization, n: usize) -> f64 {
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0;
    for iter in 0..5 {
        let Some(y) = f.solve(&x) else {
            return f64::INFINITY;
        };
        let norm = y.lp_norm(1);
        if iter > 0 && norm <= estimate {
            break;
        }
        estimate = norm;
        let signs = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = f.solve(&signs) else {
            return f64::INFINITY;
        };
        let j = z.iamax();
        if iter > 0 && z[j].abs() <= z.dot(&x) {
            break;
        }
        x.fill(0.0);
        x[j] = 1.0;
    }
    estimate
}

/// Solution of `ζ_t w = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weighting {
    pub w: Vec<f64>,
    /// `max |ζ_t w - 1|`.
    pub residual: f64,
    pub t: f64,
    pub condition_estimate: f64,
    pub method: SolveMethod,
    /// Condition estimate exceeded [`CONDITION_WARNING`].
    pub ill_conditioned: bool,
}

impl Weighting {
    /// The magnitude `Σ w`.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

pub fn similarity_matrix(space: &FiniteMetricSpace, t: f64) -> Result<SimilarityMatrix, MagnitudeError> {
    SimilarityMatrix::new(space, t)
}

pub fn weighting_from(zeta: &SimilarityMatrix, tolerance: f64) -> Result<Weighting, MagnitudeError> {
    let ones = DVector::from_element(zeta.len(), 1.0);
    let sol = zeta.solve(&ones, tolerance)?;
    let condition_estimate = zeta.condition_estimate().unwrap_or(f64::NAN);
    if sol.residual > tolerance {
        return Err(MagnitudeError::IllConditioned { condition_estimate });
    }
    let ill_conditioned = condition_estimate > CONDITION_WARNING;
    if ill_conditioned {
        log::warn!(
            "similarity matrix at t = {} has condition estimate {condition_estimate:e}",
            zeta.t()
        );
    }
    Ok(Weighting {
        w: sol.x.iter().copied().collect(),
        residual: sol.residual,
        t: zeta.t(),
        condition_estimate,
        method: zeta.method().expect("factorized by solve"),
        ill_conditioned,
    })
}

pub fn weighting(space: &FiniteMetricSpace, t: f64) -> Result<Weighting, MagnitudeError> {
    weighting_from(&SimilarityMatrix::new(space, t)?, DEFAULT_SOLVER_TOLERANCE)
}

/// Magnitude `|tA|`.
pub fn magnitude(space: &FiniteMetricSpace, t: f64) -> Result<f64, MagnitudeError> {
    Ok(weighting(space, t)?.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
}

/// Per-sample solver record; failed samples carry the error and no value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMeta {
    pub t: f64,
    pub residual: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub error: Option<MagnitudeError>,
}

/// Samples of `t ↦ |tA|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnitudeCurve {
    pub space_id: String,
    /// Cardinality of the underlying space.
    pub n_points: usize,
    /// Successful samples, `t` strictly increasing.
    pub samples: Vec<CurvePoint>,
    /// One entry per requested `t`, including failures.
    pub solver_meta: Vec<SampleMeta>,
}

impl MagnitudeCurve {
    pub fn with_space_id(mut self, id: impl Into<String>) -> Self {
        self.space_id = id.into();
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &SampleMeta> {
        self.solver_meta.iter().filter(|m| m.error.is_some())
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<(), MagnitudeError> {
    if grid.is_empty()
        || grid.iter().any(|t| !(t.is_finite() && *t > 0.0))
        || !crate::grid::is_strictly_increasing(grid)
    {
        return Err(MagnitudeError::InvalidGrid);
    }
    Ok(())
}

/// Evaluate the magnitude function on a grid. Samples are independent and
/// solved in parallel on the current rayon pool; a failing sample is
/// recorded in `solver_meta` without affecting the others.
pub fn magnitude_function(space: &FiniteMetricSpace, t_grid: &[f64]) -> Result<MagnitudeCurve, MagnitudeError> {
    check_grid(t_grid)?;
    let results: Vec<(f64, Result<Weighting, MagnitudeError>)> = t_grid
        .par_iter()
        .map(|&t| (t, weighting(space, t)))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut solver_meta = Vec::with_capacity(results.len());
    for (t, r) in results {
        match r {
            Ok(w) => {
                samples.push(CurvePoint { t, value: w.total() });
                solver_meta.push(SampleMeta {
                    t,
                    residual: Some(w.residual),
                    condition_estimate: Some(w.condition_estimate),
                    error: None,
                });
            }
            Err(e) => solver_meta.push(SampleMeta {
                t,
                residual: None,
                condition_estimate: None,
                error: Some(e),
            }),
        }
    }
    Ok(MagnitudeCurve {
        space_id: String::new(),
        n_points: space.len(),
        samples,
        solver_meta,
    })
}

/// `h(x_k) = Σ_j exp(-t·D[k][j]) w_j` for an `m×n` matrix of query distances.
pub fn potential_from(weighting: &Weighting, query_dists: &DMatrix<f64>) -> Result<Vec<f64>, MagnitudeError> {
    let n = weighting.w.len();
    if query_dists.ncols() != n {
        return Err(MagnitudeError::QueryShape {
            expected: n,
            found: query_dists.ncols(),
        });
    }
    let t = weighting.t;
    (0..query_dists.nrows())
        .map(|row| {
            let mut h = 0.0;
            for col in 0..n {
                let d = query_dists[(row, col)];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(MagnitudeError::BadQueryDistance { row, col });
                }
                h += (-t * d).exp() * weighting.w[col];
            }
            Ok(h)
        })
        .collect()
}

pub fn potential(space: &FiniteMetricSpace, t: f64, query_dists: &DMatrix<f64>) -> Result<Vec<f64>, MagnitudeError> {
    potential_from(&weighting(space, t)?, query_dists)
}

/// Euclidean distances from query points to the ambient coordinates.
pub fn query_distances(space: &FiniteMetricSpace, queries: &[Vec<f64>]) -> Result<DMatrix<f64>, MagnitudeError> {
    let coords = space.ambient().ok_or(MagnitudeError::NoAmbientCoordinates)?;
    let dim = coords[0].len();
    if let Some(q) = queries.iter().find(|q| q.len() != dim) {
        return Err(MagnitudeError::QueryShape {
            expected: dim,
            found: q.len(),
        });
    }
    Ok(DMatrix::from_fn(queries.len(), coords.len(), |k, j| {
        queries[k]
            .iter()
            .zip(&coords[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }))
}

/// Potential at Euclidean query points.
pub fn potential_at_points(space: &FiniteMetricSpace, t: f64, queries: &[Vec<f64>]) -> Result<Vec<f64>, MagnitudeError> {
    let d = query_distances(space, queries)?;
    potential(space, t, &d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeResidualReport {
    pub t: f64,
    pub step: f64,
    pub queries: Vec<f64>,
    pub potential: Vec<f64>,
    /// `|t² h(x) - h''(x)|` per query, with `h''` by central differences.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Finite-difference check of `h'' = t² h` off a subset of the line.
pub fn pde_residual_1d(
    space: &FiniteMetricSpace,
    t: f64,
    query_xs: &[f64],
    step: f64,
) -> Result<PdeResidualReport, MagnitudeError> {
    check_scale(t)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(MagnitudeError::InvalidStep(step));
    }
    let coords = space.ambient().ok_or(MagnitudeError::NoAmbientCoordinates)?;
    if coords[0].len() != 1 {
        return Err(MagnitudeError::NotOneDimensional(coords[0].len()));
    }
    let xs: Vec<f64> = coords.iter().map(|c| c[0]).collect();
    let minimum = 3.0 * step;
    for &x in query_xs {
        let distance = xs.iter().map(|a| (x - a).abs()).fold(f64::INFINITY, f64::min);
        if distance <= minimum {
            return Err(MagnitudeError::QueryTooClose { x, distance, minimum });
        }
    }
    let w = weighting(space, t)?;
    let stencil: Vec<f64> = query_xs
        .iter()
        .flat_map(|&x| [x - step, x, x + step])
        .collect();
    let d = DMatrix::from_fn(stencil.len(), xs.len(), |k, j| (stencil[k] - xs[j]).abs());
    let h = potential_from(&w, &d)?;
    let mut potential = Vec::with_capacity(query_xs.len());
    let residuals: Vec<f64> = h
        .chunks_exact(3)
        .map(|c| {
            potential.push(c[1]);
            let second = (c[0] - 2.0 * c[1] + c[2]) / (step * step);
            (t * t * c[1] - second).abs()
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(PdeResidualReport {
        t,
        step,
        queries: query_xs.to_vec(),
        potential,
        residuals,
        max_residual,
    })
}
