//! Maximum diversity `|tA|_+ = 1 / min_{μ ∈ Δ} μᵀ ζ_t μ`.
//!
//! The minimization runs Frank–Wolfe with away steps over the probability
//! simplex. Whenever the similarity matrix is positive definite, the
//! iterate support is periodically handed to a primal active-set step that
//! solves the equality-constrained problem on the current face exactly;
//! this turns the slow sublinear tail of Frank–Wolfe into a finite
//! termination on the optimal face. The Frank–Wolfe gap
//! `2 (q(μ) - min_i (ζ μ)_i)` bounds `q(μ) - q*` and is the convergence
//! certificate throughout.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::magnitude::{self, MagnitudeError};
use crate::metric::{zeta_matrix, FiniteMetricSpace};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
/// Largest space accepted by [`brute_force_diversity`].
pub const BRUTE_FORCE_LIMIT: usize = 16;

// How often the active-set step is attempted, in Frank–Wolfe iterations.
const POLISH_INTERVAL: usize = 200;
// Exact recomputation of ζμ to stop drift in the rank-one updates.
const RESYNC_INTERVAL: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum DiversityError {
    #[error("invalid scale {0}; must be finite and positive")]
    InvalidScale(f64),
    #[error("scale grid must be nonempty, positive and strictly increasing")]
    InvalidGrid,
    #[error("tolerance {0} must be finite and positive")]
    InvalidTolerance(f64),
    #[error("warm start must be a probability vector of length {0}")]
    BadWarmStart(usize),
    #[error("no convergence after {} iterations (gap {:e})", best.iterations, best.duality_gap)]
    MaxIterationsExceeded { best: Box<DiversityResult> },
    #[error("brute force limited to {limit} points, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Magnitude(#[from] MagnitudeError),
}

/// Outcome of a maximum-diversity computation at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityResult {
    /// Optimal probability weights.
    pub mu: Vec<f64>,
    /// `|tA|_+ = 1 / (μᵀ ζ_t μ)`.
    pub value: f64,
    pub t: f64,
    pub iterations: usize,
    pub duality_gap: f64,
    pub converged: bool,
    /// The value is a certified global optimum: either the quadratic was
    /// convex (ζ_t positive definite) and the gap is small, or it came from
    /// the exhaustive oracle. Otherwise the result is only stationary.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for DiversityOptions {
    fn default() -> Self {
        DiversityOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            warm_start: None,
        }
    }
}

fn check_scale(t: f64) -> Result<(), DiversityError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(DiversityError::InvalidScale(t))
    }
}

/// Index of the smallest entry, ties to the lowest index.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(z: &DMatrix<f64>, mu: &[f64]) -> Vec<f64> {
    let n = z.nrows();
    let mut g = vec![0.0; n];
    for (j, &m) in mu.iter().enumerate() {
        if m != 0.0 {
            for (gi, zij) in g.iter_mut().zip(z.column(j).iter()) {
                *gi += zij * m;
            }
        }
    }
    g
}

struct State {
    mu: Vec<f64>,
    g: Vec<f64>,
    q: f64,
}

impl State {
    fn new(z: &DMatrix<f64>, mut mu: Vec<f64>) -> Self {
        let s: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= s);
        let g = mat_vec(z, &mu);
        let q = dot(&mu, &g);
        State { mu, g, q }
    }

    fn gap(&self) -> f64 {
        let s = argmin(&self.g);
        (2.0 * (self.q - self.g[s])).max(0.0)
    }
}

/// Minimize `μᵀ ζ μ` on the face spanned by the support of `start`,
/// growing and shrinking the support until the KKT conditions hold on the
/// whole simplex. Requires positive definite principal submatrices; gives
/// up (returns `None`) on a failed factorization.
fn active_set_refine(z: &DMatrix<f64>, start: &[f64], tolerance: f64) -> Option<Vec<f64>> {
    let n = z.nrows();
    let mut mu = start.to_vec();
    let mut support: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    for _ in 0..(3 * n + 10) {
        let m = support.len();
        let sub = DMatrix::from_fn(m, m, |a, b| z[(support[a], support[b])]);
        let chol = Cholesky::new(sub)?;
        let v = chol.solve(&DVector::from_element(m, 1.0));
        let total: f64 = v.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return None;
        }
        let target: Vec<f64> = v.iter().map(|x| x / total).collect();
        if target.iter().all(|&x| x >= 0.0) {
            mu.fill(0.0);
            for (&i, &x) in support.iter().zip(&target) {
                mu[i] = x;
            }
            let g = mat_vec(z, &mu);
            let q = dot(&mu, &g);
            let mut candidate = None;
            for i in 0..n {
                if mu[i] == 0.0 && !support.contains(&i) && g[i] < q - 0.25 * tolerance {
                    match candidate {
                        Some(c) if g[c] <= g[i] => {}
                        _ => candidate = Some(i),
                    }
                }
            }
            match candidate {
                None => return Some(mu),
                Some(i) => {
                    support.push(i);
                    support.sort_unstable();
                }
            }
        } else {
            // Move toward the face minimizer until a coordinate hits zero.
            let mut alpha = 1.0;
            for (&i, &x) in support.iter().zip(&target) {
                if x < 0.0 {
                    alpha = f64::min(alpha, mu[i] / (mu[i] - x));
                }
            }
            for (&i, &x) in support.iter().zip(&target) {
                mu[i] += alpha * (x - mu[i]);
            }
            for (&i, &x) in support.iter().zip(&target) {
                if x < 0.0 && mu[i] <= 1e-15 {
                    mu[i] = 0.0;
                }
            }
            let before = support.len();
            support.retain(|&i| mu[i] > 0.0);
            if support.len() == before {
                // Numerical stall: drop the most negative target coordinate.
                let (k, _) = target
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("nonempty support");
                mu[support[k]] = 0.0;
                support.remove(k);
            }
            if support.is_empty() {
                return None;
            }
            let s: f64 = support.iter().map(|&i| mu[i]).sum();
            support.iter().for_each(|&i| mu[i] /= s);
        }
    }
    Some(mu)
}

/// Frank–Wolfe with away steps on the simplex for `min μᵀ ζ μ`.
pub(crate) fn minimize_on_simplex(
    z: &DMatrix<f64>,
    start: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
    convex: bool,
) -> (Vec<f64>, f64, usize, bool) {
    let n = z.nrows();
    let mut st = State::new(z, start);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        if iterations % RESYNC_INTERVAL == 0 && iterations > 0 {
            st = State::new(z, std::mem::take(&mut st.mu));
        }
        if convex && iterations % POLISH_INTERVAL == 0 {
            if let Some(mu) = active_set_refine(z, &st.mu, tolerance) {
                let cand = State::new(z, mu);
                if cand.q <= st.q {
                    st = cand;
                }
            }
        }
        let s = argmin(&st.g);
        let fw_gap = 2.0 * (st.q - st.g[s]);
        if fw_gap <= tolerance {
            converged = true;
            break;
        }
        if iterations >= max_iterations {
            break;
        }
        iterations += 1;

        // Away vertex: worst coordinate in the support, ties to lowest index.
        let mut v = usize::MAX;
        for i in 0..n {
            if st.mu[i] > 0.0 && (v == usize::MAX || st.g[i] > st.g[v]) {
                v = i;
            }
        }
        let away_gap = 2.0 * (st.g[v] - st.q);
        let use_away = away_gap > fw_gap && st.mu[v] < 1.0;

        let (slope, curvature, gamma_max) = if use_away {
            let mv = st.mu[v];
            (st.q - st.g[v], st.q - 2.0 * st.g[v] + z[(v, v)], mv / (1.0 - mv))
        } else {
            (st.g[s] - st.q, z[(s, s)] - 2.0 * st.g[s] + st.q, 1.0)
        };
        // φ(γ) = q + 2γ·slope + γ²·curvature, slope < 0.
        let gamma = if curvature > 0.0 {
            (-slope / curvature).clamp(0.0, gamma_max)
        } else {
            gamma_max
        };
        if gamma <= 0.0 {
            break;
        }
        if use_away {
            let col = z.column(v);
            for i in 0..n {
                st.mu[i] *= 1.0 + gamma;
                st.g[i] = (1.0 + gamma) * st.g[i] - gamma * col[i];
            }
            st.mu[v] -= gamma;
            if gamma >= gamma_max || st.mu[v] <= 0.0 {
                st.mu[v] = 0.0;
            }
        } else {
            let col = z.column(s);
            for i in 0..n {
                st.mu[i] *= 1.0 - gamma;
                st.g[i] = (1.0 - gamma) * st.g[i] + gamma * col[i];
            }
            st.mu[s] += gamma;
        }
        st.q = dot(&st.mu, &st.g);
    }
    let st = State::new(z, st.mu);
    let gap = st.gap();
    converged = converged || gap <= tolerance;
    (st.mu, st.q, iterations, converged)
}

/// Maximum diversity of `tA`.
pub fn max_diversity(
    space: &FiniteMetricSpace,
    t: f64,
    options: &DiversityOptions,
) -> Result<DiversityResult, DiversityError> {
    check_scale(t)?;
    if !(options.tolerance.is_finite() && options.tolerance > 0.0) {
        return Err(DiversityError::InvalidTolerance(options.tolerance));
    }
    let n = space.len();
    let start = match &options.warm_start {
        Some(mu) => {
            let ok = mu.len() == n
                && mu.iter().all(|&m| m.is_finite() && m >= 0.0)
                && mu.iter().sum::<f64>() > 0.0;
            if !ok {
                return Err(DiversityError::BadWarmStart(n));
            }
            mu.clone()
        }
        None => vec![1.0 / n as f64; n],
    };
    let z = zeta_matrix(space, t);
    let convex = Cholesky::new(z.clone()).is_some();
    let (mu, q, iterations, converged) =
        minimize_on_simplex(&z, start, options.tolerance, options.max_iterations, convex);
    let g = mat_vec(&z, &mu);
    let duality_gap = (2.0 * (q - g[argmin(&g)])).max(0.0);
    let result = DiversityResult {
        mu,
        value: 1.0 / q,
        t,
        iterations,
        duality_gap,
        converged,
        certified: convex && converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(DiversityError::MaxIterationsExceeded {
            best: Box::new(result),
        })
    }
}

/// Exhaustive oracle: solve the KKT system `ζ_S μ = λ 1`, `Σ μ = 1` on every
/// nonempty support `S`, keep the feasible candidate with the smallest
/// quadratic. Exact global optimum, including for indefinite `ζ_t`.
pub fn brute_force_diversity(space: &FiniteMetricSpace, t: f64) -> Result<DiversityResult, DiversityError> {
    check_scale(t)?;
    let n = space.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(DiversityError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let z = zeta_matrix(space, t);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut supports = 0;
    for mask in 1u32..(1u32 << n) {
        supports += 1;
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let m = idx.len();
        let sub = DMatrix::from_fn(m, m, |a, b| z[(idx[a], idx[b])]);
        let Some(v) = sub.lu().solve(&DVector::from_element(m, 1.0)) else {
            continue;
        };
        let total: f64 = v.iter().sum();
        if !(total.is_finite() && total.abs() > 1e-300) {
            continue;
        }
        if v.iter().any(|x| x / total < -1e-12) {
            continue;
        }
        let mut mu = vec![0.0; n];
        for (&i, x) in idx.iter().zip(v.iter()) {
            mu[i] = (x / total).max(0.0);
        }
        let s: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|x| *x /= s);
        let q = dot(&mu, &mat_vec(&z, &mu));
        if best.as_ref().is_none_or(|(bq, _)| q < *bq) {
            best = Some((q, mu));
        }
    }
    let (q, mu) = best.expect("singletons are always feasible");
    let g = mat_vec(&z, &mu);
    Ok(DiversityResult {
        duality_gap: (2.0 * (q - g[argmin(&g)])).max(0.0),
        mu,
        value: 1.0 / q,
        t,
        iterations: supports,
        converged: true,
        certified: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityCurve {
    pub n_points: usize,
    pub samples: Vec<DiversityResult>,
    /// Samples that did not converge or failed, by scale.
    pub failures: Vec<(f64, DiversityError)>,
}

impl DiversityCurve {
    /// Pairs `(t, |tA|_+)` of the successful samples.
    pub fn points(&self) -> Vec<crate::magnitude::CurvePoint> {
        self.samples
            .iter()
            .map(|r| crate::magnitude::CurvePoint {
                t: r.t,
                value: r.value,
            })
            .collect()
    }

    /// Consecutive samples where the value drops by more than `slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<(f64, f64)> {
        self.samples
            .windows(2)
            .filter(|w| w[1].value < w[0].value - slack)
            .map(|w| (w[0].t, w[1].t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversitySweep {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Start each scale from the previous optimum. Disabling this lets the
    /// samples run in parallel.
    pub warm_start: bool,
}

impl Default for DiversitySweep {
    fn default() -> Self {
        DiversitySweep {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            warm_start: true,
        }
    }
}

pub fn diversity_function(
    space: &FiniteMetricSpace,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<DiversityCurve, DiversityError> {
    diversity_function_with(
        space,
        t_grid,
        &DiversitySweep {
            tolerance,
            ..DiversitySweep::default()
        },
    )
}

pub fn diversity_function_with(
    space: &FiniteMetricSpace,
    t_grid: &[f64],
    sweep: &DiversitySweep,
) -> Result<DiversityCurve, DiversityError> {
    magnitude::check_grid(t_grid).map_err(|_| DiversityError::InvalidGrid)?;
    let options = DiversityOptions {
        tolerance: sweep.tolerance,
        max_iterations: sweep.max_iterations,
        warm_start: None,
    };
    let outcomes: Vec<(f64, Result<DiversityResult, DiversityError>)> = if sweep.warm_start {
        let mut prev: Option<Vec<f64>> = None;
        t_grid
            .iter()
            .map(|&t| {
                let opts = DiversityOptions {
                    warm_start: prev.clone(),
                    ..options.clone()
                };
                let r = max_diversity(space, t, &opts);
                match &r {
                    Ok(res) => prev = Some(res.mu.clone()),
                    Err(DiversityError::MaxIterationsExceeded { best }) => {
                        prev = Some(best.mu.clone())
                    }
                    Err(_) => {}
                }
                (t, r)
            })
            .collect()
    } else {
        t_grid
            .par_iter()
            .map(|&t| (t, max_diversity(space, t, &options)))
            .collect()
    };
    let mut curve = DiversityCurve {
        n_points: space.len(),
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (t, r) in outcomes {
        match r {
            Ok(res) => curve.samples.push(res),
            Err(e) => curve.failures.push((t, e)),
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparabilityRow {
    pub t: f64,
    pub magnitude: f64,
    pub diversity: f64,
    /// `|tA| / |tA|_+`.
    pub ratio: f64,
}

/// Per-scale ratios of magnitude to maximum diversity. The maximum is an
/// observed lower bound for the dimension-dependent comparability constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub rows: Vec<ComparabilityRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

pub fn comparability_report(
    space: &FiniteMetricSpace,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<ComparabilityReport, DiversityError> {
    let curve = diversity_function(space, t_grid, tolerance)?;
    if let Some((_, e)) = curve.failures.into_iter().next() {
        return Err(e);
    }
    let rows = curve
        .samples
        .iter()
        .map(|d| {
            let m = magnitude::magnitude(space, d.t)?;
            Ok(ComparabilityRow {
                t: d.t,
                magnitude: m,
                diversity: d.value,
                ratio: m / d.value,
            })
        })
        .collect::<Result<Vec<_>, MagnitudeError>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(ComparabilityReport {
        rows,
        max_ratio,
        min_ratio,
    })
}
