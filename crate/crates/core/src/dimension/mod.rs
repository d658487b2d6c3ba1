//! Dimension estimators and the scaling / volume inequality checks.
//!
//! Dimensions are growth exponents in the limit, which finite data cannot
//! reach. Every estimator here is a least-squares slope over a window of a
//! log–log plot; the extreme slopes between consecutive samples are
//! reported alongside as rough stand-ins for the upper and lower variants.

pub mod cover;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cover::{
    cover_table, covering_number, greedy_covering, greedy_packing, packing_number, CountResult,
    CoverRow, EXACT_LIMIT,
};

use crate::diversity::DiversityCurve;
use crate::magnitude::{self, CurvePoint, MagnitudeCurve, MagnitudeError};
use crate::metric::FiniteMetricSpace;

/// Minimum span of an input grid, in decades.
pub const MIN_DECADES: f64 = 1.5;
/// Fit quality accepted by the automatic window.
pub const AUTO_MIN_R_SQUARED: f64 = 0.99;
/// Fraction of samples trimmed from each end by the automatic window.
pub const AUTO_TRIM: f64 = 0.2;
/// Automatic windows on magnitude-type curves keep samples at most this
/// fraction of the cardinality.
pub const SATURATION_FRACTION: f64 = 0.5;
/// Relative slack for the scaling inequalities.
pub const SCALING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum DimensionError {
    #[error("window too narrow: {points} samples spanning {decades:.3} decades")]
    WindowTooNarrow { points: usize, decades: f64 },
    #[error("curve saturates: fewer than 3 samples below {limit}")]
    SaturatedCurve { limit: f64 },
    #[error("grid must be positive and strictly monotone")]
    InvalidGrid,
    #[error("space has no ambient Euclidean coordinates")]
    NoAmbientDimension,
    #[error("scale pair ({s}, {t}) must satisfy 0 < s <= t")]
    InvalidPair { s: f64, t: f64 },
    #[error(transparent)]
    Magnitude(#[from] MagnitudeError),
}

/// Which samples enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "policy")]
pub enum WindowPolicy {
    /// Every sample.
    Full,
    /// Trim both ends, widen until the fit is good enough.
    #[default]
    Auto,
    /// Samples whose scale variable (t, or ε for covering numbers) lies in
    /// `[low, high]`.
    Range { low: f64, high: f64 },
}

/// A log–log slope fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Abscissa range of the fit, in log units.
    pub window: (f64, f64),
    pub r_squared: f64,
    /// All `(log x, log y)` pairs, sorted by abscissa.
    pub samples: Vec<(f64, f64)>,
    pub min_local_slope: f64,
    pub max_local_slope: f64,
}

struct Fit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn ols(points: &[(f64, f64)]) -> Fit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Fit {
        slope: if syy == 0.0 { 0.0 } else { slope },
        intercept,
        r_squared,
    }
}

fn decades(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    (hi / lo).log10()
}

fn estimate(samples: Vec<(f64, f64)>, lo: usize, hi: usize) -> DimensionEstimate {
    let window = &samples[lo..hi];
    let fit = ols(window);
    let local = window
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0));
    let min_local_slope = local.clone().fold(f64::INFINITY, f64::min);
    let max_local_slope = local.fold(f64::NEG_INFINITY, f64::max);
    DimensionEstimate {
        slope: fit.slope,
        intercept: fit.intercept,
        window: (window[0].0, window[window.len() - 1].0),
        r_squared: fit.r_squared,
        min_local_slope,
        max_local_slope,
        samples,
    }
}

/// Fit `log value` against `log scale`.
///
/// `scale_of` maps the abscissa variable back to the user-facing scale used
/// by [`WindowPolicy::Range`]. `saturation`, when set, is the cap applied
/// to values under the automatic window.
fn fit_log_log(
    raw: &[(f64, f64)],
    policy: WindowPolicy,
    saturation: Option<f64>,
    scale_of: impl Fn(f64) -> f64,
) -> Result<DimensionEstimate, DimensionError> {
    let mut pts: Vec<(f64, f64, f64)> = raw
        .iter()
        .map(|&(x, y)| (x.ln(), y.ln(), y))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let span = decades(raw.iter().map(|p| p.0));
    if pts.len() < 3 || span < MIN_DECADES {
        return Err(DimensionError::WindowTooNarrow {
            points: pts.len(),
            decades: span.max(0.0),
        });
    }
    let narrow = |points: usize| DimensionError::WindowTooNarrow {
        points,
        decades: span,
    };
    match policy {
        WindowPolicy::Full => {
            let m = pts.len();
            Ok(estimate(strip(pts), 0, m))
        }
        WindowPolicy::Range { low, high } => {
            let inside: Vec<usize> = (0..pts.len())
                .filter(|&k| {
                    let s = scale_of(pts[k].0);
                    s >= low * (1.0 - 1e-12) && s <= high * (1.0 + 1e-12)
                })
                .collect();
            if inside.len() < 3 {
                return Err(narrow(inside.len()));
            }
            let (lo, hi) = (inside[0], inside[inside.len() - 1] + 1);
            Ok(estimate(strip(pts), lo, hi))
        }
        WindowPolicy::Auto => {
            let m_all = pts.len();
            // Saturated samples sit at the top of the scale range; the
            // usable prefix ends at the first sample above the cap.
            let usable = match saturation {
                Some(limit) => {
                    let k = pts.iter().position(|p| p.2 > limit).unwrap_or(m_all);
                    if k < 3 {
                        return Err(DimensionError::SaturatedCurve { limit });
                    }
                    k
                }
                None => m_all,
            };
            let trim = (AUTO_TRIM * usable as f64).floor() as usize;
            let (mut lo, mut hi) = (trim, usable - trim);
            if hi - lo < 3 {
                lo = 0;
                hi = usable;
            }
            let samples = strip(pts);
            let mut best = estimate(samples.clone(), lo, hi);
            while best.r_squared < AUTO_MIN_R_SQUARED && (lo > 0 || hi < usable) {
                lo = lo.saturating_sub(1);
                hi = (hi + 1).min(usable);
                let e = estimate(samples.clone(), lo, hi);
                if e.r_squared > best.r_squared {
                    best = e;
                }
            }
            Ok(best)
        }
    }
}

fn strip(pts: Vec<(f64, f64, f64)>) -> Vec<(f64, f64)> {
    pts.into_iter().map(|(x, y, _)| (x, y)).collect()
}

/// Slope of `log value` against `log t` for a curve sampled from a space
/// with `n_points` points. One-point spaces have constant curves and are
/// never treated as saturated.
pub fn scaling_exponent(
    points: &[CurvePoint],
    n_points: usize,
    policy: WindowPolicy,
) -> Result<DimensionEstimate, DimensionError> {
    let raw: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.value)).collect();
    let saturation = (n_points > 1).then_some(SATURATION_FRACTION * n_points as f64);
    fit_log_log(&raw, policy, saturation, f64::exp)
}

/// Magnitude dimension estimate from a sampled magnitude function.
pub fn magnitude_dimension(curve: &MagnitudeCurve, policy: WindowPolicy) -> Result<DimensionEstimate, DimensionError> {
    scaling_exponent(&curve.samples, curve.n_points, policy)
}

/// Diversity dimension estimate from a sampled diversity function.
pub fn diversity_dimension(curve: &DiversityCurve, policy: WindowPolicy) -> Result<DimensionEstimate, DimensionError> {
    scaling_exponent(&curve.points(), curve.n_points, policy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkowskiEstimate {
    pub estimate: DimensionEstimate,
    pub table: Vec<CoverRow>,
    /// Exactness of each covering number, in table order.
    pub exact_flags: Vec<bool>,
}

/// Slope of `log N(A, ε)` against `log(1/ε)` over a decreasing ε grid.
pub fn minkowski_dimension(
    space: &FiniteMetricSpace,
    epsilon_grid: &[f64],
    policy: WindowPolicy,
) -> Result<MinkowskiEstimate, DimensionError> {
    let decreasing = epsilon_grid.windows(2).all(|w| w[0] > w[1]);
    if epsilon_grid.is_empty()
        || !decreasing
        || epsilon_grid.iter().any(|e| !(e.is_finite() && *e > 0.0))
    {
        return Err(DimensionError::InvalidGrid);
    }
    let counts: Vec<CountResult> = {
        use rayon::prelude::*;
        epsilon_grid
            .par_iter()
            .map(|&e| covering_number(space, e))
            .collect()
    };
    let raw: Vec<(f64, f64)> = epsilon_grid
        .iter()
        .zip(&counts)
        .map(|(&e, c)| (1.0 / e, c.count as f64))
        .collect();
    let estimate = fit_log_log(&raw, policy, None, |x| (-x).exp())?;
    let table = cover_table(space, epsilon_grid);
    Ok(MinkowskiEstimate {
        estimate,
        exact_flags: counts.iter().map(|c| c.exact).collect(),
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub s: f64,
    pub t: f64,
    pub base: f64,
    pub scaled: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub ambient_dimension: usize,
    pub rows: Vec<ScalingRow>,
    pub violations: usize,
}

/// For each `(s, t)` with `t ≥ s`, check `|sA|/r ≤ |tA| ≤ rⁿ |sA|` with
/// `r = t/s` and `n` the ambient dimension.
pub fn scaling_bounds_check(
    space: &FiniteMetricSpace,
    pairs: &[(f64, f64)],
) -> Result<ScalingReport, DimensionError> {
    let n = space
        .ambient_dimension()
        .ok_or(DimensionError::NoAmbientDimension)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        if !(s > 0.0 && t >= s && t.is_finite()) {
            return Err(DimensionError::InvalidPair { s, t });
        }
        let base = magnitude::magnitude(space, s)?;
        let scaled = magnitude::magnitude(space, t)?;
        let r = t / s;
        let lower = base / r;
        let upper = r.powi(n as i32) * base;
        let holds =
            scaled >= lower * (1.0 - SCALING_SLACK) && scaled <= upper * (1.0 + SCALING_SLACK);
        rows.push(ScalingRow {
            s,
            t,
            base,
            scaled,
            lower,
            upper,
            holds,
        });
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(ScalingReport {
        ambient_dimension: n,
        rows,
        violations,
    })
}

/// `n! ω_n` where `ω_n = π^{n/2} / Γ(n/2 + 1)` is the volume of the unit
/// ball in `ℝⁿ`.
pub fn ball_volume_factor(n: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_n = ω_{n-2} · 2π / n
    let mut omega = [1.0, 2.0];
    for k in 2..=n {
        omega[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    factorial * omega[n % 2]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeReport {
    pub t: f64,
    pub ambient_dimension: usize,
    pub magnitude: f64,
    /// `tⁿ vol / (n! ω_n)`.
    pub bound: f64,
    /// `bound · (1 - slack)`.
    pub threshold: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Compare `|tA|` for a fine approximation of a body of known volume with
/// the continuum lower bound `tⁿ vol / (n! ω_n)`, relaxed by `slack`.
pub fn volume_bound_check(
    space: &FiniteMetricSpace,
    t: f64,
    declared_volume: f64,
    slack: f64,
) -> Result<VolumeReport, DimensionError> {
    let n = space
        .ambient_dimension()
        .ok_or(DimensionError::NoAmbientDimension)?;
    let m = magnitude::magnitude(space, t)?;
    let bound = t.powi(n as i32) * declared_volume / ball_volume_factor(n);
    let threshold = bound * (1.0 - slack);
    Ok(VolumeReport {
        t,
        ambient_dimension: n,
        magnitude: m,
        bound,
        threshold,
        margin: m - threshold,
        passed: m >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(raw: &[(f64, f64)]) -> Vec<CurvePoint> {
        raw.iter().map(|&(t, value)| CurvePoint { t, value }).collect()
    }

    #[test]
    fn power_law_slope_is_recovered() {
        let grid = crate::grid::log_grid(1.0, 1000.0, 15);
        let curve: Vec<_> = grid.iter().map(|&t| (t, 3.0 * t.powf(1.7))).collect();
        let e = scaling_exponent(&pts(&curve), 1_000_000, WindowPolicy::Full).unwrap();
        assert_relative_eq!(e.slope, 1.7, epsilon = 1e-12);
        assert_relative_eq!(e.intercept, 3f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(e.r_squared, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.min_local_slope, 1.7, epsilon = 1e-10);
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let grid = crate::grid::log_grid(1.0, 1000.0, 10);
        let curve: Vec<_> = grid.iter().map(|&t| (t, 1.0)).collect();
        for policy in [WindowPolicy::Full, WindowPolicy::Auto] {
            let e = scaling_exponent(&pts(&curve), 1, policy).unwrap();
            assert_eq!(e.slope, 0.0);
            assert_eq!(e.r_squared, 1.0);
        }
    }

    #[test]
    fn narrow_and_saturated_windows() {
        let grid = crate::grid::log_grid(1.0, 10.0, 10);
        let curve: Vec<_> = grid.iter().map(|&t| (t, t)).collect();
        assert!(matches!(
            scaling_exponent(&pts(&curve), 100, WindowPolicy::Auto),
            Err(DimensionError::WindowTooNarrow { .. })
        ));
        let grid = crate::grid::log_grid(1.0, 1000.0, 10);
        let curve: Vec<_> = grid.iter().map(|&t| (t, 1.0 + t)).collect();
        assert!(matches!(
            scaling_exponent(&pts(&curve), 4, WindowPolicy::Auto),
            Err(DimensionError::SaturatedCurve { .. })
        ));
        assert!(matches!(
            scaling_exponent(&pts(&curve), 4, WindowPolicy::Range { low: 2.0, high: 3.0 }),
            Err(DimensionError::WindowTooNarrow { .. })
        ));
    }

    #[test]
    fn range_window_selects_scales() {
        let grid = crate::grid::log_grid(1.0, 1000.0, 31);
        // Slope 1 below t = 10, slope 2 above.
        let curve: Vec<_> = grid
            .iter()
            .map(|&t| (t, if t <= 10.0 { t } else { t * t / 10.0 }))
            .collect();
        let e = scaling_exponent(
            &pts(&curve),
            usize::MAX,
            WindowPolicy::Range { low: 10.0, high: 1000.0 },
        )
        .unwrap();
        assert_relative_eq!(e.slope, 2.0, epsilon = 1e-9);
        assert_relative_eq!(e.window.0, 10f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn ball_volume_factors() {
        assert_eq!(ball_volume_factor(0), 1.0);
        assert_eq!(ball_volume_factor(1), 2.0);
        assert_relative_eq!(ball_volume_factor(2), 2.0 * std::f64::consts::PI, epsilon = 1e-14);
        // 3! · 4π/3 = 8π
        assert_relative_eq!(ball_volume_factor(3), 8.0 * std::f64::consts::PI, epsilon = 1e-13);
    }

    #[test]
    fn scaling_check_two_points() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        let r = scaling_bounds_check(&s, &[(1.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(r.violations, 0);
        let base = 2.0 / (1.0 + (-1f64).exp());
        assert_relative_eq!(r.rows[0].lower, base, max_relative = 1e-12);
        assert_relative_eq!(r.rows[0].upper, base, max_relative = 1e-12);
        assert_relative_eq!(r.rows[1].lower, base / 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.rows[1].upper, 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(r.rows[1].scaled, 2.0 / (1.0 + (-2f64).exp()), max_relative = 1e-12);
        assert!(matches!(
            scaling_bounds_check(&s, &[(2.0, 1.0)]),
            Err(DimensionError::InvalidPair { .. })
        ));
        let bare = FiniteMetricSpace::validate(s.distances().clone(), 1e-9).unwrap();
        assert!(matches!(
            scaling_bounds_check(&bare, &[(1.0, 2.0)]),
            Err(DimensionError::NoAmbientDimension)
        ));
    }

    #[test]
    fn zero_volume_passes() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let r = volume_bound_check(&s, 5.0, 0.0, 0.1).unwrap();
        assert!(r.passed);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn minkowski_grid_checks() {
        let s = FiniteMetricSpace::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            minkowski_dimension(&s, &[0.1, 0.2], WindowPolicy::Full),
            Err(DimensionError::InvalidGrid)
        ));
        assert!(matches!(
            minkowski_dimension(&s, &[], WindowPolicy::Full),
            Err(DimensionError::InvalidGrid)
        ));
    }
}
