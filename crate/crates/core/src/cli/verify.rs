//! The inequality suite behind the `verify` command.

use serde::Serialize;

use crate::dimension::{self, WindowPolicy};
use crate::diversity::{self, DiversitySweep};
use crate::magnitude;
use crate::metric::FiniteMetricSpace;
use crate::spaces::{self, HomogeneousSpace};

/// Additive slack for the sandwich, monotonicity and diameter checks.
pub const CHECK_SLACK: f64 = 1e-8;
/// Relative agreement required between the homogeneous formula and the solver.
pub const HOMOGENEOUS_TOLERANCE: f64 = 1e-8;
/// Allowed gap between dimension estimates.
pub const DIMENSION_TOLERANCE: f64 = 0.05;
/// Relative slack for the volume bound.
pub const VOLUME_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    /// Scale, scale pair ratio, or NaN when not applicable.
    pub parameter: f64,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
    /// Samples that could not be computed.
    pub errors: Vec<String>,
}

impl VerifyOutcome {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    fn push(&mut self, check: &str, parameter: f64, value: f64, bound: f64, passed: bool) {
        self.checks.push(Check {
            check: check.to_string(),
            parameter,
            value,
            bound,
            passed,
        });
    }
}

pub struct VerifyPlan<'a> {
    pub t_grid: &'a [f64],
    pub epsilon_grid: Option<&'a [f64]>,
    pub tolerance: f64,
    pub volume: Option<f64>,
}

pub fn verify(space: &FiniteMetricSpace, plan: &VerifyPlan<'_>) -> VerifyOutcome {
    let mut out = VerifyOutcome::default();
    let diam = space.diameter();

    let curve = match magnitude::magnitude_function(space, plan.t_grid) {
        Ok(c) => c,
        Err(e) => {
            out.errors.push(format!("magnitude function: {e}"));
            return out;
        }
    };
    for f in curve.failures() {
        if let Some(e) = &f.error {
            out.errors.push(format!("magnitude at t = {}: {e}", f.t));
        }
    }
    let sweep = DiversitySweep {
        tolerance: plan.tolerance,
        ..DiversitySweep::default()
    };
    let div = match diversity::diversity_function_with(space, plan.t_grid, &sweep) {
        Ok(d) => d,
        Err(e) => {
            out.errors.push(format!("diversity function: {e}"));
            return out;
        }
    };
    for (t, e) in &div.failures {
        out.errors.push(format!("diversity at t = {t}: {e}"));
    }

    let mut uncertified = 0;
    for d in &div.samples {
        let bound = (d.t * diam).exp();
        out.push("diameter_bound", d.t, d.value, bound, d.value <= bound * (1.0 + 1e-12));
        let Some(m) = curve.samples.iter().find(|p| p.t == d.t) else {
            continue;
        };
        if d.certified {
            out.push("sandwich", d.t, d.value, m.value, d.value <= m.value + CHECK_SLACK);
        } else {
            uncertified += 1;
        }
    }
    if uncertified > 0 {
        out.skipped.push(format!(
            "sandwich at {uncertified} scales where the similarity matrix is not positive definite"
        ));
    }
    for w in div.samples.windows(2) {
        out.push(
            "diversity_monotone",
            w[1].t,
            w[1].value,
            w[0].value,
            w[1].value >= w[0].value - CHECK_SLACK,
        );
    }

    match HomogeneousSpace::certify(space.clone()) {
        Ok(h) => {
            for p in &curve.samples {
                let formula = spaces::homogeneous_magnitude(&h, p.t).unwrap_or(f64::NAN);
                let rel = (formula - p.value).abs() / p.value.abs();
                out.push("homogeneous_formula", p.t, formula, p.value, rel <= HOMOGENEOUS_TOLERANCE);
            }
        }
        Err(_) => out.skipped.push("homogeneous formula: space is not transitive".into()),
    }

    if space.ambient().is_some() {
        let g = plan.t_grid;
        let mut pairs: Vec<(f64, f64)> = g.windows(2).map(|w| (w[0], w[1])).collect();
        if g.len() > 2 {
            pairs.push((g[0], g[g.len() - 1]));
        }
        match dimension::scaling_bounds_check(space, &pairs) {
            Ok(report) => {
                for r in report.rows {
                    let bound = if r.scaled < r.lower { r.lower } else { r.upper };
                    out.push("scaling_bounds", r.t / r.s, r.scaled, bound, r.holds);
                }
            }
            Err(e) => out.errors.push(format!("scaling bounds: {e}")),
        }
        match plan.volume {
            Some(vol) => {
                let t = g[g.len() - 1];
                match dimension::volume_bound_check(space, t, vol, VOLUME_SLACK) {
                    Ok(r) => out.push("volume_bound", t, r.magnitude, r.threshold, r.passed),
                    Err(e) => out.errors.push(format!("volume bound: {e}")),
                }
            }
            None => out.skipped.push("volume bound: no volume given".into()),
        }
    } else {
        out.skipped.push("scaling and volume bounds: no ambient coordinates".into());
    }

    match plan.epsilon_grid {
        Some(eps) => dimension_agreement(space, &curve, &div, eps, &mut out),
        None => out.skipped.push("dimension agreement: no epsilon grid given".into()),
    }
    out
}

fn dimension_agreement(
    space: &FiniteMetricSpace,
    curve: &magnitude::MagnitudeCurve,
    div: &diversity::DiversityCurve,
    eps: &[f64],
    out: &mut VerifyOutcome,
) {
    let mink = match dimension::minkowski_dimension(space, eps, WindowPolicy::Auto) {
        Ok(m) => m.estimate.slope,
        Err(e) => {
            out.errors.push(format!("minkowski dimension: {e}"));
            return;
        }
    };
    let estimates = [
        ("magnitude_dimension", dimension::magnitude_dimension(curve, WindowPolicy::Auto)),
        ("diversity_dimension", dimension::diversity_dimension(div, WindowPolicy::Auto)),
    ];
    for (name, e) in estimates {
        match e {
            Ok(e) => out.push(
                name,
                f64::NAN,
                e.slope,
                mink,
                (e.slope - mink).abs() <= DIMENSION_TOLERANCE,
            ),
            Err(err) => out.errors.push(format!("{name}: {err}")),
        }
    }
}
