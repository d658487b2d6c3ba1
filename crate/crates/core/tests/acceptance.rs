mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use metric_magnitude::dimension::{self, WindowPolicy};
use metric_magnitude::diversity::{self, DiversityOptions};
use metric_magnitude::grid;
use metric_magnitude::magnitude;
use metric_magnitude::metric::{self, FiniteMetricSpace};
use metric_magnitude::spaces::{self, CircleMetric};
use metric_magnitude::ultra;
use num_rational::Ratio;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn interval_magnitude() -> Outcome {
    let start = Instant::now();
    let s = spaces::interval_grid(1.0, 2000).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in [1.0, 10.0, 100.0] {
        let m = magnitude::magnitude(&s, t).map_err(|e| e.to_string())?;
        worst = worst.max(rel(m, 1.0 + t / 2.0));
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 5e-3 && secs < 30.0, format!("max rel err {worst:.2e}, {secs:.1} s"))
}

fn two_points() -> Outcome {
    let mut rng = common::rng(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(0.01..10.0);
        let t = rng.gen_range(0.01..10.0);
        let s = common::line_points(&[0.0, d]);
        let m = magnitude::magnitude(&s, t).map_err(|e| e.to_string())?;
        worst = worst.max(rel(m, 2.0 / (1.0 + (-t * d).exp())));
    }
    check(worst <= 1e-12, format!("max rel err {worst:.2e}"))
}

fn three_points() -> Outcome {
    let mut rng = common::rng(103);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s: f64 = rng.gen_range(0.01..5.0);
        let t = rng.gen_range(0.05..10.0);
        let q = (-t * s).exp();
        let m = magnitude::magnitude(&common::line_points(&[0.0, s, 2.0 * s]), t).map_err(|e| e.to_string())?;
        worst = worst.max(rel(m, (3.0 - q) / (1.0 + q)));
    }
    check(worst <= 1e-12, format!("max rel err {worst:.2e}"))
}

fn diversity_oracle() -> Outcome {
    let mut rng = common::rng(104);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let dim = rng.gen_range(1..=3);
        let s = common::cloud(&mut rng, n, dim, 2.0);
        let t = rng.gen_range(0.05..10.0);
        let fw = diversity::max_diversity(&s, t, &DiversityOptions::default()).map_err(|e| e.to_string())?;
        let bf = diversity::brute_force_diversity(&s, t).map_err(|e| e.to_string())?;
        worst = worst.max((fw.value - bf.value).abs());
    }
    check(worst <= 1e-8, format!("max abs diff {worst:.2e}"))
}

fn sandwich_and_monotonicity() -> Outcome {
    let grid = metric::standard_sweep_grid();
    let mut rng = common::rng(105);
    let mut violations = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=30);
        let s = common::cloud(&mut rng, n, 2, 1.0);
        let curve = diversity::diversity_function(&s, &grid, diversity::DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
        violations += curve.failures.len();
        violations += curve.monotonicity_violations(1e-8).len();
        for r in &curve.samples {
            let m = magnitude::magnitude(&s, r.t).map_err(|e| e.to_string())?;
            if r.value > m + 1e-8 || r.value > (r.t * s.diameter()).exp() {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{violations} violations"))
}

fn scaling_bounds() -> Outcome {
    let mut rng = common::rng(106);
    let pairs: Vec<(f64, f64)> = [1.5, 3.0, 10.0].iter().map(|&t| (1.0, t)).collect();
    let mut violations = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=30);
        let s = common::cloud(&mut rng, n, 2, 1.0);
        violations += dimension::scaling_bounds_check(&s, &pairs).map_err(|e| e.to_string())?.violations;
    }
    check(violations == 0, format!("{violations} violations"))
}

fn one_dimensional_equality() -> Outcome {
    let mut rng = common::rng(107);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=30);
        let xs = common::random_line(&mut rng, n, 0.01, 1.0);
        let s = common::line_points(&xs);
        for t in [0.1, 1.0, 10.0] {
            let d = diversity::max_diversity(&s, t, &DiversityOptions::default()).map_err(|e| e.to_string())?;
            let m = magnitude::magnitude(&s, t).map_err(|e| e.to_string())?;
            worst = worst.max(rel(d.value, m));
        }
    }
    check(worst <= 1e-7, format!("max rel diff {worst:.2e}"))
}

fn circle() -> Outcome {
    let c = spaces::circle_uniform(1.0, 512, CircleMetric::Geodesic).map_err(|e| e.to_string())?;
    let mut closed: f64 = 0.0;
    let mut formula: f64 = 0.0;
    for t in [1.0, 5.0, 20.0] {
        let m = magnitude::magnitude(c.base(), t).map_err(|e| e.to_string())?;
        closed = closed.max(rel(m, PI * t / (1.0 - (-PI * t).exp())));
        let h = spaces::homogeneous_magnitude(&c, t).map_err(|e| e.to_string())?;
        formula = formula.max(rel(h, m));
    }
    check(
        closed < 5e-3 && formula <= 1e-8,
        format!("closed form rel err {closed:.2e}, homogeneous vs solve {formula:.2e}"),
    )
}

fn three_estimators(
    s: &FiniteMetricSpace,
    t_grid: &[f64],
    eps_grid: &[f64],
) -> Result<[f64; 3], String> {
    let mag = magnitude::magnitude_function(s, t_grid).map_err(|e| e.to_string())?;
    let m = dimension::magnitude_dimension(&mag, WindowPolicy::Full).map_err(|e| e.to_string())?;
    let div = diversity::diversity_function(s, t_grid, diversity::DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
    let d = dimension::diversity_dimension(&div, WindowPolicy::Full).map_err(|e| e.to_string())?;
    let k = dimension::minkowski_dimension(s, eps_grid, WindowPolicy::Full).map_err(|e| e.to_string())?;
    Ok([m.slope, d.slope, k.estimate.slope])
}

fn dimension_agreement() -> Outcome {
    let start = Instant::now();
    let interval = spaces::interval_grid(1.0, 2000).map_err(|e| e.to_string())?;
    let eps: Vec<f64> = grid::log_grid(1e-3, 5e-2, 12).into_iter().rev().collect();
    let a = three_estimators(&interval, &grid::log_grid(20.0, 1000.0, 12), &eps)?;

    let cantor = spaces::cantor_endpoints(7).map_err(|e| e.to_string())?;
    let eps: Vec<f64> = (2..=6).map(|k| 3f64.powi(-k)).collect();
    let b = three_estimators(&cantor, &grid::log_grid(9.0, 729.0, 13), &eps)?;

    let target = 2f64.ln() / 3f64.ln();
    let secs = start.elapsed().as_secs_f64();
    let ok = a.iter().all(|x| (x - 1.0).abs() <= 0.05)
        && b.iter().all(|x| (x - target).abs() <= 0.05)
        && secs < 300.0;
    check(
        ok,
        format!(
            "interval mag/div/mink {:.4}/{:.4}/{:.4}, cantor {:.4}/{:.4}/{:.4}, {secs:.1} s",
            a[0], a[1], a[2], b[0], b[1], b[2]
        ),
    )
}

fn ultrametric() -> Outcome {
    let mut rng = common::rng(110);
    let mut mismatches = 0;
    for _ in 0..200 {
        let tree = common::random_tree(&mut rng, 12);
        let u = ultra::ultramagnitude(&tree, 1.0).map_err(|e| e.to_string())?;
        if u != common::exhaustive_cover(tree.base(), 1.0) || u != common::exhaustive_packing(tree.base(), 1.0) {
            mismatches += 1;
        }
        let total: Ratio<u64> = ultra::ultraweighting_exact(&tree).into_iter().sum();
        if total != Ratio::from_integer(u as u64) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches"))
}

fn potential_and_pde() -> Outcome {
    let s = spaces::interval_grid(1.0, 2000).map_err(|e| e.to_string())?;
    let queries = [1.05, 1.2, 1.5, 2.0, 3.0];
    let pts: Vec<Vec<f64>> = queries.iter().map(|&x| vec![x]).collect();
    let h = magnitude::potential_at_points(&s, 1.0, &pts).map_err(|e| e.to_string())?;
    let worst = queries
        .iter()
        .zip(&h)
        .map(|(&x, &v)| (v - (1.0 - x).exp()).abs())
        .fold(0.0, f64::max);
    let off: Vec<f64> = [-1.5, -0.4, 1.3, 2.5].to_vec();
    let pde = magnitude::pde_residual_1d(&s, 1.0, &off, 1e-3).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-2 && pde.max_residual < 1e-3,
        format!("exterior err {worst:.2e}, residual {:.2e}", pde.max_residual),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("interval magnitude", interval_magnitude),
        ("two-point closed form", two_points),
        ("three-point closed form", three_points),
        ("diversity oracle", diversity_oracle),
        ("sandwich and monotonicity", sandwich_and_monotonicity),
        ("scaling bounds", scaling_bounds),
        ("one-dimensional equality", one_dimensional_equality),
        ("circle", circle),
        ("dimension agreement", dimension_agreement),
        ("ultrametric", ultrametric),
        ("potential and PDE", potential_and_pde),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
