mod common;

use metric_magnitude::diversity::{self, DiversityOptions};
use metric_magnitude::magnitude;
use metric_magnitude::metric::{self, FiniteMetricSpace, DEFAULT_TRIANGLE_TOLERANCE};
use proptest::prelude::*;

const TOL: f64 = diversity::DEFAULT_TOLERANCE;

fn cloud_strategy(max_n: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    (any::<u64>(), 1usize..=max_n, 1usize..4)
        .prop_map(|(seed, n, dim)| common::cloud(&mut common::rng(seed), n, dim, 3.0))
}

fn bipartite(a: usize, b: usize) -> FiniteMetricSpace {
    let n = a + b;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, (i < a) == (j < a)) {
                    (true, _) => 0.0,
                    (false, true) => 2.0,
                    (false, false) => 1.0,
                })
                .collect()
        })
        .collect();
    FiniteMetricSpace::from_rows(&rows, DEFAULT_TRIANGLE_TOLERANCE).unwrap()
}

#[test]
fn non_positive_definite_results_are_not_certified() {
    let s = bipartite(4, 2);
    let t = 0.2;
    assert!(!metric::is_positive_definite(&s, t, 1e-12));
    let fw = diversity::max_diversity(&s, t, &DiversityOptions::default()).unwrap();
    assert!(!fw.certified);
    let oracle = diversity::brute_force_diversity(&s, t).unwrap();
    assert!(oracle.certified);
    assert!(fw.value <= oracle.value + 1e-9);
}

#[test]
fn sweep_respects_sandwich_and_diameter() {
    let grid = metric::standard_sweep_grid();
    let mut rng = common::rng(21);
    for _ in 0..10 {
        let s = common::cloud(&mut rng, 20, 2, 1.0);
        let curve = diversity::diversity_function(&s, &grid, TOL).unwrap();
        assert!(curve.failures.is_empty());
        assert!(curve.monotonicity_violations(10.0 * TOL).is_empty());
        for r in &curve.samples {
            let m = magnitude::magnitude(&s, r.t).unwrap();
            assert!(r.value <= m + 10.0 * TOL, "t={}: {} > {}", r.t, r.value, m);
            assert!(r.value <= (r.t * s.diameter()).exp());
        }
    }
}

#[test]
fn comparability_ratios_are_at_least_one() {
    let s = common::cloud(&mut common::rng(2), 30, 2, 1.0);
    let r = diversity::comparability_report(&s, &metric::standard_sweep_grid(), TOL).unwrap();
    assert!(r.min_ratio >= 1.0 - 1e-8);
    assert!(r.max_ratio >= r.min_ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn result_is_a_probability_vector(s in cloud_strategy(30), t in 0.05f64..20.0) {
        let r = diversity::max_diversity(&s, t, &DiversityOptions::default()).unwrap();
        prop_assert!(r.mu.iter().all(|&m| m >= -1e-12));
        prop_assert!((r.mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(r.duality_gap <= TOL);
        prop_assert!(r.value <= (t * s.diameter()).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn matches_the_exhaustive_oracle(s in cloud_strategy(8), t in 0.05f64..20.0) {
        let fw = diversity::max_diversity(&s, t, &DiversityOptions::default()).unwrap();
        let oracle = diversity::brute_force_diversity(&s, t).unwrap();
        prop_assert!((fw.value - oracle.value).abs() <= 1e-8 * oracle.value,
            "{} vs {}", fw.value, oracle.value);
    }

    #[test]
    fn line_diversity_equals_magnitude(seed in any::<u64>(), n in 1usize..25, t in 0.05f64..20.0) {
        let xs = common::random_line(&mut common::rng(seed), n, 0.01, 1.0);
        let s = common::line_points(&xs);
        let d = diversity::max_diversity(&s, t, &DiversityOptions::default()).unwrap();
        let m = common::line_magnitude(&xs, t);
        prop_assert!((d.value - m).abs() <= 1e-7 * m);
    }
}
