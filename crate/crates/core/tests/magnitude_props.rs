mod common;

use metric_magnitude::magnitude::{self, MagnitudeError};
use metric_magnitude::metric::FiniteMetricSpace;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn subsets_never_exceed_the_whole() {
    let mut rng = common::rng(3);
    for _ in 0..5 {
        let a = common::cloud(&mut rng, 25, 2, 3.0);
        for &t in &[0.3, 1.0, 4.0] {
            let whole = magnitude::magnitude(&a, t).unwrap();
            for _ in 0..200 {
                let k = rng.gen_range(1..a.len());
                let mut idx: Vec<usize> = (0..a.len()).collect();
                idx.shuffle(&mut rng);
                let b = a.subspace(&idx[..k]);
                let part = magnitude::magnitude(&b, t).unwrap();
                assert!(part <= whole + 1e-9, "t={t}: |B|={part} > |A|={whole}");
            }
        }
    }
}

#[test]
fn one_dimensional_weights_are_positive() {
    let mut rng = common::rng(5);
    let mut negative = 0;
    for _ in 0..50 {
        let xs = common::random_line(&mut rng, 20, 0.01, 1.0);
        let s = common::line_points(&xs);
        let w = magnitude::weighting(&s, 2.0).unwrap();
        assert!(rel(w.total(), common::line_magnitude(&xs, 2.0)) < 1e-10);
        negative += w.w.iter().filter(|&&x| x <= 0.0).count();
    }
    assert_eq!(negative, 0);
}

#[test]
fn refuses_near_singular_scales() {
    let s = common::line_points(&[0.0, 1.0]);
    match magnitude::weighting(&s, 1e-15) {
        Err(MagnitudeError::IllConditioned { condition_estimate }) => {
            assert!(condition_estimate > 1e14)
        }
        other => panic!("{other:?}"),
    }
}

fn cloud_strategy() -> impl Strategy<Value = FiniteMetricSpace> {
    (any::<u64>(), 2usize..25, 1usize..4)
        .prop_map(|(seed, n, dim)| common::cloud(&mut common::rng(seed), n, dim, 4.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_consistency(a in cloud_strategy(), s in 0.1f64..10.0, t in 0.1f64..10.0) {
        let direct = magnitude::magnitude(&a, s * t).unwrap();
        let scaled = a.rescale(s).unwrap().materialize();
        let via = magnitude::magnitude(&scaled, t).unwrap();
        prop_assert!(rel(direct, via) < 1e-10, "{} vs {}", direct, via);
    }

    #[test]
    fn large_scale_limit(a in cloud_strategy()) {
        let n = a.len() as f64;
        let t = 40.0 / a.min_separation().unwrap();
        let m = magnitude::magnitude(&a, t).unwrap();
        prop_assert!(m >= n - 1e-6 && m <= n + 1e-12, "{} points, magnitude {}", n, m);
    }

    #[test]
    fn weighting_is_permutation_equivariant(a in cloud_strategy(), seed in any::<u64>(), t in 0.1f64..5.0) {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut common::rng(seed));
        let b = a.subspace(&perm);
        let wa = magnitude::weighting(&a, t).unwrap();
        let wb = magnitude::weighting(&b, t).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((wb.w[k] - wa.w[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_the_line_formula(seed in any::<u64>(), n in 2usize..40, t in 0.05f64..50.0) {
        let xs = common::random_line(&mut common::rng(seed), n, 0.01, 2.0);
        let m = magnitude::magnitude(&common::line_points(&xs), t).unwrap();
        prop_assert!(rel(m, common::line_magnitude(&xs, t)) < 1e-10);
    }

    #[test]
    fn residual_is_reported_and_small(a in cloud_strategy(), t in 0.1f64..10.0) {
        let w = magnitude::weighting(&a, t).unwrap();
        prop_assert!(w.residual <= magnitude::DEFAULT_SOLVER_TOLERANCE);
        prop_assert!(rel(w.total(), common::lu_magnitude(&a, t)) < 1e-10);
    }
}
