use betatrace::density_stats::{bulk_rescale, HistogramAccumulator};
use betatrace::ensemble::{rescale_to_trace, sample_matrix, EnsembleParams, SampleSeed, TridiagonalSymmetric};
use betatrace::tridiag_eig::{eigenvalues, eigenvalues_bisect, sturm_count};
use proptest::prelude::*;

fn tridiagonal() -> impl Strategy<Value = TridiagonalSymmetric> {
    (1usize..25).prop_flat_map(|n| {
        (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-3.0f64..3.0, n - 1))
            .prop_map(|(d, s)| TridiagonalSymmetric::new(d, s).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn spectrum_conserves_trace_and_frobenius(t in tridiagonal()) {
        let s = eigenvalues(&t).unwrap();
        prop_assert!(s.conserves(&t), "{:?}", s.conservation_errors(&t));
        prop_assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ql_agrees_with_bisection(t in tridiagonal()) {
        let a = eigenvalues(&t).unwrap();
        let b = eigenvalues_bisect(&t, 1e-13).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn flip_is_a_similarity(t in tridiagonal()) {
        let a = eigenvalues(&t).unwrap();
        let b = eigenvalues(&t.flipped()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-11 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn spectrum_scales_linearly(t in tridiagonal(), c in -4.0f64..4.0) {
        prop_assume!(c.abs() > 1e-3);
        let a = eigenvalues(&t).unwrap();
        let b = eigenvalues(&t.scaled(c)).unwrap();
        let mut want: Vec<f64> = a.values.iter().map(|v| c * v).collect();
        want.sort_by(|x, y| x.total_cmp(y));
        for (x, y) in want.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn sturm_count_matches_sorted_spectrum(t in tridiagonal(), x in -8.0f64..8.0) {
        let s = eigenvalues(&t).unwrap();
        let below = s.values.iter().filter(|&&v| v < x).count();
        let near = s.values.iter().any(|v| (v - x).abs() < 1e-9);
        prop_assume!(!near);
        prop_assert_eq!(sturm_count(&t, x), below);
    }

    #[test]
    fn rescale_hits_any_target(t in tridiagonal(), target in 0.1f64..1e4) {
        prop_assume!(t.trace_sq() > 1e-8);
        let (r, c) = rescale_to_trace(&t, target).unwrap();
        prop_assert!(c > 0.0);
        prop_assert!((r.trace_sq() - target).abs() <= 1e-12 * target);
    }

    #[test]
    fn histogram_merge_is_order_free(
        reps in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 0..12), 1..20),
        split in 0usize..20,
    ) {
        let edges: Vec<f64> = (0..=16).map(|i| -1.6 + 0.2 * i as f64).collect();
        let split = split.min(reps.len());
        let mut whole = HistogramAccumulator::new(edges.clone()).unwrap();
        let mut left = HistogramAccumulator::new(edges.clone()).unwrap();
        let mut right = HistogramAccumulator::new(edges.clone()).unwrap();
        for (i, r) in reps.iter().enumerate() {
            whole.add_replicate(r);
            if i < split { left.add_replicate(r) } else { right.add_replicate(r) }
        }
        let mut lr = left.clone();
        lr.merge(&right).unwrap();
        let mut rl = right;
        rl.merge(&left).unwrap();
        prop_assert_eq!(&lr, &whole);
        prop_assert_eq!(&rl, &whole);
    }

    #[test]
    fn fixed_trace_bulk_values_respect_trace_budget(n in 2usize..60, beta in 0.3f64..6.0, seed in any::<u64>()) {
        let p = EnsembleParams::fixed_trace(n, beta).unwrap();
        let t = sample_matrix(&p, SampleSeed::new(seed, 0)).unwrap();
        let s = eigenvalues(&t).unwrap();
        let limit = (n as f64 - 1.0) / 4.0;
        for x in bulk_rescale(&s.values, &p) {
            prop_assert!(x * x <= limit * (1.0 + 1e-12), "x^2 = {} > {limit}", x * x);
        }
        let sum_sq: f64 = s.values.iter().map(|v| v * v).sum();
        prop_assert!((sum_sq - (n * (n - 1)) as f64 / 2.0).abs() <= 1e-9 * (n * n) as f64);
    }
}
