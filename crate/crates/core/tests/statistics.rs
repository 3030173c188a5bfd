//! Seeded Monte-Carlo runs against exact small-N laws and the semicircle.

use betatrace::density_stats::{bin_averages, l1_distance, semicircle_bin_averages, GridSpec, Regime};
use betatrace::ensemble::{canonical_strength_sq, EnsembleKind, EnsembleParams, SampleSeed, Strength};
use betatrace::exact_ref::{exact_density_small_n, gap_cdf_n2, gaussian_density};
use betatrace::simulate::{collect_spectra, simulate_histogram, Threads};
use betatrace::tridiag_eig::eigenvalues;

#[test]
fn two_by_two_gap_law_kolmogorov_smirnov() {
    for (beta, seed) in [(1.0, 11u64), (2.0, 12), (4.0, 13)] {
        let p = EnsembleParams::gaussian(2, beta).unwrap();
        let mut gaps: Vec<f64> = (0..100_000u64)
            .map(|r| {
                let t = betatrace::ensemble::sample_matrix(&p, SampleSeed::new(seed, r)).unwrap();
                let s = eigenvalues(&t).unwrap();
                s.values[1] - s.values[0]
            })
            .collect();
        gaps.sort_by(|a, b| a.total_cmp(b));
        let m = gaps.len() as f64;
        let mut ks = 0.0f64;
        for (i, g) in gaps.iter().enumerate().step_by(97) {
            let f = gap_cdf_n2(beta, *g).unwrap();
            ks = ks.max((f - i as f64 / m).abs()).max((f - (i + 1) as f64 / m).abs());
        }
        assert!(ks <= 0.02, "beta={beta}: KS distance {ks}");
    }
}

fn interior_z_scores(kind: EnsembleKind, n: usize, beta: f64, reps: u64, seed: u64) -> f64 {
    let p = EnsembleParams::new(n, beta, kind).unwrap();
    let reach = match kind {
        EnsembleKind::FixedTrace => 0.9 * canonical_strength_sq(n).sqrt(),
        EnsembleKind::Gaussian => 4.5,
    };
    let edges = GridSpec::new(-reach, reach, 24).unwrap().edges();
    let (acc, _) = simulate_histogram(&p, seed, reps, &edges, Regime::Raw, Threads(Some(4))).unwrap();
    let d = acc.finish(Regime::Raw, Some(p)).unwrap();
    let exact = bin_averages(&edges, |x| match kind {
        EnsembleKind::FixedTrace => exact_density_small_n(n, beta, kind, Strength::Canonical, &[x]).unwrap().value[0],
        EnsembleKind::Gaussian => gaussian_density(n, beta, x).unwrap().0,
    });
    d.height
        .iter()
        .zip(&d.std_err)
        .zip(&exact)
        .map(|((h, se), e)| (h - e).abs() / se.max(1e-4))
        .fold(0.0, f64::max)
}

#[test]
fn small_n_histograms_match_exact_densities() {
    let cases = [
        (EnsembleKind::FixedTrace, 2, 2.0, 21u64),
        (EnsembleKind::FixedTrace, 3, 2.0, 22),
        (EnsembleKind::FixedTrace, 3, 1.0, 23),
        (EnsembleKind::Gaussian, 2, 4.0, 24),
        (EnsembleKind::Gaussian, 3, 2.0, 25),
    ];
    for (kind, n, beta, seed) in cases {
        let z = interior_z_scores(kind, n, beta, 40_000, seed);
        assert!(z <= 4.5, "{kind} n={n} beta={beta}: max z {z}");
    }
}

#[test]
fn bulk_density_is_even() {
    for kind in [EnsembleKind::Gaussian, EnsembleKind::FixedTrace] {
        let p = EnsembleParams::new(40, 2.0, kind).unwrap();
        let edges = GridSpec::new(-1.2, 1.2, 24).unwrap().edges();
        let (acc, _) = simulate_histogram(&p, 31, 400, &edges, Regime::Bulk, Threads::default()).unwrap();
        let d = acc.finish(Regime::Bulk, Some(p)).unwrap();
        let k = d.bins();
        for i in 0..k / 2 {
            let (a, b) = (d.height[i], d.height[k - 1 - i]);
            let se = (d.std_err[i].powi(2) + d.std_err[k - 1 - i].powi(2)).sqrt().max(1e-3);
            assert!((a - b).abs() <= 4.5 * se, "{kind} bin {i}: {a} vs {b}");
        }
    }
}

#[test]
fn semicircle_distance_shrinks_with_n() {
    let edges = GridSpec::new(-1.2, 1.2, 60).unwrap().edges();
    let reference = semicircle_bin_averages(&edges);
    let l1: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| {
            let p = EnsembleParams::fixed_trace(n, 2.0).unwrap();
            let (acc, _) = simulate_histogram(&p, 41, 200, &edges, Regime::Bulk, Threads::default()).unwrap();
            l1_distance(&acc.finish(Regime::Bulk, Some(p)).unwrap(), &reference).unwrap()
        })
        .collect();
    assert!(l1[0] > l1[1] && l1[1] > l1[2], "{l1:?}");
}

#[test]
fn spectra_are_thread_count_independent() {
    let p = EnsembleParams::fixed_trace(25, 1.5).unwrap();
    let (a, _) = collect_spectra(&p, 5, 40, Threads(Some(1))).unwrap();
    let (b, _) = collect_spectra(&p, 5, 40, Threads(Some(5))).unwrap();
    assert_eq!(a, b);
}
