//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::time::{Duration, Instant};

use betatrace::density_stats::{
    bin_averages, l1_distance, semicircle, semicircle_bin_averages, weak_functional, DensityEstimate, GridSpec, Regime,
    TestFunction,
};
use betatrace::ensemble::{EnsembleParams, TridiagonalSymmetric};
use betatrace::quadrature::{integrate, AdaptiveControls};
use betatrace::report::{
    bound_constants_check, bound_mc_check, edge_remark_beta2, edge_remark_beta4, edge_remark_routes, integral_eq_check,
    moment_exact_check, moment_ratio_check, stieltjes_check, CheckReport, VerifyOptions,
};
use betatrace::simulate::{simulate_histogram, ConservationTally, Threads};
use betatrace::special_fn::{airy, airy_ai, edge_density_closed, QuadratureControls};
use betatrace::tridiag_eig::{eigenvalues, eigenvalues_bisect};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn note(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("    [{}] {line}", if ok { "ok" } else { "x" }));
    }

    fn report(&mut self, r: &CheckReport) {
        let line = format!("{} {} metric={:.3e} tol={:.3e}", r.check_name, r.params, r.metric, r.tolerance);
        self.note(r.pass, line);
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn semicircle_law(tally: &mut ConservationTally) -> Outcome {
    let mut o = Outcome::new();
    let edges = GridSpec::new(-1.2, 1.2, 60).unwrap().edges();
    let reference = semicircle_bin_averages(&edges);
    let bump = TestFunction::bump(-0.5, 0.5).unwrap();
    let exact = bump.integrate_against(semicircle);
    let start = Instant::now();
    for (beta, seed) in [(2.0, 101u64), (1.0, 102), (4.0, 103)] {
        let p = EnsembleParams::fixed_trace(200, beta).unwrap();
        let (acc, t) = simulate_histogram(&p, seed, 500, &edges, Regime::Bulk, Threads(Some(1))).unwrap();
        merge_tally(tally, t);
        let d = acc.finish(Regime::Bulk, Some(p)).unwrap();
        let l1 = l1_distance(&d, &reference).unwrap();
        o.note(l1 <= 0.05, format!("beta={beta}: L1 to semicircle {l1:.4} (tol 0.05)"));
        let w = weak_functional(&d, &bump);
        let diff = (w.value - exact).abs();
        o.note(diff <= 0.02, format!("beta={beta}: bump functional {:.5} vs {exact:.5}, |diff| {diff:.4} (tol 0.02)", w.value));
    }
    let el = start.elapsed();
    o.note(el <= Duration::from_secs(120), format!("single-threaded runtime {:.1}s (limit 120s)", secs(el)));
    o
}

fn merge_tally(into: &mut ConservationTally, t: ConservationTally) {
    into.checked += t.checked;
    into.violations += t.violations;
    into.worst_trace_err = into.worst_trace_err.max(t.worst_trace_err);
    into.worst_frobenius_rel = into.worst_frobenius_rel.max(t.worst_frobenius_rel);
}

fn edge_agreement(tally: &mut ConservationTally) -> Outcome {
    let mut o = Outcome::new();
    let edges = GridSpec::new(-5.0, 2.0, 28).unwrap().edges();
    let start = Instant::now();
    let run = |p: EnsembleParams, tally: &mut ConservationTally| -> DensityEstimate {
        let (acc, t) = simulate_histogram(&p, 201, 2000, &edges, Regime::Edge, Threads::default()).unwrap();
        merge_tally(tally, t);
        acc.finish(Regime::Edge, Some(p)).unwrap()
    };
    let g = run(EnsembleParams::gaussian(400, 2.0).unwrap(), tally);
    let f = run(EnsembleParams::fixed_trace(400, 2.0).unwrap(), tally);
    let mut worst_z = 0.0f64;
    let mut worst_bin = 0;
    for i in 0..g.bins() {
        let se = (g.std_err[i].powi(2) + f.std_err[i].powi(2)).sqrt();
        let diff = (g.height[i] - f.height[i]).abs();
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        if z > worst_z {
            worst_z = z;
            worst_bin = i;
        }
    }
    o.note(
        worst_z <= 3.0,
        format!("(a) gaussian vs fixed-trace: max |diff|/combined SE {worst_z:.2} at t in [{:.2}, {:.2}] (tol 3)", edges[worst_bin], edges[worst_bin + 1]),
    );
    let ai2 = bin_averages(&edges, |t| edge_density_closed(2, t).unwrap().value);
    for (name, d) in [("gaussian", &g), ("fixed-trace", &f)] {
        let mut sup = 0.0f64;
        for (i, c) in d.centers().iter().enumerate() {
            if (-4.0..=1.0).contains(c) {
                sup = sup.max((d.height[i] - ai2[i]).abs());
            }
        }
        o.note(sup <= 0.1, format!("(b) {name} vs Ai_2 on [-4, 1]: sup |diff| {sup:.4} (tol 0.1)"));
    }
    let el = start.elapsed();
    o.note(el <= Duration::from_secs(600), format!("runtime {:.1}s (limit 600s)", secs(el)));
    o
}

fn remark_identity() -> Outcome {
    let mut o = Outcome::new();
    o.report(&edge_remark_beta2());
    o.report(&edge_remark_routes(&QuadratureControls::default()));
    let r = edge_remark_beta4(&QuadratureControls::default());
    o.report(&r);
    o.lines.push(format!(
        "        beta=4 at x=0: quadrature {} +- {}, closed form {}, ratio {}",
        r.details["quadrature_density"], r.details["error_estimate"], r.details["closed_form"], r.details["ratio"]
    ));
    o
}

fn integral_equation() -> Outcome {
    let mut o = Outcome::new();
    for (n, beta) in [(2, 1.0), (2, 2.0), (2, 4.0), (3, 2.0)] {
        o.report(&integral_eq_check(n, beta));
    }
    o
}

fn stieltjes() -> Outcome {
    let mut o = Outcome::new();
    let r = stieltjes_check(&VerifyOptions { seed: 301, ..Default::default() });
    o.report(&r);
    o.lines.push(format!("        {}", r.details));
    o
}

fn density_bound() -> Outcome {
    let mut o = Outcome::new();
    for (beta, seed) in [(1.0, 401u64), (2.0, 402), (4.0, 403)] {
        o.report(&bound_mc_check(20, beta, 10_000, seed, Threads::default()));
    }
    let r = bound_constants_check(&[1.0, 2.0, 4.0]);
    o.report(&r);
    for row in r.details["rows"].as_array().into_iter().flatten() {
        o.lines.push(format!("        beta={} C_beta={} gaps={}", row["beta"], row["c_beta"], row["gaps"]));
    }
    o
}

fn moment_equivalence() -> Outcome {
    let mut o = Outcome::new();
    for (n, seed) in [(10usize, 501u64), (40, 502)] {
        let r = moment_ratio_check(n, 2.0, 200_000, seed, Threads::default());
        o.report(&r);
        let m = &r.details;
        o.lines.push(format!(
            "        N={n}: MC ratio {} +- {}, stated ratio {}, radial ratio {} (z {})",
            m["mc_ratio"], m["mc_ratio_std_err"], m["exact_ratio"], m["radial_ratio"], m["z_radial"]
        ));
    }
    let r = moment_exact_check();
    o.report(&r);
    o.lines.push(format!("        N=100 s=4: {} ; s=2 ladder N=10,40,160: {}", r.details["ratio"], r.details["ladder_s2"]));
    o
}

fn eigensolver(tally: &ConservationTally) -> Outcome {
    let mut o = Outcome::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(801);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s: Vec<f64> = (0..19).map(|_| StandardNormal.sample(&mut rng)).collect();
        let t = TridiagonalSymmetric::new(d, s).unwrap();
        let a = eigenvalues(&t).unwrap();
        let b = eigenvalues_bisect(&t, 1e-14).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
    }
    o.note(worst <= 1e-10, format!("QL vs bisection on 100 random 20x20: max |diff| {worst:.2e} (tol 1e-10)"));
    o.note(
        tally.violations == 0 && tally.checked > 0,
        format!(
            "conservation on {} replicates of criteria 1-2: {} violations, worst trace err {:.2e}, worst Frobenius rel {:.2e}",
            tally.checked, tally.violations, tally.worst_trace_err, tally.worst_frobenius_rel
        ),
    );
    o
}

fn airy_kernel() -> Outcome {
    let mut o = Outcome::new();
    let ai0 = 1.0 / (3f64.powf(2.0 / 3.0) * libm::tgamma(2.0 / 3.0));
    let aip0 = -1.0 / (3f64.powf(1.0 / 3.0) * libm::tgamma(1.0 / 3.0));
    let a = airy(0.0);
    let e = (a.ai - ai0).abs().max((a.ai_prime - aip0).abs());
    o.note(e <= 1e-12, format!("Ai(0), Ai'(0) vs Gamma closed forms: max err {e:.2e} (tol 1e-12)"));
    let h = 1e-3;
    let mut worst = 0.0f64;
    for i in 0..=400 {
        let x = -10.0 + 0.05 * i as f64;
        let f = |k: f64| airy_ai(x + k * h);
        let second = (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h);
        worst = worst.max((second - x * f(0.0)).abs());
    }
    o.note(worst <= 1e-8, format!("ODE residual Ai'' - x Ai on [-10, 10] (5-point stencil, h=1e-3): {worst:.2e} (tol 1e-8)"));
    let ctrl = AdaptiveControls { abs_tol: 1e-14, rel_tol: 1e-13, max_segments: 2000 };
    let q = integrate(airy_ai, 0.0, 40.0, &[2.0, 8.0], ctrl);
    let e = (q.value - 1.0 / 3.0).abs();
    o.note(e <= 1e-9 && q.converged, format!("int_0^inf Ai by adaptive quadrature: {:.15} err {e:.2e} (tol 1e-9)", q.value));
    o
}

fn main() {
    let t0 = Instant::now();
    let mut tally = ConservationTally::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "semicircle law (fixed trace, N=200)", semicircle_law(&mut tally)));
    results.push((2, "edge agreement (beta=2, N=400)", edge_agreement(&mut tally)));
    results.push((3, "edge remark identity", remark_identity()));
    results.push((4, "integral equation", integral_equation()));
    results.push((5, "Stieltjes maximum", stieltjes()));
    results.push((6, "density upper bound", density_bound()));
    results.push((7, "moment equivalence", moment_equivalence()));
    results.push((8, "eigensolver", eigensolver(&tally)));
    results.push((9, "Airy kernel", airy_kernel()));

    let mut failed = Vec::new();
    for (k, name, o) in &results {
        println!("{} criterion {k}: {name}", if o.pass { "PASS" } else { "FAIL" });
        for l in &o.lines {
            println!("{l}");
        }
        if !o.pass {
            failed.push(*k);
        }
    }
    println!("acceptance finished in {:.1}s; failed criteria: {failed:?}", secs(t0.elapsed()));
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
