//! Moments of the tridiagonal entries in the Gaussian ensemble and in its
//! fixed-trace counterpart on the sphere `tr H^2 = 2L`, `L = N_beta / 2`.
//!
//! Entries are taken exactly as sampled (`a_j ~ N(0, 1)`, `sqrt2 b_j ~ chi_{j beta}`).
//! Exponent vectors are indexed from the bottom-right corner: `eta_b[0]`
//! belongs to `b_1`, the entry with `chi_beta`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{beta_hermite_from_rng, n_beta, EnsembleKind, EnsembleParams, SampleSeed, TridiagonalSymmetric};
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, AdaptiveControls, CompensatedSum};
use crate::simulate::Threads;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentIndex {
    pub eta_a: Vec<u32>,
    pub eta_b: Vec<u32>,
}

impl MomentIndex {
    pub fn new(n: usize, eta_a: Vec<u32>, eta_b: Vec<u32>) -> Result<Self> {
        if n == 0 || eta_a.len() != n || eta_b.len() != n - 1 {
            return Err(invalid(format!(
                "moment index for n={n} needs {n} diagonal and {} off-diagonal exponents (got {} and {})",
                n.saturating_sub(1),
                eta_a.len(),
                eta_b.len()
            )));
        }
        Ok(Self { eta_a, eta_b })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, vec![0; n], vec![0; n.saturating_sub(1)])
    }

    /// `a_j^e` alone, `j` counted from the bottom starting at 1.
    pub fn diagonal_power(n: usize, j: usize, e: u32) -> Result<Self> {
        let mut idx = Self::zero(n)?;
        let slot = idx.eta_a.get_mut(j.wrapping_sub(1)).ok_or_else(|| invalid(format!("diagonal index {j} out of 1..={n}")))?;
        *slot = e;
        Ok(idx)
    }

    /// `b_j^e` alone, `j` counted from the bottom starting at 1.
    pub fn subdiagonal_power(n: usize, j: usize, e: u32) -> Result<Self> {
        let mut idx = Self::zero(n)?;
        let slot = idx.eta_b.get_mut(j.wrapping_sub(1)).ok_or_else(|| invalid(format!("subdiagonal index {j} out of 1..{n}")))?;
        *slot = e;
        Ok(idx)
    }

    pub fn n(&self) -> usize {
        self.eta_a.len()
    }

    /// Total degree.
    pub fn s(&self) -> u32 {
        self.eta_a.iter().sum::<u32>() + self.eta_b.iter().sum::<u32>()
    }

    /// True when some diagonal exponent is odd, so the moment vanishes by
    /// symmetry of the normal law.
    pub fn sign_symmetric(&self) -> bool {
        self.eta_a.iter().any(|e| e % 2 == 1)
    }

    pub fn evaluate(&self, t: &TridiagonalSymmetric) -> f64 {
        let mut p = 1.0;
        for (j, &e) in self.eta_a.iter().enumerate() {
            if e > 0 {
                p *= t.a_from_bottom(j + 1).powi(e as i32);
            }
        }
        for (j, &e) in self.eta_b.iter().enumerate() {
            if e > 0 {
                p *= t.b_from_bottom(j + 1).powi(e as i32);
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_reps: u64,
    pub sign_symmetric: bool,
}

/// `L = N/2 + beta N (N-1)/4`.
pub fn half_trace_dof(n: usize, beta: f64) -> f64 {
    0.5 * n_beta(n, beta)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).collect::<CompensatedSum>().value() / (m - 1.0).max(1.0);
    (mean, (var / m).sqrt())
}

/// Per-replicate `(X, Y)`: the moment after rescaling to `tr H^2 = 2L`, and
/// before.
fn paired_samples(n: usize, beta: f64, idx: &MomentIndex, n_reps: u64, seed: u64, threads: Threads) -> Result<Vec<(f64, f64)>> {
    let two_l = 2.0 * half_trace_dof(n, beta);
    let s = idx.s() as i32;
    let one = |r: u64| {
        let mut rng = SampleSeed::new(seed, r).rng();
        let h = beta_hermite_from_rng(n, beta, &mut rng);
        let y = idx.evaluate(&h);
        let c = (two_l / h.trace_sq()).sqrt();
        (c.powi(s) * y, y)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        crate::simulate::run_in_pool(threads, || (0..n_reps).into_par_iter().map(one).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok((0..n_reps).map(one).collect())
    }
}

fn check_moment_args(params: &EnsembleParams, idx: &MomentIndex, n_reps: u64) -> Result<()> {
    params.validate()?;
    if idx.n() != params.n {
        return Err(invalid(format!("moment index is for n={}, ensemble has n={}", idx.n(), params.n)));
    }
    if n_reps < 100 {
        return Err(invalid(format!("moment estimates need at least 100 replicates, got {n_reps}")));
    }
    Ok(())
}

/// Monte-Carlo moment. The fixed-trace kind rescales each Gaussian sample to
/// `tr H^2 = 2L`.
pub fn moment_mc(params: &EnsembleParams, idx: &MomentIndex, n_reps: u64, seed: u64, threads: Threads) -> Result<MomentEstimate> {
    check_moment_args(params, idx, n_reps)?;
    let pairs = paired_samples(params.n, params.beta, idx, n_reps, seed, threads)?;
    let xs: Vec<f64> = match params.kind {
        EnsembleKind::Gaussian => pairs.iter().map(|p| p.1).collect(),
        EnsembleKind::FixedTrace => pairs.iter().map(|p| p.0).collect(),
    };
    let (mean, std_err) = mean_and_se(&xs);
    Ok(MomentEstimate { mean, std_err, n_reps, sign_symmetric: idx.sign_symmetric() })
}

/// Mean of `tr H^2` over Gaussian samples; equals `2L` in expectation.
pub fn trace_sq_mc(n: usize, beta: f64, n_reps: u64, seed: u64) -> Result<MomentEstimate> {
    EnsembleParams::gaussian(n, beta)?;
    let xs: Vec<f64> = (0..n_reps)
        .map(|r| beta_hermite_from_rng(n, beta, &mut SampleSeed::new(seed, r).rng()).trace_sq())
        .collect();
    let (mean, std_err) = mean_and_se(&xs);
    Ok(MomentEstimate { mean, std_err, n_reps, sign_symmetric: false })
}

fn check_ratio_args(n: usize, beta: f64, s: u32) -> Result<()> {
    if n < 2 {
        return Err(invalid("moment ratio needs n >= 2"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    if s % 2 == 1 {
        return Err(invalid(format!("moment ratio is defined for even s, got {s}")));
    }
    Ok(())
}

/// `L^{s/2} Gamma(L + 1) / Gamma(L + s/2 + 1)`, the moment ratio
/// in its stated closed form. See `moment_ratio_radial` for the one the
/// sampler actually follows.
pub fn moment_ratio_exact(n: usize, beta: f64, s: u32) -> Result<f64> {
    check_ratio_args(n, beta, s)?;
    Ok(pochhammer_ratio(half_trace_dof(n, beta), 1.0, s / 2))
}

/// `L^{s/2} Gamma(L) / Gamma(L + s/2)`, the ratio implied by the radial
/// factorization `tr H^2 ~ 2 Gamma(L)` independent of the direction of `H`.
pub fn moment_ratio_radial(n: usize, beta: f64, s: u32) -> Result<f64> {
    check_ratio_args(n, beta, s)?;
    Ok(pochhammer_ratio(half_trace_dof(n, beta), 0.0, s / 2))
}

/// `prod_{k<h} L / (L + off + k)`, summed in logs to keep `1 - ratio` accurate.
fn pochhammer_ratio(l: f64, off: f64, h: u32) -> f64 {
    (0..h).map(|k| -((off + k as f64) / l).ln_1p()).sum::<f64>().exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEquivalenceReport {
    pub n: usize,
    pub beta: f64,
    pub s: u32,
    pub n_reps: u64,
    pub gaussian: MomentEstimate,
    pub fixed_trace: MomentEstimate,
    pub mc_ratio: f64,
    pub mc_ratio_std_err: f64,
    pub exact_ratio: f64,
    pub radial_ratio: f64,
    /// `|mc - exact| / se` and the same for the radial form.
    pub z_exact: f64,
    pub z_radial: f64,
    pub pass_exact: bool,
    pub pass_radial: bool,
    pub exact_distance_from_one: f64,
    pub skipped: Option<String>,
}

/// Paired Monte-Carlo ratio `M_r / M` (same Gaussian sample before and after
/// rescaling) with a delta-method standard error, compared with both ratio
/// formulas at `3 sigma`.
pub fn verify_moment_equivalence(n: usize, beta: f64, idx: &MomentIndex, n_reps: u64, seed: u64, threads: Threads) -> Result<MomentEquivalenceReport> {
    let params = EnsembleParams::gaussian(n, beta)?;
    check_moment_args(&params, idx, n_reps)?;
    let s = idx.s();
    let exact_ratio = moment_ratio_exact(n, beta, s)?;
    let radial_ratio = moment_ratio_radial(n, beta, s)?;
    let pairs = paired_samples(n, beta, idx, n_reps, seed, threads)?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, sx) = mean_and_se(&xs);
    let (my, sy) = mean_and_se(&ys);
    let sign_symmetric = idx.sign_symmetric();
    let gaussian = MomentEstimate { mean: my, std_err: sy, n_reps, sign_symmetric };
    let fixed_trace = MomentEstimate { mean: mx, std_err: sx, n_reps, sign_symmetric };
    let mut report = MomentEquivalenceReport {
        n,
        beta,
        s,
        n_reps,
        gaussian,
        fixed_trace,
        mc_ratio: f64::NAN,
        mc_ratio_std_err: f64::NAN,
        exact_ratio,
        radial_ratio,
        z_exact: f64::NAN,
        z_radial: f64::NAN,
        pass_exact: false,
        pass_radial: false,
        exact_distance_from_one: (exact_ratio - 1.0).abs(),
        skipped: None,
    };
    if sign_symmetric || my.abs() <= 3.0 * sy {
        report.skipped = Some("Gaussian moment is not bounded away from zero; use even exponents".into());
        return Ok(report);
    }
    let ratio = mx / my;
    let resid: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - ratio * y).collect();
    let (_, se_resid) = mean_and_se(&resid);
    let se = se_resid / my.abs();
    report.mc_ratio = ratio;
    report.mc_ratio_std_err = se;
    report.z_exact = (ratio - exact_ratio).abs() / se;
    report.z_radial = (ratio - radial_ratio).abs() / se;
    report.pass_exact = report.z_exact <= 3.0;
    report.pass_radial = report.z_radial <= 3.0;
    Ok(report)
}

/// Fixed-trace moment at `n = 2` by direct quadrature over the direction of
/// `(a_1, a_2, sqrt2 b)`, whose law on the unit sphere has density
/// proportional to `u_3^{beta - 1}` on the half `u_3 > 0`.
pub fn fixed_trace_moment_n2(beta: f64, idx: &MomentIndex) -> Result<f64> {
    if idx.n() != 2 {
        return Err(invalid("the quadrature guard is for n = 2"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    let (e1, e2, e3) = (idx.eta_a[1] as i32, idx.eta_a[0] as i32, idx.eta_b[0] as i32);
    let ctrl = AdaptiveControls { abs_tol: 1e-13, rel_tol: 1e-11, max_segments: 2000 };
    let pi = std::f64::consts::PI;
    let surface = |g: &dyn Fn(f64, f64, f64) -> f64| {
        integrate(
            |theta: f64| {
                let (st, ct) = theta.sin_cos();
                let inner = integrate(|phi: f64| g(st * phi.cos(), st * phi.sin(), ct), 0.0, 2.0 * pi, &[0.5 * pi, pi, 1.5 * pi], ctrl);
                inner.value * ct.powf(beta - 1.0) * st
            },
            0.0,
            0.5 * pi,
            &[],
            ctrl,
        )
        .value
    };
    let num = surface(&|u1, u2, u3| u1.powi(e1) * u2.powi(e2) * (u3 / 2f64.sqrt()).powi(e3));
    let den = surface(&|_, _, _| 1.0);
    let two_l = 2.0 * half_trace_dof(2, beta);
    Ok(two_l.powf(0.5 * idx.s() as f64) * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_index_is_exactly_one() {
        for kind in [EnsembleKind::Gaussian, EnsembleKind::FixedTrace] {
            let p = EnsembleParams::new(6, 2.0, kind).unwrap();
            let m = moment_mc(&p, &MomentIndex::zero(6).unwrap(), 200, 1, Threads(Some(2))).unwrap();
            assert_eq!(m.mean, 1.0);
            assert_eq!(m.std_err, 0.0);
        }
    }

    #[test]
    fn gaussian_entry_moments() {
        let p = EnsembleParams::gaussian(5, 2.0).unwrap();
        let a = moment_mc(&p, &MomentIndex::diagonal_power(5, 1, 2).unwrap(), 20_000, 3, Threads::default()).unwrap();
        assert!((a.mean - 1.0).abs() <= 3.0 * a.std_err, "{a:?}");
        let b = moment_mc(&p, &MomentIndex::subdiagonal_power(5, 1, 2).unwrap(), 20_000, 4, Threads::default()).unwrap();
        assert!((b.mean - 1.0).abs() <= 3.0 * b.std_err, "{b:?}");
        let b3 = moment_mc(&p, &MomentIndex::subdiagonal_power(5, 3, 2).unwrap(), 20_000, 4, Threads::default()).unwrap();
        assert!((b3.mean - 3.0).abs() <= 3.0 * b3.std_err, "{b3:?}");
        let odd = MomentIndex::diagonal_power(5, 2, 1).unwrap();
        assert!(odd.sign_symmetric());
    }

    #[test]
    fn ratio_formula_values() {
        assert_eq!(moment_ratio_exact(7, 1.5, 0).unwrap(), 1.0);
        assert!((moment_ratio_exact(2, 2.0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let l: f64 = 5000.0;
        assert!((moment_ratio_exact(100, 2.0, 4).unwrap() - l * l / ((l + 1.0) * (l + 2.0))).abs() < 1e-12);
        assert!((moment_ratio_radial(10, 2.0, 2).unwrap() - 1.0).abs() < 1e-13);
        assert!(moment_ratio_exact(10, 2.0, 3).is_err());
        let seq: Vec<f64> = [10, 40, 160].iter().map(|&n| moment_ratio_exact(n, 2.0, 2).unwrap()).collect();
        assert!(seq[0] < seq[1] && seq[1] < seq[2] && seq[2] < 1.0);
    }

    #[test]
    fn stirling_slope_of_log_ratio() {
        // log ratio ~ -s(s+2)/(8L) for the stated form and -s(s-2)/(8L) for the radial one.
        for s in [2u32, 4, 6] {
            let sf = s as f64;
            for n in [400usize, 1600] {
                let l = half_trace_dof(n, 2.0);
                let stated = moment_ratio_exact(n, 2.0, s).unwrap().ln() * l;
                let radial = moment_ratio_radial(n, 2.0, s).unwrap().ln() * l;
                assert!((stated + sf * (sf + 2.0) / 8.0).abs() < 50.0 / l, "s={s} n={n}: {stated}");
                assert!((radial + sf * (sf - 2.0) / 8.0).abs() < 50.0 / l, "s={s} n={n}: {radial}");
            }
        }
    }

    #[test]
    fn quadrature_guard_unitary_pair() {
        let idx = MomentIndex::diagonal_power(2, 1, 2).unwrap();
        assert!((fixed_trace_moment_n2(2.0, &idx).unwrap() - 1.0).abs() < 1e-10);
        let p = EnsembleParams::fixed_trace(2, 2.0).unwrap();
        let m = moment_mc(&p, &idx, 40_000, 8, Threads::default()).unwrap();
        assert!((m.mean - 1.0).abs() <= 3.0 * m.std_err, "{m:?}");
        let b = MomentIndex::subdiagonal_power(2, 1, 2).unwrap();
        let q = fixed_trace_moment_n2(1.0, &b).unwrap();
        let p = EnsembleParams::fixed_trace(2, 1.0).unwrap();
        let m = moment_mc(&p, &b, 40_000, 9, Threads::default()).unwrap();
        assert!((m.mean - q).abs() <= 3.0 * m.std_err, "{m:?} vs {q}");
    }

    #[test]
    fn argument_checks() {
        let p = EnsembleParams::gaussian(3, 2.0).unwrap();
        assert!(moment_mc(&p, &MomentIndex::zero(3).unwrap(), 10, 1, Threads::default()).is_err());
        assert!(moment_mc(&p, &MomentIndex::zero(4).unwrap(), 500, 1, Threads::default()).is_err());
        assert!(MomentIndex::new(3, vec![0; 3], vec![0; 3]).is_err());
        assert!(MomentIndex::diagonal_power(3, 0, 2).is_err());
    }
}
