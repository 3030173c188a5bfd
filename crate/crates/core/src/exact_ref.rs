//! Exact references: partition functions, small-N level densities by direct
//! quadrature, the radial integral equation linking the Gaussian and
//! fixed-trace densities, the Stieltjes maximum of the Vandermonde, and the
//! finite-N density bound for the fixed-trace ensemble.
//!
//! Fixed-trace partition functions use the surface measure on the trace
//! sphere, so the unit-strength density is the marginal of a probability
//! measure on the sphere and integrates to one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::{n_beta, EnsembleKind, Strength, TridiagonalSymmetric};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, AdaptiveControls};
use crate::tridiag_eig::eigenvalues;

/// `sign * exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub log_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub fn from_log(log_abs: f64) -> Self {
        Self { log_abs, sign: 1 }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self { log_abs: f64::NEG_INFINITY, sign: 0 }
        } else {
            Self { log_abs: x.abs().ln(), sign: if x > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.log_abs.exp(),
        }
    }

    pub fn mul(self, other: Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self { log_abs: f64::NEG_INFINITY, sign: 0 };
        }
        Self { log_abs: self.log_abs + other.log_abs, sign: self.sign * other.sign }
    }

    pub fn div(self, other: Self) -> Self {
        Self { log_abs: self.log_abs - other.log_abs, sign: self.sign * other.sign }
    }
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta must be finite and > 0, got {beta}")))
    }
}

/// `Z = (2 pi)^{N/2} prod_{j=1}^N Gamma(1 + j beta/2) / Gamma(1 + beta/2)`.
pub fn log_z_beta_he(n: usize, beta: f64) -> Result<LogValue> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    check_beta(beta)?;
    let mut log = 0.5 * n as f64 * (2.0 * PI).ln();
    for j in 1..=n {
        log += lgamma(1.0 + 0.5 * j as f64 * beta) - lgamma(1.0 + 0.5 * beta);
    }
    Ok(LogValue::from_log(log))
}

/// `C_{N beta} = Gamma(N_beta/2) 2^{N_beta/2 - 1}`, the radial normalization.
pub fn log_c_radial(n: usize, beta: f64) -> f64 {
    let nb = n_beta(n, beta);
    lgamma(0.5 * nb) + (0.5 * nb - 1.0) * 2f64.ln()
}

/// Fixed-trace partition function on the sphere `sum x^2 = r^2` with the
/// surface measure. The unit case is `Z_HE / C_{N beta}`; strength `r` adds
/// `r^{N_beta - 1}`.
pub fn log_z_fte(n: usize, beta: f64, strength: Strength) -> Result<LogValue> {
    if n < 2 {
        return Err(Error::Unsupported("fixed-trace partition function needs n >= 2".into()));
    }
    let he = log_z_beta_he(n, beta)?;
    let r_sq = strength.radius_sq(n);
    let log = he.log_abs - log_c_radial(n, beta) + 0.5 * (n_beta(n, beta) - 1.0) * r_sq.ln();
    Ok(LogValue::from_log(log))
}

/// Pointwise density values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub x: Vec<f64>,
    pub value: Vec<f64>,
    /// Largest quadrature error estimate over the grid.
    pub max_error: f64,
    pub converged: bool,
}

fn tight() -> AdaptiveControls {
    AdaptiveControls { abs_tol: 1e-13, rel_tol: 1e-12, max_segments: 4000 }
}

fn abs_pow(x: f64, beta: f64) -> f64 {
    if beta == 2.0 {
        x * x
    } else {
        x.abs().powf(beta)
    }
}

/// Unnormalized angular integrand data for the unit-sphere densities.
fn unit_fte_unnormalized(n: usize, beta: f64, x: f64) -> (f64, f64, bool) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0, true);
    }
    let y = (1.0 - x * x).sqrt();
    match n {
        2 => ((abs_pow(x - y, beta) + abs_pow(x + y, beta)) / y, 0.0, true),
        3 => {
            let f = |phi: f64| {
                let (s, c) = phi.sin_cos();
                let (b, d) = (y * c, y * s);
                abs_pow(x - b, beta) * abs_pow(x - d, beta) * abs_pow(b - d, beta)
            };
            let mut breaks = vec![0.25 * PI, 1.25 * PI];
            let q = x / y;
            if q.abs() <= 1.0 {
                let a = q.acos();
                let s = q.asin();
                for phi in [a, 2.0 * PI - a, s.rem_euclid(2.0 * PI), PI - s] {
                    breaks.push(phi);
                }
            }
            let r = integrate(f, 0.0, 2.0 * PI, &breaks, tight());
            (r.value, r.error, r.converged)
        }
        _ => unreachable!(),
    }
}

/// Unit-strength fixed-trace density at `x`, `n` in {2, 3}.
pub fn fte_unit_density(n: usize, beta: f64, x: f64) -> Result<(f64, f64, bool)> {
    check_small_n(n)?;
    check_beta(beta)?;
    let z = log_z_fte(n, beta, Strength::Unit)?.value();
    let (v, e, ok) = unit_fte_unnormalized(n, beta, x);
    Ok((v / z, e / z, ok))
}

/// Gaussian level density at `x`, `n` in {2, 3}.
pub fn gaussian_density(n: usize, beta: f64, x: f64) -> Result<(f64, f64, bool)> {
    check_small_n(n)?;
    check_beta(beta)?;
    let z = log_z_beta_he(n, beta)?.value();
    let reach = 14.0 + x.abs();
    let g = (-0.5 * x * x).exp();
    let r = match n {
        2 => integrate(|t| abs_pow(x - t, beta) * (-0.5 * t * t).exp(), -reach, reach, &[x], tight()),
        _ => {
            let mut inner_err = 0.0f64;
            let mut inner_ok = true;
            let outer = integrate(
                |s| {
                    let inner = integrate(
                        |t| abs_pow(x - t, beta) * abs_pow(s - t, beta) * (-0.5 * t * t).exp(),
                        -reach,
                        reach,
                        &[x, s],
                        AdaptiveControls { abs_tol: 1e-14, rel_tol: 1e-12, max_segments: 2000 },
                    );
                    inner_err = inner_err.max(inner.error);
                    inner_ok &= inner.converged;
                    abs_pow(x - s, beta) * (-0.5 * s * s).exp() * inner.value
                },
                -reach,
                reach,
                &[x],
                AdaptiveControls { abs_tol: 1e-12, rel_tol: 1e-11, max_segments: 2000 },
            );
            crate::quadrature::Integral {
                value: outer.value,
                error: outer.error + 2.0 * reach * inner_err,
                converged: outer.converged && inner_ok,
            }
        }
    };
    Ok((g * r.value / z, g * r.error / z, r.converged))
}

fn check_small_n(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("exact densities are implemented for n in {{2, 3}}, got {n}")))
    }
}

/// Exact level density on `x_grid`. Fixed-trace densities use the canonical
/// strength `r^2 = n(n-1)/2` unless `strength` says otherwise.
pub fn exact_density_small_n(n: usize, beta: f64, kind: EnsembleKind, strength: Strength, x_grid: &[f64]) -> Result<DensityCurve> {
    check_small_n(n)?;
    check_beta(beta)?;
    let r = strength.radius_sq(n).sqrt();
    let mut value = Vec::with_capacity(x_grid.len());
    let mut max_error = 0.0f64;
    let mut converged = true;
    for &x in x_grid {
        let (v, e, ok) = match kind {
            EnsembleKind::Gaussian => gaussian_density(n, beta, x)?,
            EnsembleKind::FixedTrace => {
                let (v, e, ok) = fte_unit_density(n, beta, x / r)?;
                (v / r, e / r, ok)
            }
        };
        value.push(v);
        max_error = max_error.max(e);
        converged &= ok;
    }
    Ok(DensityCurve { x: x_grid.to_vec(), value, max_error, converged })
}

/// `rho_1(x) = r rho_r(r x)` with `r^2 = n(n-1)/2`.
pub fn rescale_strength1(curve: &DensityCurve, n: usize) -> DensityCurve {
    let r = Strength::Canonical.radius_sq(n).sqrt();
    DensityCurve {
        x: curve.x.iter().map(|x| x / r).collect(),
        value: curve.value.iter().map(|v| v * r).collect(),
        max_error: curve.max_error * r,
        converged: curve.converged,
    }
}

/// Inverse of [`rescale_strength1`].
pub fn rescale_to_canonical(curve: &DensityCurve, n: usize) -> DensityCurve {
    let r = Strength::Canonical.radius_sq(n).sqrt();
    DensityCurve {
        x: curve.x.iter().map(|x| x * r).collect(),
        value: curve.value.iter().map(|v| v / r).collect(),
        max_error: curve.max_error / r,
        converged: curve.converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEquationCheck {
    pub max_residual: f64,
    pub worst_x: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub converged: bool,
}

/// Right side `(1/C) int_{|x|}^inf e^{-r^2/2} r^{N_beta - 2} rho_1(x / r) dr`,
/// with `r = |x| + w^2` to absorb the edge behaviour of `rho_1` at `r = |x|`.
pub fn integral_equation_rhs(n: usize, beta: f64, x: f64) -> Result<(f64, bool)> {
    check_small_n(n)?;
    check_beta(beta)?;
    let nb = n_beta(n, beta);
    let log_c = log_c_radial(n, beta);
    let z1 = log_z_fte(n, beta, Strength::Unit)?.value();
    let ax = x.abs();
    let w_max = (40.0f64).sqrt();
    let mut breaks = Vec::new();
    if ax > 0.0 {
        // |x/r| = 1/sqrt2 is where x_1 meets another coordinate at n = 2.
        breaks.push(((2f64.sqrt() - 1.0) * ax).sqrt());
        if n == 3 {
            breaks.push(((3f64.sqrt() - 1.0) * ax).sqrt());
        }
    }
    let mut ok = true;
    let r = integrate(
        |w| {
            let r = ax + w * w;
            if r <= 0.0 {
                return 0.0;
            }
            let (rho, _, conv) = unit_fte_unnormalized(n, beta, x / r);
            ok &= conv;
            2.0 * w * ((nb - 2.0) * r.ln() - 0.5 * r * r - log_c).exp() * rho / z1
        },
        0.0,
        w_max,
        &breaks,
        AdaptiveControls { abs_tol: 1e-12, rel_tol: 1e-11, max_segments: 2000 },
    );
    Ok((r.value, ok && r.converged))
}

/// Maximum absolute difference between the Gaussian density and the radial
/// integral over the unit-strength fixed-trace density.
pub fn verify_integral_equation(n: usize, beta: f64, x_grid: &[f64]) -> Result<IntegralEquationCheck> {
    check_small_n(n)?;
    if x_grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut converged = true;
    let (mut max_residual, mut worst_x) = (0.0f64, x_grid[0]);
    for &x in x_grid {
        let (l, _, okl) = gaussian_density(n, beta, x)?;
        let (r, okr) = integral_equation_rhs(n, beta, x)?;
        converged &= okl && okr;
        if (l - r).abs() > max_residual {
            max_residual = (l - r).abs();
            worst_x = x;
        }
        lhs.push(l);
        rhs.push(r);
    }
    Ok(IntegralEquationCheck { max_residual, worst_x, lhs, rhs, converged })
}

/// Zeros of the physicists' Hermite polynomial `H_n`.
pub fn hermite_zeros(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let off: Vec<f64> = (1..n).map(|j| (j as f64 / 2.0).sqrt()).collect();
    let t = TridiagonalSymmetric::new(vec![0.0; n], off)?;
    Ok(eigenvalues(&t)?.values)
}

/// `log prod_{j<k} (x_j - x_k)^2`.
pub fn log_vandermonde_sq(x: &[f64]) -> LogValue {
    let mut log = 0.0;
    for j in 0..x.len() {
        for k in (j + 1)..x.len() {
            let d = (x[j] - x[k]).abs();
            if d == 0.0 {
                return LogValue::from_f64(0.0);
            }
            log += 2.0 * d.ln();
        }
    }
    LogValue::from_log(log)
}

/// Maximum of the squared Vandermonde on the ball `sum x^2 <= n(n-1)/2`:
/// `2^{-n(n-1)/2} prod_{v=1}^n v^v`.
pub fn log_vandermonde_sq_max(n: usize) -> Result<LogValue> {
    if n < 2 {
        return Err(invalid("n must be >= 2"));
    }
    let nf = n as f64;
    let s: f64 = (1..=n).map(|v| v as f64 * (v as f64).ln()).sum();
    Ok(LogValue::from_log(-0.5 * nf * (nf - 1.0) * 2f64.ln() + s))
}

/// `ln C_beta = 1 - ln sqrt(2 pi) + beta/2 - (beta/2) ln(beta/2) + ln Gamma(1 + beta/2)`.
pub fn ln_c_beta(beta: f64) -> f64 {
    1.0 - (2.0 * PI).sqrt().ln() + 0.5 * beta - 0.5 * beta * (0.5 * beta).ln() + lgamma(1.0 + 0.5 * beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_beta: f64,
    /// `(1/N) ln g_{N beta}`.
    pub w_n_beta: f64,
    pub g_n_beta: LogValue,
}

/// Finite-N constant `g_{N beta}` of the fixed-trace density bound,
/// assembled in the log domain.
pub fn bound_constants(n: usize, beta: f64) -> Result<BoundConstants> {
    if n < 3 {
        return Err(invalid("the density bound needs n >= 3"));
    }
    check_beta(beta)?;
    let nf = n as f64;
    let nb = n_beta(n, beta);
    let r_sq = 0.5 * nf * (nf - 1.0);
    let sum_vlogv: f64 = (1..=n).map(|v| v as f64 * (v as f64).ln()).sum();
    let mut log = 0.5 * beta * sum_vlogv - 0.5 * PI.ln() - lgamma(0.5 * (nf - 1.0)) + 0.5 * (nf - 2.0) * r_sq.ln()
        + lgamma(0.5 * nb)
        - 0.5 * (nb - 1.0) * r_sq.ln();
    for j in 1..=n {
        log += lgamma(1.0 + 0.5 * beta) - lgamma(1.0 + 0.5 * j as f64 * beta);
    }
    Ok(BoundConstants { c_beta: ln_c_beta(beta).exp(), w_n_beta: log / nf, g_n_beta: LogValue::from_log(log) })
}

/// Bound on the canonical fixed-trace density at `sqrt(n(n-1)/2) x`:
/// `g_{N beta} (1 - x^2)^{(N-2)/2}`.
pub fn density_upper_bound(n: usize, beta: f64, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(invalid(format!("bulk coordinate must lie in [-1, 1], got {x}")));
    }
    let c = bound_constants(n, beta)?;
    let e = 0.5 * (n as f64 - 2.0);
    Ok((c.g_n_beta.log_abs + e * (1.0 - x * x).ln()).exp())
}

/// CDF of the eigenvalue gap at `n = 2`, `Gaussian kind`, whose density is
/// proportional to `g^beta e^{-g^2/4}`.
pub fn gap_cdf_n2(beta: f64, g: f64) -> Result<f64> {
    check_beta(beta)?;
    if g <= 0.0 {
        return Ok(0.0);
    }
    let log_norm = beta * 2f64.ln() + lgamma(0.5 * (beta + 1.0));
    let r = integrate(|s| (beta * s.ln() - 0.25 * s * s - log_norm).exp(), 0.0, g, &[], tight());
    Ok(r.value.min(1.0))
}
