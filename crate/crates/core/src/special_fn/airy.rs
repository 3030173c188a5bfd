//! Airy function Ai and its derivative on the real line.
//!
//! * `|x| <= 2`: Maclaurin series.
//! * `2 < |x| <= 8`: the Maclaurin series re-expanded as Taylor series of the
//!   Airy equation, walked in steps of at most 0.5. On the positive side the
//!   walk starts from the asymptotic value at 8 and moves towards the origin,
//!   the direction in which Ai dominates Bi, so no cancellation builds up.
//! * `|x| > 8`: asymptotic expansions, truncated at their smallest term.

use std::f64::consts::PI;

use crate::quadrature::{composite, gauss_legendre, GaussRule};

/// `Ai(0) = 3^{-2/3} / Gamma(2/3)`.
pub const AI_ZERO: f64 = 0.355_028_053_887_817_239_260_063_186_004_183_2;
/// `Ai'(0) = -3^{-1/3} / Gamma(1/3)`.
pub const AI_PRIME_ZERO: f64 = -0.258_819_403_792_806_798_405_183_560_189_204;

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_SWITCH: f64 = 8.0;
const ACCURACY_LIMIT: f64 = 200.0;
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryAccuracy {
    Full,
    /// Outside `|x| <= 200`: the oscillatory phase has lost precision or the
    /// value has underflowed.
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryEval {
    pub ai: f64,
    pub ai_prime: f64,
    pub accuracy: AiryAccuracy,
}

/// Ai and Ai' together, with an accuracy flag.
pub fn airy(x: f64) -> AiryEval {
    if !x.is_finite() {
        return AiryEval { ai: f64::NAN, ai_prime: f64::NAN, accuracy: AiryAccuracy::Degraded };
    }
    let (ai, ai_prime) = if x.abs() <= SERIES_LIMIT {
        maclaurin(x)
    } else if x > ASYMPTOTIC_SWITCH {
        asymptotic_positive(x)
    } else if x < -ASYMPTOTIC_SWITCH {
        asymptotic_negative(-x)
    } else if x > 0.0 {
        let start = asymptotic_positive(ASYMPTOTIC_SWITCH);
        taylor_walk(ASYMPTOTIC_SWITCH, start, x)
    } else {
        let start = maclaurin(-SERIES_LIMIT);
        taylor_walk(-SERIES_LIMIT, start, x)
    };
    let accuracy = if x.abs() > ACCURACY_LIMIT { AiryAccuracy::Degraded } else { AiryAccuracy::Full };
    AiryEval { ai, ai_prime, accuracy }
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).ai
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).ai_prime
}

/// `Ai^{(m)}(x)` for `m = 0..=order`, from `Ai'' = x Ai` and its derivatives
/// `Ai^{(k+2)} = x Ai^{(k)} + k Ai^{(k-1)}`.
pub fn airy_derivatives(x: f64, order: usize) -> Vec<f64> {
    let AiryEval { ai, ai_prime, .. } = airy(x);
    let mut d = vec![ai, ai_prime];
    for k in 0..order.saturating_sub(1) {
        let prev = if k == 0 { 0.0 } else { d[k - 1] };
        d.push(x * d[k] + k as f64 * prev);
    }
    d.truncate(order + 1);
    d
}

fn maclaurin(x: f64) -> (f64, f64) {
    // Ai = Ai(0) f + Ai'(0) g with
    // f = sum 3^k (1/3)_k x^{3k} / (3k)!, g = sum 3^k (2/3)_k x^{3k+1} / (3k+1)!.
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    let (mut tdf, mut tdg) = (0.0, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tdf = if k == 1 { x * x / 2.0 } else { tdf * x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0)) };
        tdg *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        g += tg;
        df += tdf;
        dg += tdg;
        let small = |t: f64, s: f64| t.abs() <= 1e-18 * s.abs().max(1e-300);
        if small(tf, f) && small(tg, g) && small(tdf, df) && small(tdg, dg) {
            break;
        }
    }
    (AI_ZERO * f + AI_PRIME_ZERO * g, AI_ZERO * df + AI_PRIME_ZERO * dg)
}

/// Integrates `y'' = x y` from `x0` (where `(y, y')` is known) to `x1` by
/// exact Taylor steps.
fn taylor_walk(x0: f64, start: (f64, f64), x1: f64) -> (f64, f64) {
    let steps = ((x1 - x0).abs() / MAX_STEP).ceil().max(1.0) as usize;
    let h = (x1 - x0) / steps as f64;
    let (mut y, mut dy) = start;
    let mut x = x0;
    let mut a = Vec::with_capacity(64);
    for _ in 0..steps {
        a.clear();
        a.push(y);
        a.push(dy);
        a.push(0.5 * x * y);
        let scale = y.abs() + dy.abs();
        let (mut val, mut der) = (y + dy * h + a[2] * h * h, dy + 2.0 * a[2] * h);
        let mut hp = h * h; // h^{m-1} for the coefficient a_m being added
        let mut quiet = 0;
        for n in 1..80usize {
            // (n+2)(n+1) a_{n+2} = x a_n + a_{n-1}
            let next = (x * a[n] + a[n - 1]) / (((n + 2) * (n + 1)) as f64);
            a.push(next);
            let m = n + 2;
            let dterm = m as f64 * next * hp;
            let term = next * hp * h;
            hp *= h;
            val += term;
            der += dterm;
            if term.abs() + dterm.abs() <= 1e-18 * scale.max(1e-300) {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        y = val;
        dy = der;
        x += h;
    }
    (y, dy)
}

fn u_coefficient(k: usize, prev: f64) -> f64 {
    let k = k as f64;
    prev * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / (216.0 * k * (2.0 * k - 1.0))
}

/// `(u_k, v_k)` up to the smallest-term cutoff for argument `zeta`.
fn asymptotic_coefficients(zeta: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(1.0, 1.0)];
    let mut u = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        u = u_coefficient(k, u);
        let v = -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * u;
        let size = u.abs().max(v.abs()) / zeta.powi(k as i32);
        if size >= last || size < 1e-18 {
            break;
        }
        last = size;
        out.push((u, v));
    }
    out
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let coeffs = asymptotic_coefficients(zeta);
    let (mut su, mut sv) = (0.0, 0.0);
    let mut zp = 1.0;
    for (k, (u, v)) in coeffs.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        su += sign * u / zp;
        sv += sign * v / zp;
        zp *= zeta;
    }
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (e / q * su, -e * q * sv)
}

fn asymptotic_negative(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let coeffs = asymptotic_coefficients(zeta);
    // Even terms feed P, R; odd terms feed Q, S, with alternating signs in pairs.
    let (mut p, mut q, mut r, mut s) = (0.0, 0.0, 0.0, 0.0);
    let mut zp = 1.0;
    for (k, (u, v)) in coeffs.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * u / zp;
            r += sign * v / zp;
        } else {
            q += sign * u / zp;
            s += sign * v / zp;
        }
        zp *= zeta;
    }
    let (sin_z, cos_z) = zeta.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (sin_t, cos_t) = (h * (sin_z + cos_z), h * (cos_z - sin_z));
    let c = 1.0 / PI.sqrt();
    let q4 = z.powf(0.25);
    let ai = c / q4 * (sin_t * p - cos_t * q);
    let ai_prime = -c * q4 * (cos_t * r + sin_t * s);
    (ai, ai_prime)
}

fn legendre20() -> &'static GaussRule {
    static RULE: std::sync::OnceLock<GaussRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// `int_x^inf Ai(t) dt`.
///
/// For `x >= 1` the integral is evaluated on the vertical line through the
/// saddle point, `v = sqrt(x) + i s`, where it becomes a Gaussian-damped
/// integral with no cancellation. Below 1, `int_x^1 Ai` is added by composite
/// Gauss–Legendre quadrature.
pub fn airy_tail(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 1.0 {
        return tail_on_saddle_line(x);
    }
    let rule = legendre20();
    let panels = ((1.0 - x) / 0.5).ceil() as usize;
    tail_on_saddle_line(1.0) + composite(rule, x, 1.0, panels, airy_ai)
}

fn tail_on_saddle_line(x: f64) -> f64 {
    let rx = x.sqrt();
    let zeta = 2.0 / 3.0 * x * rx;
    let prefactor = (-zeta).exp() / PI;
    if prefactor == 0.0 {
        return 0.0;
    }
    // (1/pi) e^{-zeta} int_0^inf e^{-sqrt(x) s^2} [sqrt(x) cos(s^3/3) - s sin(s^3/3)] / (x + s^2) ds
    let s_max = (42.0 / rx).sqrt();
    let panels = (s_max / 0.25).ceil() as usize;
    let integrand = |s: f64| {
        let (sn, cs) = (s * s * s / 3.0).sin_cos();
        (-rx * s * s).exp() * (rx * cs - s * sn) / (x + s * s)
    };
    prefactor * composite(legendre20(), 0.0, s_max, panels, integrand)
}
