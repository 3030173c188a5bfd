//! Multiple Airy integrals
//! `K_{n,beta}(x) = -(2 pi i)^{-n} int ... int prod_j e^{v_j^3/3 - x v_j} prod_{k<l} |v_k - v_l|^{4/beta} dv`
//! over the imaginary axis.
//!
//! Sign convention: on `v = i t` the pair factor `(v_k - v_l)^p` equals
//! `i^p |t_k - t_l|^p` for even `p = 4/beta`. We carry the phase
//! `(-1)^{round(p n(n-1)/4)}` for every `p`, which makes the two routes below
//! agree whenever both apply, gives `K_{1,beta} = -Ai` and
//! `K_{2,2} = 2 (Ai'^2 - x Ai^2)`, and the sign `(-1)^{beta-1}` for `n = beta`.
//!
//! Route (a), `p` an even integer: expand the Vandermonde power into monomials
//! and use `(2 pi i)^{-1} int v^m e^{v^3/3 - x v} dv = (-1)^m Ai^{(m)}(x)`.
//!
//! Route (b), anything else: move every variable to `t - i delta`. The
//! integrand only depends on differences apart from the single-variable
//! factors, so the common shift is exact by Cauchy's theorem in the centre of
//! mass. Each factor then carries the Gaussian `e^{-delta t^2}`, and the
//! integral becomes a tensor Gauss–Hermite sum over the ordered sector
//! `t_1 < ... < t_n` times `n!`. A ladder of node counts with Richardson
//! extrapolation handles the `|t_k - t_l|^p` kink when `p` is not even.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{airy_derivatives, EdgeDensityValue};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_hermite, CompensatedSum};

const MAX_QUADRATURE_N: usize = 4;
const MAX_REDUCTION_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[cfg_attr(feature = "cli", derive(clap::ValueEnum))]
pub enum KontsevichRoute {
    /// Reduction when available, quadrature otherwise.
    Auto,
    AiryReduction,
    ContourQuadrature,
}

/// Budget and ladder for the quadrature route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureControls {
    /// Gauss–Hermite nodes per axis at the first ladder level.
    pub nodes: usize,
    /// Number of ladder levels; level `j` uses `nodes * 2^j` nodes per axis.
    pub levels: usize,
    /// Imaginary shift `delta` of the contour.
    pub contour_shift: f64,
    /// Hard cap on integrand evaluations summed over the ladder.
    pub max_evaluations: u64,
    /// Absolute error below which the result counts as converged.
    pub target_error: f64,
}

impl Default for QuadratureControls {
    fn default() -> Self {
        Self { nodes: 24, levels: 3, contour_shift: 1.0, max_evaluations: 60_000_000, target_error: 1e-4 }
    }
}

impl QuadratureControls {
    fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.levels == 0 {
            return Err(invalid("quadrature controls need nodes >= 2 and levels >= 1"));
        }
        if !(self.contour_shift > 0.0 && self.contour_shift.is_finite()) {
            return Err(invalid(format!("contour shift must be > 0, got {}", self.contour_shift)));
        }
        if !(self.target_error > 0.0) {
            return Err(invalid("target error must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KontsevichValue {
    pub value: f64,
    pub error_estimate: f64,
    pub route: KontsevichRoute,
    pub converged: bool,
    pub evaluations: u64,
    /// Raw values per ladder level (quadrature route only).
    pub ladder: Vec<f64>,
}

fn pair_power(beta: f64) -> f64 {
    4.0 / beta
}

fn even_integer(p: f64) -> Option<u32> {
    let r = p.round();
    (r >= 0.0 && (p - r).abs() < 1e-12 && r as u64 % 2 == 0 && r <= 64.0).then_some(r as u32)
}

fn phase_sign(n: usize, p: f64) -> f64 {
    let q = (p * (n * (n.saturating_sub(1))) as f64 / 4.0).round() as i64;
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn kontsevich_k(n: usize, beta: f64, x: f64, ctrl: &QuadratureControls) -> Result<KontsevichValue> {
    kontsevich_k_with(n, beta, x, KontsevichRoute::Auto, ctrl)
}

pub fn kontsevich_k_with(
    n: usize,
    beta: f64,
    x: f64,
    route: KontsevichRoute,
    ctrl: &QuadratureControls,
) -> Result<KontsevichValue> {
    if n == 0 {
        return Err(invalid("K_{n,beta} needs n >= 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    if !x.is_finite() {
        return Err(invalid("x must be finite"));
    }
    let p = pair_power(beta);
    let reducible = even_integer(p).filter(|_| n <= MAX_REDUCTION_N);
    match (route, reducible) {
        (KontsevichRoute::Auto | KontsevichRoute::AiryReduction, Some(pe)) => Ok(airy_reduction(n, pe, x)),
        (KontsevichRoute::AiryReduction, None) => Err(Error::Unsupported(format!(
            "Airy reduction needs 4/beta to be an even integer and n <= {MAX_REDUCTION_N} (n={n}, beta={beta})"
        ))),
        _ => {
            if n > MAX_QUADRATURE_N {
                return Err(Error::Unsupported(format!(
                    "direct quadrature is limited to n <= {MAX_QUADRATURE_N} (n={n}, beta={beta})"
                )));
            }
            ctrl.validate()?;
            Ok(contour_quadrature(n, p, x, ctrl))
        }
    }
}

/// Monomials of `prod_{k<l} (v_k - v_l)^p` as exponent vectors.
fn vandermonde_power_expansion(n: usize, p: u32) -> BTreeMap<Vec<u32>, f64> {
    let mut poly: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    poly.insert(vec![0; n], 1.0);
    for k in 0..n {
        for l in (k + 1)..n {
            for _ in 0..p {
                let mut next = BTreeMap::new();
                for (exp, c) in &poly {
                    let mut a = exp.clone();
                    a[k] += 1;
                    *next.entry(a).or_insert(0.0) += c;
                    let mut b = exp.clone();
                    b[l] += 1;
                    *next.entry(b).or_insert(0.0) -= c;
                }
                next.retain(|_, c: &mut f64| *c != 0.0);
                poly = next;
            }
        }
    }
    poly
}

fn airy_reduction(n: usize, p: u32, x: f64) -> KontsevichValue {
    let poly = vandermonde_power_expansion(n, p);
    let max_order = poly.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0) as usize;
    let d = airy_derivatives(x, max_order);
    // (-1)^m Ai^{(m)}
    let a: Vec<f64> = d.iter().enumerate().map(|(m, v)| if m % 2 == 0 { *v } else { -v }).collect();
    let mut sum = CompensatedSum::new();
    let mut magnitude = 0.0;
    for (exp, c) in &poly {
        let term = c * exp.iter().map(|&m| a[m as usize]).product::<f64>();
        sum.add(term);
        magnitude += term.abs();
    }
    // The polynomial phase i^{p n(n-1)/2} is already inside the monomials.
    let value = -sum.value();
    let error_estimate = (magnitude * 1e-13).max(f64::MIN_POSITIVE);
    KontsevichValue {
        value,
        error_estimate,
        route: KontsevichRoute::AiryReduction,
        converged: true,
        evaluations: poly.len() as u64,
        ladder: Vec::new(),
    }
}

#[derive(Clone, Copy)]
struct Node {
    t: f64,
    /// Weight times the complex single-variable factor.
    c: (f64, f64),
}

fn shifted_nodes(m: usize, x: f64, delta: f64) -> Vec<Node> {
    let rule = gauss_hermite(m);
    let sd = delta.sqrt();
    let amp = (delta * delta * delta / 3.0 - x * delta).exp();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| {
            let t = u / sd;
            let phase = -(t * t * t / 3.0 + (x - delta * delta) * t);
            let (s, c) = phase.sin_cos();
            let wt = w / sd * amp;
            Node { t, c: (wt * c, wt * s) }
        })
        .collect()
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// `sum over index subsets i_1 < ... < i_n of prod c_{i_k} prod |t_{i_k} - t_{i_l}|^p`.
///
/// Summation is over unordered subsets, so the result does not depend on the
/// order in which the nodes are supplied beyond rounding.
fn sector_sum(nodes: &[Node], n: usize, p: f64) -> ((f64, f64), u64) {
    let m = nodes.len();
    let pair: Vec<f64> = (0..m * m)
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            (nodes[i].t - nodes[j].t).abs().powf(p)
        })
        .collect();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut chosen = Vec::with_capacity(n);
    let mut count = 0u64;
    fn recurse(
        nodes: &[Node],
        pair: &[f64],
        n: usize,
        start: usize,
        acc: (f64, f64),
        chosen: &mut Vec<usize>,
        re: &mut CompensatedSum,
        im: &mut CompensatedSum,
        count: &mut u64,
    ) {
        let m = nodes.len();
        if chosen.len() == n {
            re.add(acc.0);
            im.add(acc.1);
            *count += 1;
            return;
        }
        for i in start..m {
            let mut f = 1.0;
            for &j in chosen.iter() {
                f *= pair[i * m + j];
            }
            let c = cmul(acc, nodes[i].c);
            chosen.push(i);
            recurse(nodes, pair, n, i + 1, (c.0 * f, c.1 * f), chosen, re, im, count);
            chosen.pop();
        }
    }
    recurse(nodes, &pair, n, 0, (1.0, 0.0), &mut chosen, &mut re, &mut im, &mut count);
    ((re.value(), im.value()), count)
}

fn binomial(m: usize, n: usize) -> u64 {
    (0..n).fold(1u128, |acc, k| acc * (m - k) as u128 / (k + 1) as u128) as u64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn contour_value(n: usize, p: f64, x: f64, m: usize, delta: f64) -> (f64, u64) {
    let nodes = shifted_nodes(m, x, delta);
    let ((re, _im), count) = sector_sum(&nodes, n, p);
    // The exact integral is real; the imaginary part is quadrature noise.
    let value = -phase_sign(n, p) * factorial(n) * re / (2.0 * PI).powi(n as i32);
    (value, count)
}

fn contour_quadrature(n: usize, p: f64, x: f64, ctrl: &QuadratureControls) -> KontsevichValue {
    let mut ladder = Vec::new();
    let mut evaluations = 0u64;
    let mut within_budget = true;
    for j in 0..ctrl.levels {
        let m = ctrl.nodes << j;
        let cost = binomial(m, n);
        if evaluations + cost > ctrl.max_evaluations {
            within_budget = false;
            break;
        }
        let (v, c) = contour_value(n, p, x, m, ctrl.contour_shift);
        evaluations += c;
        ladder.push(v);
    }
    let smooth = even_integer(p).is_some();
    let (value, error_estimate) = match ladder.len() {
        0 => (f64::NAN, f64::INFINITY),
        1 => (ladder[0], f64::INFINITY),
        len if smooth => (ladder[len - 1], (ladder[len - 1] - ladder[len - 2]).abs()),
        len => {
            // Kink |t|^p: quadrature error decays like m^{-(p+1)/2}.
            let r = 2f64.powf((p + 1.0) / 2.0);
            let rich: Vec<f64> = ladder.windows(2).map(|w| (r * w[1] - w[0]) / (r - 1.0)).collect();
            let last = rich[rich.len() - 1];
            let err = if rich.len() >= 2 {
                (last - rich[rich.len() - 2]).abs()
            } else {
                (last - ladder[len - 1]).abs()
            };
            (last, err)
        }
    };
    let converged = within_budget && error_estimate.is_finite() && error_estimate <= ctrl.target_error;
    KontsevichValue {
        value,
        error_estimate,
        route: KontsevichRoute::ContourQuadrature,
        converged,
        evaluations,
        ladder,
    }
}

/// `(1/2 pi) (4 pi/beta)^{beta/2} Gamma(1 + beta/2) / prod_{j=2}^{beta} [Gamma(1 + 2j/beta) / Gamma(1 + 2/beta)]`.
pub fn edge_prefactor(beta: u32) -> f64 {
    let b = beta as f64;
    let mut log = -(2.0 * PI).ln() + 0.5 * b * (4.0 * PI / b).ln() + libm::lgamma(1.0 + 0.5 * b);
    for j in 2..=beta {
        log -= libm::lgamma(1.0 + 2.0 * j as f64 / b) - libm::lgamma(1.0 + 2.0 / b);
    }
    log.exp()
}

/// Edge density for even `beta` as `prefactor * K_{beta,beta}(x)`, with the
/// absolute error estimate of the integral scaled accordingly.
pub fn kontsevich_edge_density(beta: u32, x: f64, ctrl: &QuadratureControls) -> Result<(EdgeDensityValue, KontsevichValue)> {
    if beta == 0 || beta % 2 != 0 {
        return Err(invalid(format!("edge density via K_(beta,beta) needs an even beta, got {beta}")));
    }
    let k = kontsevich_k(beta as usize, beta as f64, x, ctrl)?;
    if !k.converged {
        return Err(Error::Numeric(format!(
            "K_({beta},{beta})({x}) did not reach the target error {:.1e} (estimate {:.3e} after {} evaluations)",
            ctrl.target_error, k.error_estimate, k.evaluations
        )));
    }
    let c = edge_prefactor(beta);
    let scaled = KontsevichValue { value: c * k.value, error_estimate: c * k.error_estimate, ..k };
    Ok((EdgeDensityValue { x, value: scaled.value, beta: beta as f64 }, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::{airy_ai, airy_ai_prime, airy_tail, edge_density_closed};

    fn quad(n: usize, beta: f64, x: f64, ctrl: &QuadratureControls) -> KontsevichValue {
        kontsevich_k_with(n, beta, x, KontsevichRoute::ContourQuadrature, ctrl).unwrap()
    }

    #[test]
    fn single_integral_is_minus_airy() {
        for x in [-3.0, 0.0, 1.7] {
            let k = kontsevich_k(1, 2.0, x, &QuadratureControls::default()).unwrap();
            assert!((k.value + airy_ai(x)).abs() < 1e-13);
            let q = quad(1, 3.0, x, &QuadratureControls::default());
            assert!((q.value + airy_ai(x)).abs() < 1e-8, "{} vs {}", q.value, -airy_ai(x));
        }
    }

    #[test]
    fn unitary_pair_reduction() {
        let ctrl = QuadratureControls::default();
        for x in [-4.0, -1.0, 0.0, 2.5] {
            let k = kontsevich_k(2, 2.0, x, &ctrl).unwrap();
            let (a, d) = (airy_ai(x), airy_ai_prime(x));
            assert!((k.value - 2.0 * (d * d - x * a * a)).abs() < 1e-13);
            assert_eq!(k.route, KontsevichRoute::AiryReduction);
        }
        let k0 = kontsevich_k(2, 2.0, 0.0, &ctrl).unwrap().value;
        assert!((k0 - 0.133_974_967_559_328).abs() < 1e-13);
    }

    #[test]
    fn quadrature_matches_reduction_for_beta_two() {
        let ctrl = QuadratureControls::default();
        for x in [-2.0, 0.0, 2.0] {
            let a = kontsevich_k(2, 2.0, x, &ctrl).unwrap().value;
            let b = quad(2, 2.0, x, &ctrl);
            assert!(b.converged);
            assert!((a - b.value).abs() < 1e-6, "x={x}: {a} vs {}", b.value);
        }
        // Three variables with p = 2 as well.
        let a = kontsevich_k(3, 2.0, -0.5, &ctrl).unwrap().value;
        let b = quad(3, 2.0, -0.5, &ctrl).value;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn reduction_of_unit_power() {
        // beta = 1 means p = 4; n = 2 gives (v1 - v2)^4.
        let x = 0.3;
        let k = kontsevich_k(2, 1.0, x, &QuadratureControls::default()).unwrap();
        let q = quad(2, 1.0, x, &QuadratureControls::default());
        assert!((k.value - q.value).abs() < 1e-6, "{} vs {}", k.value, q.value);
    }

    #[test]
    fn prefactor_values() {
        assert!((edge_prefactor(2) - 0.5).abs() < 1e-14);
        assert!((edge_prefactor(4) - 0.822_467_033_4).abs() < 1e-9);
    }

    #[test]
    fn sector_sum_equals_full_tensor_over_factorial() {
        let nodes = shifted_nodes(10, 0.4, 1.0);
        let p = 1.0;
        let ((sr, si), _) = sector_sum(&nodes, 3, p);
        let (mut fr, mut fi) = (0.0, 0.0);
        for a in &nodes {
            for b in &nodes {
                for c in &nodes {
                    let w = cmul(cmul(a.c, b.c), c.c);
                    let f = ((a.t - b.t).abs() * (a.t - c.t).abs() * (b.t - c.t).abs()).powf(p);
                    fr += w.0 * f;
                    fi += w.1 * f;
                }
            }
        }
        assert!((6.0 * sr - fr).abs() < 1e-12 * fr.abs().max(1.0));
        assert!((6.0 * si - fi).abs() < 1e-12 * fr.abs().max(1.0));
    }

    #[test]
    fn shuffled_node_order_gives_same_sum() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let nodes = shifted_nodes(20, -1.0, 1.0);
        let mut shuffled = nodes.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let (a, _) = sector_sum(&nodes, 3, 1.0);
        let (b, _) = sector_sum(&shuffled, 3, 1.0);
        assert!((a.0 - b.0).abs() < 1e-13 && (a.1 - b.1).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let ctrl = QuadratureControls { max_evaluations: 10_000, ..QuadratureControls::default() };
        let k = quad(4, 4.0, 0.0, &ctrl);
        assert!(!k.converged);
        assert!(kontsevich_edge_density(4, 0.0, &ctrl).is_err());
        assert!(kontsevich_k(5, 4.0, 0.0, &ctrl).is_err());
        assert!(kontsevich_edge_density(3, 0.0, &ctrl).is_err());
    }

    #[test]
    fn symplectic_edge_integral_relation() {
        // prefactor K_{4,4}(x) = 2^{-1/3} [Ai'(s)^2 - s Ai(s)^2 - Ai(s) T(s) / 2], s = 2^{2/3} x,
        // with T the Airy tail. The bracket is the closed-form beta=4 branch with
        // 2x replaced by 2^{2/3} x.
        let ctrl = QuadratureControls { nodes: 32, ..QuadratureControls::default() };
        for x in [-1.0, 0.0, 1.0] {
            let (edge, k) = kontsevich_edge_density(4, x, &ctrl).unwrap();
            let s = 2f64.powf(2.0 / 3.0) * x;
            let (a, d) = (airy_ai(s), airy_ai_prime(s));
            let expect = 2f64.powf(-1.0 / 3.0) * (d * d - s * a * a - 0.5 * a * airy_tail(s));
            assert!((edge.value - expect).abs() < 2e-5, "x={x}: {} vs {expect} (est {})", edge.value, k.error_estimate);
        }
        let closed = edge_density_closed(4, 0.0).unwrap().value;
        let (edge, _) = kontsevich_edge_density(4, 0.0, &ctrl).unwrap();
        assert!((edge.value / closed - 2f64.powf(-1.0 / 3.0)).abs() < 5e-3);
    }
}
