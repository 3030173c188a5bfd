//! Quadrature building blocks shared by the special functions and the exact
//! reference computations.
//!
//! Gauss rules are generated by Golub–Welsch: nodes are eigenvalues of the
//! Jacobi matrix of the orthonormal family (computed with the tridiagonal
//! solver), polished by Newton steps, and weights are the Christoffel numbers
//! `1 / sum_k p_k(x)^2` so no eigenvectors are needed.

use std::collections::BinaryHeap;

use crate::ensemble::TridiagonalSymmetric;
use crate::tridiag_eig::eigenvalues;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }

    /// Legendre rule mapped from `[-1, 1]` to `[a, b]`.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|u| f(mid + half * u))
    }
}

/// Values of the orthonormal family at `x` for a three-term recurrence
/// `x p_k = off(k+1) p_{k+1} + off(k) p_{k-1}` with zero diagonal.
fn orthonormal_values(x: f64, m: usize, p0: f64, off: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(m + 1);
    p.push(p0);
    if m >= 1 {
        p.push(x * p0 / off(1));
    }
    for k in 1..m {
        let next = (x * p[k] - off(k) * p[k - 1]) / off(k + 1);
        p.push(next);
    }
    p
}

fn jacobi_eigenvalues(m: usize, off: impl Fn(usize) -> f64) -> Vec<f64> {
    assert!(m >= 1, "a Gauss rule needs at least one node");
    let jacobi = TridiagonalSymmetric::new(vec![0.0; m], (1..m).map(off).collect())
        .expect("Jacobi matrix is well formed");
    eigenvalues(&jacobi).expect("Jacobi matrices converge").values
}

/// `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> GaussRule {
    let off = |k: usize| {
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    };
    let mut nodes = jacobi_eigenvalues(m, off);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (pm, dpm) = legendre_with_derivative(m, *x);
            if dpm == 0.0 || !dpm.is_finite() {
                break;
            }
            let step = pm / dpm;
            *x -= step;
            if step.abs() <= 1e-17 {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, dpm) = legendre_with_derivative(m, x);
            2.0 / ((1.0 - x * x) * dpm * dpm)
        })
        .collect();
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let dp = mf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `m`-point Gauss–Hermite rule for the weight `e^{-x^2}`.
pub fn gauss_hermite(m: usize) -> GaussRule {
    let off = |k: usize| (k as f64 / 2.0).sqrt();
    let p0 = std::f64::consts::PI.powf(-0.25);
    let mut nodes = jacobi_eigenvalues(m, off);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let p = orthonormal_values(*x, m, p0, off);
            // p_m' = sqrt(2m) p_{m-1} for orthonormal Hermite functions.
            let dp = (2.0 * m as f64).sqrt() * p[m - 1];
            if dp == 0.0 {
                break;
            }
            let step = p[m] / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = orthonormal_values(x, m - 1, p0, off);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    GaussRule { nodes, weights }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

// 7-point Gauss / 15-point Kronrod abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = WG[3] * fc;
    let mut kron = WGK[7] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveControls {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for AdaptiveControls {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_segments: 2000 }
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]`, first split at
/// the given interior breakpoints (kinks, endpoint singularities).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], ctrl: AdaptiveControls) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();

    let mut heap = BinaryHeap::new();
    for w in pts.windows(2) {
        let (value, error) = kronrod15(&mut f, w[0], w[1]);
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    let total = |heap: &BinaryHeap<Segment>| -> (f64, f64) {
        let v = compensated_sum(heap.iter().map(|s| s.value));
        let e = heap.iter().map(|s| s.error).sum::<f64>();
        (v, e)
    };
    loop {
        let (value, error) = total(&heap);
        let target = ctrl.abs_tol.max(ctrl.rel_tol * value.abs());
        if error <= target {
            return Integral { value: sign * value, error, converged: true };
        }
        if heap.len() >= ctrl.max_segments {
            return Integral { value: sign * value, error, converged: false };
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error) = total(&heap);
            return Integral { value: sign * value, error, converged: false };
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Composite Gauss–Legendre rule over equal panels.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussRule, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = CompensatedSum::new();
    for k in 0..panels {
        let lo = a + k as f64 * h;
        acc.add(rule.integrate_on(lo, lo + h, &mut f));
    }
    acc.value()
}
