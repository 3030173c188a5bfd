//! Eigenvalues of real symmetric tridiagonal matrices.
//!
//! The production kernel is implicit-shift QL with a Wilkinson-type shift. A
//! Sturm-sequence bisection solver is kept alongside as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleParams, SampleSeed, TridiagonalSymmetric};
use crate::error::{invalid, Error, Result};

/// Sorted eigenvalues of one matrix, optionally tagged with the sample they
/// came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: EnsembleParams,
    pub seed: SampleSeed,
}

impl Spectrum {
    fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Self { values, provenance: None }
    }

    pub fn with_provenance(mut self, params: EnsembleParams, seed: SampleSeed) -> Self {
        self.provenance = Some(Provenance { params, seed });
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Checks that the spectrum reproduces the trace and the trace of squares of
    /// `source`. Returns the absolute trace error and the relative Frobenius error.
    pub fn conservation_errors(&self, source: &TridiagonalSymmetric) -> (f64, f64) {
        let sum: f64 = self.values.iter().sum();
        let sum_sq: f64 = self.values.iter().map(|v| v * v).sum();
        let tr_sq = source.trace_sq();
        let rel = if tr_sq > 0.0 { (sum_sq - tr_sq).abs() / tr_sq } else { sum_sq.abs() };
        ((sum - source.trace()).abs(), rel)
    }

    /// True when both conservation laws hold at the documented tolerances.
    pub fn conserves(&self, source: &TridiagonalSymmetric) -> bool {
        let (tr_err, frob_rel) = self.conservation_errors(source);
        let n = self.len() as f64;
        tr_err <= 1e-10 * n * self.max_abs().max(f64::MIN_POSITIVE) && frob_rel <= 1e-9
    }
}

fn sweep_cap(n: usize) -> usize {
    30 * n.max(1)
}

/// All eigenvalues by implicit QL with deflation on negligible couplings.
pub fn eigenvalues(t: &TridiagonalSymmetric) -> Result<Spectrum> {
    let n = t.dim();
    let mut d = t.diag().to_vec();
    let mut e: Vec<f64> = t.subdiag().to_vec();
    e.push(0.0);
    let eps = f64::EPSILON;
    let cap = sweep_cap(n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd || e[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > cap {
                return Err(Error::NoConvergence {
                    index: l,
                    dim: n,
                    iterations: cap,
                    diag: t.diag().to_vec(),
                    subdiag: t.subdiag().to_vec(),
                });
            }
            // Shift from the leading 2x2 block: its eigenvalue nearer d[l].
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(Spectrum::from_unsorted(d))
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
pub fn sturm_count(t: &TridiagonalSymmetric, x: f64) -> usize {
    let d = t.diag();
    let b = t.subdiag();
    let bmax = b.iter().fold(1.0f64, |m, v| m.max(v * v));
    let pivmin = f64::MIN_POSITIVE * bmax;
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0.. {
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        if i + 1 == d.len() {
            break;
        }
        q = d[i + 1] - x - b[i] * b[i] / q;
    }
    count
}

/// Gershgorin interval containing the whole spectrum.
pub fn gershgorin_bounds(t: &TridiagonalSymmetric) -> (f64, f64) {
    let d = t.diag();
    let b = t.subdiag();
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { b[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - left - right);
        hi = hi.max(d[i] + left + right);
    }
    (lo, hi)
}

/// All eigenvalues by bisection on Sturm counts, each to within `abs_tol`.
pub fn eigenvalues_bisect(t: &TridiagonalSymmetric, abs_tol: f64) -> Result<Spectrum> {
    if !(abs_tol > 0.0 && abs_tol.is_finite()) {
        return Err(invalid(format!("bisection tolerance must be > 0, got {abs_tol}")));
    }
    let (glo, ghi) = gershgorin_bounds(t);
    let pad = 2.0 * f64::EPSILON * glo.abs().max(ghi.abs()) + abs_tol;
    let (glo, ghi) = (glo - pad, ghi + pad);
    let values = (0..t.dim())
        .map(|k| {
            let (mut lo, mut hi) = (glo, ghi);
            // Interval shrinks to machine resolution well before 200 halvings.
            for _ in 0..200 {
                if hi - lo <= abs_tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(t, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    Ok(Spectrum::from_unsorted(values))
}
