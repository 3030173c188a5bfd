//! wasm-bindgen exports for the static demo page in `www/`.
//!
//! Every function returns a flat `Float64Array` of fixed-width rows so the
//! page can plot without a JSON round trip.

use betatrace::density_stats::{bin_averages, semicircle_bin_averages, GridSpec, Regime};
use betatrace::ensemble::{EnsembleKind, EnsembleParams};
use betatrace::simulate::{simulate_histogram, Threads};
use betatrace::special_fn::{airy, edge_density_closed};
use wasm_bindgen::prelude::*;

fn js(e: betatrace::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn params(n: usize, beta: f64, fixed_trace: bool) -> Result<EnsembleParams, JsError> {
    let kind = if fixed_trace { EnsembleKind::FixedTrace } else { EnsembleKind::Gaussian };
    EnsembleParams::new(n, beta, kind).map_err(js)
}

fn histogram_rows(
    p: &EnsembleParams,
    seed: u64,
    reps: u32,
    grid: GridSpec,
    regime: Regime,
    reference: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<f64>, JsError> {
    let edges = grid.edges();
    let (acc, _) = simulate_histogram(p, seed, reps as u64, &edges, regime, Threads(Some(1))).map_err(js)?;
    let d = acc.finish(regime, Some(*p)).map_err(js)?;
    let r = reference(&edges);
    let mut out = Vec::with_capacity(5 * d.bins());
    for i in 0..d.bins() {
        out.extend_from_slice(&[edges[i], edges[i + 1], d.height[i], d.std_err[i], r[i]]);
    }
    Ok(out)
}

/// Bulk histogram on `[-1.2, 1.2]` with the semicircle.
/// Rows: `bin_lo, bin_hi, height, std_err, semicircle`.
#[wasm_bindgen]
pub fn bulk_histogram(n: usize, beta: f64, fixed_trace: bool, reps: u32, seed: u32, bins: usize) -> Result<Vec<f64>, JsError> {
    let p = params(n, beta, fixed_trace)?;
    let grid = GridSpec::new(-1.2, 1.2, bins).map_err(js)?;
    histogram_rows(&p, seed as u64, reps, grid, Regime::Bulk, semicircle_bin_averages)
}

/// Soft-edge histogram on `[-5, 2]`. The last column is `Ai_beta` for
/// beta in {1, 2, 4} and NaN otherwise.
#[wasm_bindgen]
pub fn edge_histogram(n: usize, beta: f64, fixed_trace: bool, reps: u32, seed: u32, bins: usize) -> Result<Vec<f64>, JsError> {
    let p = params(n, beta, fixed_trace)?;
    let grid = GridSpec::new(-5.0, 2.0, bins).map_err(js)?;
    let classical = [1.0, 2.0, 4.0].contains(&beta).then_some(beta as u32);
    histogram_rows(&p, seed as u64, reps, grid, Regime::Edge, |edges| match classical {
        Some(b) => bin_averages(edges, |t| edge_density_closed(b, t).map(|v| v.value).unwrap_or(f64::NAN)),
        None => vec![f64::NAN; edges.len() - 1],
    })
}

/// Rows: `x, Ai(x), Ai'(x), Ai_1(x), Ai_2(x), Ai_4(x)` on `points` evenly
/// spaced abscissae.
#[wasm_bindgen]
pub fn airy_curves(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if !(lo < hi) || points < 2 {
        return Err(JsError::new("need lo < hi and at least 2 points"));
    }
    let mut out = Vec::with_capacity(6 * points);
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let a = airy(x);
        out.extend_from_slice(&[x, a.ai, a.ai_prime]);
        for b in [1, 2, 4] {
            out.push(edge_density_closed(b, x).map_err(js)?.value);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bulk_rows_carry_unit_mass() {
        let rows = bulk_histogram(30, 2.0, true, 20, 3, 12).unwrap();
        assert_eq!(rows.len(), 60);
        let mass: f64 = rows.chunks(5).map(|r| r[2] * (r[1] - r[0])).sum();
        assert!((mass - 1.0).abs() < 0.05, "{mass}");
    }

    #[test]
    fn edge_reference_only_for_classical_beta() {
        let a = edge_histogram(20, 2.0, false, 10, 1, 7).unwrap();
        assert!(a.chunks(5).all(|r| r[4].is_finite()));
        let b = edge_histogram(20, 3.0, false, 10, 1, 7).unwrap();
        assert!(b.chunks(5).all(|r| r[4].is_nan()));
    }

    #[test]
    fn airy_curve_at_zero() {
        let rows = airy_curves(-1.0, 1.0, 3).unwrap();
        assert!((rows[6 + 1] - 0.355028053887817).abs() < 1e-14);
    }
}
