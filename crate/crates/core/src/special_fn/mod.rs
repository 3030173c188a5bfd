//! Airy functions, the classical soft-edge densities `Ai_beta` for
//! `beta = 1, 2, 4`, and the Kontsevich-type multiple Airy integrals that give
//! the edge density for general even `beta`.

mod airy;
mod kontsevich;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use airy::{airy, airy_ai, airy_ai_prime, airy_derivatives, airy_tail, AiryAccuracy, AiryEval, AI_PRIME_ZERO, AI_ZERO};
pub use kontsevich::{
    edge_prefactor, kontsevich_edge_density, kontsevich_k, kontsevich_k_with, KontsevichRoute, KontsevichValue,
    QuadratureControls,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDensityValue {
    pub x: f64,
    pub value: f64,
    pub beta: f64,
}

/// `(Ai')^2 - x Ai^2`, the unitary soft-edge density.
fn ai_kernel_diagonal(x: f64) -> (f64, AiryEval) {
    let a = airy(x);
    (a.ai_prime * a.ai_prime - x * a.ai * a.ai, a)
}

/// Soft-edge limiting density `Ai_beta(x)` for `beta` in {1, 2, 4}.
///
/// The `beta = 4` branch doubles the argument of Ai, `Ai'` and of the tail
/// integral, `(Ai'(2x))^2 - 2x Ai(2x)^2 - Ai(2x) int_x^inf Ai(2t) dt`.
pub fn edge_density_closed(beta: u32, x: f64) -> Result<EdgeDensityValue> {
    let value = match beta {
        1 => {
            let (k, a) = ai_kernel_diagonal(x);
            k + 0.5 * a.ai * (1.0 - airy_tail(x))
        }
        2 => ai_kernel_diagonal(x).0,
        4 => {
            let s = 2.0 * x;
            let (k, a) = ai_kernel_diagonal(s);
            // int_x^inf Ai(2t) dt = (1/2) int_{2x}^inf Ai
            k - a.ai * 0.5 * airy_tail(s)
        }
        other => {
            return Err(Error::Unsupported(format!(
                "closed-form edge density exists only for beta in {{1, 2, 4}} (got {other}); use kontsevich_edge_density for even beta"
            )))
        }
    };
    Ok(EdgeDensityValue { x, value, beta: beta as f64 })
}
