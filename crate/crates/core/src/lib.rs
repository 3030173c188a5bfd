//! Fixed-trace and Gaussian beta-Hermite ensembles: tridiagonal sampling,
//! eigenvalue densities in the bulk and at the soft edge, Airy-type limit
//! laws, exact small-N references and moment identities.

mod error;

#[cfg(feature = "cli")]
pub mod cli;
pub mod density_stats;
pub mod ensemble;
pub mod exact_ref;
pub mod moments;
pub mod quadrature;
pub mod report;
pub mod simulate;
pub mod special_fn;
pub mod tridiag_eig;

pub use error::{Error, Result};
