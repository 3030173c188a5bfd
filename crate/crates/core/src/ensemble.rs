//! Ensemble parameters and the tridiagonal matrix model.
//!
//! A beta-Hermite matrix is sampled directly in tridiagonal form: standard
//! normals on the diagonal and `chi_{k beta} / sqrt(2)` variates on the
//! subdiagonal. The fixed-trace ensemble is obtained by projecting a Gaussian
//! sample radially onto the sphere `tr F^2 = r^2`.
//!
//! Storage is top-left first. `subdiag[i]` couples rows `i` and `i + 1`, and the
//! coupling `j` places from the bottom-right corner (`subdiag[n - 1 - j]`) has
//! `j * beta` degrees of freedom, so `chi_beta` sits next to the corner.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[cfg_attr(feature = "cli", derive(clap::ValueEnum))]
pub enum EnsembleKind {
    Gaussian,
    FixedTrace,
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnsembleKind::Gaussian => f.write_str("gaussian"),
            EnsembleKind::FixedTrace => f.write_str("fixed-trace"),
        }
    }
}

/// Squared strength of a fixed-trace ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strength {
    /// `r^2 = N(N-1)/2`.
    Canonical,
    /// `r^2 = 1`.
    Unit,
}

impl Strength {
    pub fn radius_sq(self, n: usize) -> f64 {
        match self {
            Strength::Canonical => canonical_strength_sq(n),
            Strength::Unit => 1.0,
        }
    }
}

pub fn canonical_strength_sq(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// `N + beta N (N - 1) / 2`, the number of Gaussian degrees of freedom carried
/// by the tridiagonal model.
pub fn n_beta(n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    nf + beta * nf * (nf - 1.0) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub beta: f64,
    pub kind: EnsembleKind,
}

impl EnsembleParams {
    pub fn new(n: usize, beta: f64, kind: EnsembleKind) -> Result<Self> {
        let p = Self { n, beta, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(n: usize, beta: f64) -> Result<Self> {
        Self::new(n, beta, EnsembleKind::Gaussian)
    }

    pub fn fixed_trace(n: usize, beta: f64) -> Result<Self> {
        Self::new(n, beta, EnsembleKind::FixedTrace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("matrix dimension n must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        if self.kind == EnsembleKind::FixedTrace && self.n < 2 {
            return Err(Error::Unsupported(
                "fixed-trace ensemble needs n >= 2 (n = 1 collapses to two atoms at +-r)".into(),
            ));
        }
        Ok(())
    }

    pub fn n_beta(&self) -> f64 {
        n_beta(self.n, self.beta)
    }

    /// Canonical `r^2 = N(N-1)/2` for fixed-trace parameters, `None` otherwise.
    pub fn strength_sq(&self) -> Option<f64> {
        match self.kind {
            EnsembleKind::FixedTrace => Some(canonical_strength_sq(self.n)),
            EnsembleKind::Gaussian => None,
        }
    }

    pub fn with_kind(&self, kind: EnsembleKind) -> Self {
        Self { kind, ..*self }
    }
}

/// Identifies one independent random stream: `(master_seed, replicate)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleSeed {
    pub master_seed: u64,
    pub replicate: u64,
}

impl SampleSeed {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        Self { master_seed, replicate }
    }

    /// ChaCha8 keyed by the master seed, with the replicate index selecting the
    /// stream. Streams of distinct replicates never overlap.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalSymmetric {
    diag: Vec<f64>,
    subdiag: Vec<f64>,
}

impl TridiagonalSymmetric {
    pub fn new(diag: Vec<f64>, subdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("tridiagonal matrix needs at least one diagonal entry"));
        }
        if subdiag.len() + 1 != diag.len() {
            return Err(invalid(format!(
                "subdiagonal length {} does not match diagonal length {}",
                subdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(subdiag.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("tridiagonal entries must be finite"));
        }
        Ok(Self { diag, subdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn subdiag(&self) -> &[f64] {
        &self.subdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// `tr T^2 = sum a_j^2 + 2 sum b_j^2`.
    pub fn trace_sq(&self) -> f64 {
        let d: f64 = self.diag.iter().map(|a| a * a).sum();
        let s: f64 = self.subdiag.iter().map(|b| b * b).sum();
        d + 2.0 * s
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|a| a * c).collect(),
            subdiag: self.subdiag.iter().map(|b| b * c).collect(),
        }
    }

    /// Reflection through the anti-diagonal; a similarity transform.
    pub fn flipped(&self) -> Self {
        Self {
            diag: self.diag.iter().rev().copied().collect(),
            subdiag: self.subdiag.iter().rev().copied().collect(),
        }
    }

    /// Leading `k x k` principal block.
    pub fn leading_block(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(invalid(format!("block size {k} out of range 1..={}", self.dim())));
        }
        Ok(Self {
            diag: self.diag[..k].to_vec(),
            subdiag: self.subdiag[..k - 1].to_vec(),
        })
    }

    /// Diagonal entry `a_j`, counted from the bottom-right corner (`j = 1..=N`).
    pub fn a_from_bottom(&self, j: usize) -> f64 {
        self.diag[self.dim() - j]
    }

    /// Subdiagonal entry `b_j` with `j beta` degrees of freedom (`j = 1..N`).
    pub fn b_from_bottom(&self, j: usize) -> f64 {
        self.subdiag[self.dim() - 1 - j]
    }
}

fn half_chi<R: Rng + ?Sized>(rng: &mut R, k_dof: f64) -> f64 {
    // X^2 ~ Gamma(k/2, 1) gives X the density 2 x^{k-1} e^{-x^2} / Gamma(k/2).
    let gamma = Gamma::new(0.5 * k_dof, 1.0).expect("shape validated by caller");
    let g: f64 = gamma.sample(rng);
    g.sqrt()
}

/// One draw of `chi_k / sqrt(2)` from the stream identified by `seed`.
pub fn sample_half_chi(k_dof: f64, seed: SampleSeed) -> Result<f64> {
    if !(k_dof > 0.0 && k_dof.is_finite()) {
        return Err(invalid(format!("degrees of freedom must be > 0, got {k_dof}")));
    }
    let mut rng = seed.rng();
    Ok(half_chi(&mut rng, k_dof))
}

/// Samples the Gaussian-ensemble matrix `H_beta`, whatever `params.kind` says.
pub fn sample_beta_hermite(params: &EnsembleParams, seed: SampleSeed) -> Result<TridiagonalSymmetric> {
    params.beta_check()?;
    let mut rng = seed.rng();
    Ok(beta_hermite_from_rng(params.n, params.beta, &mut rng))
}

pub(crate) fn beta_hermite_from_rng<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> TridiagonalSymmetric {
    let diag: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let subdiag: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| {
            let j = (n - 1 - i) as f64;
            half_chi(rng, j * beta)
        })
        .collect();
    TridiagonalSymmetric { diag, subdiag }
}

impl EnsembleParams {
    fn beta_check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("matrix dimension n must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Scales `h` so that its trace of squares equals `target_sq`; returns the
/// rescaled matrix and the scale factor.
pub fn rescale_to_trace(h: &TridiagonalSymmetric, target_sq: f64) -> Result<(TridiagonalSymmetric, f64)> {
    if !(target_sq > 0.0 && target_sq.is_finite()) {
        return Err(invalid(format!("target trace must be > 0, got {target_sq}")));
    }
    let tr = h.trace_sq();
    if !(tr > 0.0) {
        return Err(Error::Numeric("cannot rescale a matrix with zero trace of squares".into()));
    }
    let c = (target_sq / tr).sqrt();
    Ok((h.scaled(c), c))
}

/// `F_beta = sqrt(N(N-1)/2) H_beta / sqrt(tr H_beta^2)`.
pub fn fixed_trace_rescale(h: &TridiagonalSymmetric, params: &EnsembleParams) -> Result<TridiagonalSymmetric> {
    fixed_trace_rescale_with(h, params, Strength::Canonical)
}

pub fn fixed_trace_rescale_with(
    h: &TridiagonalSymmetric,
    params: &EnsembleParams,
    strength: Strength,
) -> Result<TridiagonalSymmetric> {
    if params.n < 2 || h.dim() < 2 {
        return Err(Error::Unsupported(
            "fixed-trace rescaling needs n >= 2; at n = 1 the spectrum degenerates to +-r".into(),
        ));
    }
    rescale_to_trace(h, strength.radius_sq(h.dim())).map(|(m, _)| m)
}

/// The matrix of the ensemble named by `params.kind` (canonical strength for
/// fixed trace).
pub fn sample_matrix(params: &EnsembleParams, seed: SampleSeed) -> Result<TridiagonalSymmetric> {
    let h = sample_beta_hermite(params, seed)?;
    match params.kind {
        EnsembleKind::Gaussian => Ok(h),
        EnsembleKind::FixedTrace => fixed_trace_rescale(&h, params),
    }
}
