//! Replicate loops: sample, diagonalize, check conservation, and fold into
//! histograms or collect spectra. Replicate `r` always uses the stream
//! `(master_seed, r)`, and histogram merges are integer additions, so results do
//! not depend on the number of worker threads.

use serde::{Deserialize, Serialize};

use crate::density_stats::{rescale, HistogramAccumulator, Regime};
use crate::ensemble::{sample_matrix, EnsembleParams, SampleSeed};
use crate::error::Result;
use crate::tridiag_eig::{eigenvalues, Spectrum};

/// Worker count; `None` uses the global default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Threads(pub Option<usize>);

/// Per-run conservation bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConservationTally {
    pub checked: u64,
    pub violations: u64,
    pub worst_trace_err: f64,
    pub worst_frobenius_rel: f64,
}

impl ConservationTally {
    fn record(&mut self, spectrum: &Spectrum, source: &crate::ensemble::TridiagonalSymmetric) {
        let (t, f) = spectrum.conservation_errors(source);
        self.checked += 1;
        if !spectrum.conserves(source) {
            self.violations += 1;
        }
        self.worst_trace_err = self.worst_trace_err.max(t);
        self.worst_frobenius_rel = self.worst_frobenius_rel.max(f);
    }

    fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst_trace_err = self.worst_trace_err.max(other.worst_trace_err);
        self.worst_frobenius_rel = self.worst_frobenius_rel.max(other.worst_frobenius_rel);
        self
    }
}

/// One replicate: matrix, spectrum, conservation check.
pub fn replicate_spectrum(params: &EnsembleParams, seed: SampleSeed) -> Result<(Spectrum, ConservationTally)> {
    let t = sample_matrix(params, seed)?;
    let s = eigenvalues(&t)?.with_provenance(*params, seed);
    let mut tally = ConservationTally::default();
    tally.record(&s, &t);
    Ok((s, tally))
}

#[cfg(feature = "parallel")]
pub(crate) fn run_in_pool<T: Send>(threads: Threads, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads.0 {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| crate::Error::Numeric(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// All spectra for replicates `0..reps`, in replicate order.
pub fn collect_spectra(params: &EnsembleParams, master_seed: u64, reps: u64, threads: Threads) -> Result<(Vec<Spectrum>, ConservationTally)> {
    params.validate()?;
    let one = |r: u64| replicate_spectrum(params, SampleSeed::new(master_seed, r));
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(Spectrum, ConservationTally)>> = {
        use rayon::prelude::*;
        run_in_pool(threads, || (0..reps).into_par_iter().map(one).collect())?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(Spectrum, ConservationTally)>> = {
        let _ = threads;
        (0..reps).map(one).collect()
    };
    let mut tally = ConservationTally::default();
    let mut spectra = Vec::with_capacity(reps as usize);
    for r in results {
        let (s, t) = r?;
        tally = tally.merge(t);
        spectra.push(s);
    }
    Ok((spectra, tally))
}

/// Histogram of the rescaled spectra of replicates `0..reps`.
pub fn simulate_histogram(
    params: &EnsembleParams,
    master_seed: u64,
    reps: u64,
    edges: &[f64],
    regime: Regime,
    threads: Threads,
) -> Result<(HistogramAccumulator, ConservationTally)> {
    params.validate()?;
    let empty = HistogramAccumulator::new(edges.to_vec())?;
    let fold = |acc: Result<(HistogramAccumulator, ConservationTally)>, r: u64| {
        let (mut h, tally) = acc?;
        let (s, t) = replicate_spectrum(params, SampleSeed::new(master_seed, r))?;
        h.add_replicate(&rescale(&s.values, params, regime));
        Ok((h, tally.merge(t)))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let combine = |a: Result<(HistogramAccumulator, ConservationTally)>, b: Result<(HistogramAccumulator, ConservationTally)>| {
            let (mut ha, ta) = a?;
            let (hb, tb) = b?;
            ha.merge(&hb)?;
            Ok((ha, ta.merge(tb)))
        };
        run_in_pool(threads, || {
            (0..reps)
                .into_par_iter()
                .fold(|| Ok((empty.clone(), ConservationTally::default())), fold)
                .reduce(|| Ok((empty.clone(), ConservationTally::default())), combine)
        })?
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        (0..reps).fold(Ok((empty, ConservationTally::default())), fold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_independent_of_thread_count() {
        let p = EnsembleParams::fixed_trace(30, 2.0).unwrap();
        let edges: Vec<f64> = (0..=24).map(|i| -1.2 + 0.1 * i as f64).collect();
        let (a, ta) = simulate_histogram(&p, 3, 64, &edges, Regime::Bulk, Threads(Some(1))).unwrap();
        let (b, tb) = simulate_histogram(&p, 3, 64, &edges, Regime::Bulk, Threads(Some(4))).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.checked, 64);
        assert_eq!(ta.violations, 0);
        assert_eq!(ta.checked, tb.checked);
    }

    #[test]
    fn spectra_in_replicate_order() {
        let p = EnsembleParams::gaussian(5, 1.0).unwrap();
        let (s, _) = collect_spectra(&p, 9, 6, Threads(Some(3))).unwrap();
        for (r, spec) in s.iter().enumerate() {
            assert_eq!(spec.provenance.unwrap().seed.replicate, r as u64);
            let (one, _) = replicate_spectrum(&p, SampleSeed::new(9, r as u64)).unwrap();
            assert_eq!(one.values, spec.values);
        }
    }
}
