//! Pseudo-spectral toolkit for the ion Euler-Poisson system with Boltzmann
//! electrons: the ion-acoustic dispersion relation and its half-wave group,
//! a periodic-box nonlinear solver in (density, velocity-potential) variables,
//! the alpha-variable diagonalization, and sampled verification of the phase
//! lower bound and bilinear multiplier estimates that drive the decay theory.

pub mod dispersion;
pub mod error;
pub mod fields;
pub mod fit;
pub mod multiplier;
pub mod norms;
pub mod propagator;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};

/// Complex scalar used throughout the spectral code.
pub type Complex = num_complex::Complex<f64>;

/// Deterministic parallel sum: fixed chunking plus an ordered sequential
/// combine, so results are bit-identical regardless of thread schedule.
pub(crate) fn par_sum<T, F>(items: &[T], chunk: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    use rayon::prelude::*;
    items
        .par_chunks(chunk.max(1))
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Deterministic parallel sum over an index range, same chunking contract.
pub(crate) fn par_sum_indexed<F>(len: usize, chunk: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    use rayon::prelude::*;
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}
