//! Sampled verification of the multiplier theory behind the decay estimates:
//! the phase lower bound, the Φ₁ derivative bounds, local boundedness and
//! Sobolev-slice norms of the weighted multiplier 𝔐₁, the bilinear
//! pseudo-product operator, and the Fourier-side quadratic kernel used to
//! cross-validate the solver.

mod m1;
mod phase;
mod pseudo;

pub use m1::{
    m1_eval, sample_frequencies, slice_norm_estimate, MultiplierReport, ShellNorm, SliceNormConfig,
    SliceWeight,
};
pub use phase::{
    verify_phase_bound, verify_phi1_derivative_bounds, DerivativeBoundsReport, PhaseReport,
    PhaseVerifyConfig,
};

/// log10 range covered by the phase-report histogram bins.
pub fn phase_histogram_range() -> (f64, f64) {
    phase::HISTOGRAM_LOG10_RANGE
}
pub use pseudo::{pseudo_product, quadratic_kernel_eval};
