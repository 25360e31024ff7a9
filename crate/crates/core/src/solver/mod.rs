//! Nonlinear evolution of the ion Euler-Poisson system in (ρ, ψ) variables
//! with Boltzmann electrons on a periodic box, plus a pure-Euler comparison
//! mode and a direct (ρ, v) vector formulation for cross-validation.
//!
//! The momentum equation is integrated in scalar potential form
//!   ∂_t ψ = -½|∇ψ|² - ln(1+ρ) - φ(ρ),
//! the gradient of which reproduces the velocity equation; the integration
//! constant is fixed by the mean-zero gauge each step. Time stepping acts on
//! the diagonalizing variable α₁ = ρ - (i/q(|∇|))|∇|ψ, whose linear phase
//! e^{-itp(|∇|)} is applied exactly (integrating factor), so only the
//! quadratic-and-higher terms are integrated numerically.

mod poisson;
mod rhs;
mod step;
mod vector;

pub use poisson::{boltzmann_poisson_solve, PoissonSolution};
pub use rhs::{alpha_nonlinear, rhs};
pub use step::{run, step, step_with_stats, RunResult, StepStats};
pub use vector::{vector_velocity_run, VectorRunResult, VectorState};

use crate::dispersion;
use crate::fields::{self, Grid3, RealField, SpectralField};
use crate::{Complex, Error, Result};
use rayon::prelude::*;

/// (ρ, ψ) at a time stamp: density perturbation about n₀ = 1 and velocity
/// potential, both mean-zero on the box; v = ∇ψ is irrotational by
/// construction.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub rho: RealField,
    pub psi: RealField,
    pub t: f64,
}

impl FluidState {
    /// Validates density positivity and the neutral-perturbation gauge;
    /// the ψ mean (a pure gauge freedom) is subtracted.
    pub fn new(rho: RealField, mut psi: RealField, t: f64) -> Result<FluidState> {
        if rho.grid != psi.grid {
            return Err(Error::Shape("rho and psi live on different grids".into()));
        }
        let min_density = 1.0 + rho.data.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_density <= 0.0 {
            return Err(Error::DensityPositivity(min_density));
        }
        let mean = rho.mean();
        if mean.abs() > 1e-12 * rho.sup_abs().max(1.0) {
            return Err(Error::NonzeroMean(mean));
        }
        psi.subtract_mean();
        Ok(FluidState { rho, psi, t })
    }

    pub fn zeros(grid: Grid3) -> FluidState {
        FluidState {
            rho: RealField::zeros(grid),
            psi: RealField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.rho.grid
    }

    /// Total perturbation mass ∫ρ dx.
    pub fn mass(&self) -> f64 {
        self.rho.mean() * self.grid().volume()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EulerPoisson,
    PureEuler,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "euler_poisson" => Ok(Mode::EulerPoisson),
            "pure_euler" => Ok(Mode::PureEuler),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }

    /// Half-wave symbol of the linearization: p(r) with Poisson coupling,
    /// the acoustic r without.
    #[inline]
    pub fn omega(self, r: f64) -> f64 {
        match self {
            Mode::EulerPoisson => dispersion::p(r),
            Mode::PureEuler => r,
        }
    }

    /// The diagonalization weight: α = ρ ∓ (i/q_sym(|∇|))|∇|ψ.
    #[inline]
    pub fn q_sym(self, r: f64) -> f64 {
        match self {
            Mode::EulerPoisson => dispersion::q(r),
            Mode::PureEuler => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rk4IntegratingFactor,
    Etdrk4,
}

impl Integrator {
    pub fn parse(s: &str) -> Result<Integrator> {
        match s {
            "rk4_integrating_factor" => Ok(Integrator::Rk4IntegratingFactor),
            "etdrk4" => Ok(Integrator::Etdrk4),
            other => Err(Error::Config(format!("unknown integrator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid3,
    pub dt: f64,
    pub t_end: f64,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub mode: Mode,
    pub integrator: Integrator,
    pub snapshot_every: usize,
    pub k_norm: u32,
}

impl SolverConfig {
    pub fn defaults(grid: Grid3) -> SolverConfig {
        SolverConfig {
            grid,
            dt: 0.05,
            t_end: 50.0,
            poisson_tol: 1e-12,
            poisson_max_iter: 200,
            mode: Mode::EulerPoisson,
            integrator: Integrator::Rk4IntegratingFactor,
            snapshot_every: 20,
            k_norm: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::Config("dt must be positive and t_end nonnegative".into()));
        }
        if self.poisson_tol <= 0.0 || self.poisson_max_iter == 0 || self.snapshot_every == 0 {
            return Err(Error::Config("poisson_tol, poisson_max_iter, snapshot_every must be positive".into()));
        }
        Ok(())
    }
}

/// The complex diagonalizing pair α_j = ρ + (-1)^j (i/q(|∇|))|∇|ψ, stored
/// spectrally. For real (ρ, ψ) the two components are pointwise complex
/// conjugates in physical space.
#[derive(Debug, Clone)]
pub struct AlphaPair {
    pub alpha1: SpectralField,
    pub alpha2: SpectralField,
}

fn check_mean_zero_pair(rho_hat: &SpectralField, psi_hat: &SpectralField) -> Result<()> {
    let v = rho_hat.grid.volume();
    let m_rho = rho_hat.data[0].norm() / v;
    let m_psi = psi_hat.data[0].norm() / v;
    let scale = rho_hat.l2_box().max(psi_hat.l2_box()).max(1.0);
    if m_rho > 1e-10 * scale || m_psi > 1e-10 * scale {
        return Err(Error::NonzeroMean(m_rho.max(m_psi)));
    }
    Ok(())
}

/// α̂₁ = ρ̂ - (i/q)|ξ|ψ̂ for the given mode's q symbol.
pub fn to_alpha1_hat(state: &FluidState, mode: Mode) -> Result<SpectralField> {
    let rho_hat = fields::transform_forward(&state.rho);
    let psi_hat = fields::transform_forward(&state.psi);
    check_mean_zero_pair(&rho_hat, &psi_hat)?;
    let grid = state.grid();
    let mut out = SpectralField::zeros(grid);
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        let s = Complex::new(0.0, r / mode.q_sym(r)) * psi_hat.data[idx];
        *c = rho_hat.data[idx] - s;
    });
    Ok(out)
}

pub fn to_alpha(state: &FluidState, mode: Mode) -> Result<AlphaPair> {
    let alpha1 = to_alpha1_hat(state, mode)?;
    let rho_hat = fields::transform_forward(&state.rho);
    let grid = state.grid();
    let mut alpha2 = SpectralField::zeros(grid);
    alpha2
        .data
        .par_iter_mut().with_min_len(1 << 15)
        .enumerate()
        .for_each(|(idx, c)| *c = 2.0 * rho_hat.data[idx] - alpha1.data[idx]);
    Ok(AlphaPair { alpha1, alpha2 })
}

/// Hermitian/anti-Hermitian split of α̂₁ into (ρ̂, ŝ) with ŝ = (i/q)|ξ|ψ̂:
/// ρ̂(ξ) = (α̂₁(ξ) + conj(α̂₁(-ξ)))/2 and ŝ(ξ) = (conj(α̂₁(-ξ)) - α̂₁(ξ))/2.
/// This projection is what keeps α₂ = conj(α₁) exact along the flow.
pub(crate) fn hermitian_split(alpha1: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = alpha1.grid;
    let n = grid.n;
    let mut rho_hat = SpectralField::zeros(grid);
    let mut s_hat = SpectralField::zeros(grid);
    let data = &alpha1.data;
    rho_hat
        .data
        .par_iter_mut().with_min_len(1 << 15)
        .zip(s_hat.data.par_iter_mut().with_min_len(1 << 15))
        .enumerate()
        .for_each(|(idx, (r, s))| {
            let i = idx % n;
            let j = (idx / n) % n;
            let k = idx / (n * n);
            let flip = grid.idx((n - i) % n, (n - j) % n, (n - k) % n);
            let a = data[idx];
            let b = data[flip].conj();
            *r = 0.5 * (a + b);
            *s = 0.5 * (b - a);
        });
    (rho_hat, s_hat)
}

/// Reconstruct the real state from α̂₁: ψ̂ = -i q ŝ / |ξ| with the ξ=0 mode
/// gauged to zero.
pub fn from_alpha1_hat(alpha1: &SpectralField, mode: Mode, t: f64) -> Result<FluidState> {
    let (rho_hat, s_hat) = hermitian_split(alpha1);
    let grid = alpha1.grid;
    let mut psi_hat = SpectralField::zeros(grid);
    psi_hat.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        if r > 0.0 {
            *c = Complex::new(0.0, -mode.q_sym(r) / r) * s_hat.data[idx];
        }
    });
    let rho = fields::transform_inverse(&rho_hat);
    let psi = fields::transform_inverse(&psi_hat);
    FluidState::new(rho, psi, t)
}

pub fn from_alpha(pair: &AlphaPair, mode: Mode, t: f64) -> Result<FluidState> {
    from_alpha1_hat(&pair.alpha1, mode, t)
}

/// Irrotational Gaussian data: ρ₀ = ε(G - mean), ψ₀ = εσ(G - mean) with
/// G = exp(-|x-c|²/σ²), spectrally truncated to the 2/3 ball so products stay
/// alias-free from the first step.
pub fn initial_gaussian(grid: Grid3, eps: f64, sigma: f64, center: [f64; 3]) -> Result<FluidState> {
    if sigma <= 0.0 || sigma > grid.box_len / 8.0 {
        return Err(Error::Config(format!(
            "sigma must lie in (0, L/8] for negligible wrap-around, got {sigma}"
        )));
    }
    let l = grid.box_len;
    let g = RealField::from_fn(grid, |x| {
        let mut d2 = 0.0;
        for ax in 0..3 {
            // nearest periodic image
            let mut d = (x[ax] - center[ax]).abs();
            if d > l / 2.0 {
                d = l - d;
            }
            d2 += d * d;
        }
        (-d2 / (sigma * sigma)).exp()
    });
    let mut gh = fields::transform_forward(&g);
    fields::dealias_in_place(&mut gh);
    gh.data[0] = Complex::new(0.0, 0.0);
    let base = fields::transform_inverse(&gh);
    let rho = RealField {
        grid,
        data: base.data.iter().map(|v| eps * v).collect(),
    };
    let psi = RealField {
        grid,
        data: base.data.iter().map(|v| eps * sigma * v).collect(),
    };
    FluidState::new(rho, psi, 0.0)
}

/// One diagnostics record; `curl_res` is populated only by the vector run.
#[derive(Debug, Clone)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub sup_rho: f64,
    pub sup_v: f64,
    pub h2k: f64,
    pub hm1: f64,
    pub l10w: f64,
    pub poisson_res: f64,
    pub curl_res: Option<f64>,
}

pub(crate) fn diagnostics_row(
    state: &FluidState,
    cfg: &SolverConfig,
    poisson_res: f64,
    curl_res: Option<f64>,
) -> Result<DiagnosticsRow> {
    let alpha1 = to_alpha1_hat(state, cfg.mode)?;
    let k = cfg.k_norm as f64;
    let psi_hat = fields::transform_forward(&state.psi);
    let v = fields::gradient(&psi_hat);
    let sup_v = v
        .iter()
        .map(|f| f.sup_abs())
        .fold(0.0_f64, f64::max);
    let h2k = crate::norms::norm(&alpha1, &crate::norms::NormSpec::Hs(2.0 * k))?;
    let hm1 = crate::norms::norm(&alpha1, &crate::norms::NormSpec::Hdot(-1.0))?;
    let l10 = crate::norms::norm(&alpha1, &crate::norms::NormSpec::Wkp(k, 10.0))?;
    Ok(DiagnosticsRow {
        t: state.t,
        mass: state.mass(),
        sup_rho: state.rho.sup_abs(),
        sup_v,
        h2k,
        hm1,
        l10w: (1.0 + state.t).powf(16.0 / 15.0) * l10,
        poisson_res,
        curl_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid3 {
        Grid3::new(16, 16.0).unwrap()
    }

    fn small_random_state(seed: u64, amp: f64) -> FluidState {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = RealField::zeros(g);
        let mut psi = RealField::zeros(g);
        for v in rho.data.iter_mut() {
            *v = amp * rng.gen_range(-1.0..1.0);
        }
        for v in psi.data.iter_mut() {
            *v = amp * rng.gen_range(-1.0..1.0);
        }
        rho.subtract_mean();
        psi.subtract_mean();
        FluidState::new(rho, psi, 0.0).unwrap()
    }

    #[test]
    fn state_validation() {
        let g = grid();
        let bad = RealField::from_fn(g, |_| -2.0);
        assert!(matches!(
            FluidState::new(bad, RealField::zeros(g), 0.0),
            Err(Error::DensityPositivity(_))
        ));
        let nonzero = RealField::from_fn(g, |_| 0.5);
        assert!(matches!(
            FluidState::new(nonzero, RealField::zeros(g), 0.0),
            Err(Error::NonzeroMean(_))
        ));
    }

    #[test]
    fn alpha_of_pure_density() {
        let g = grid();
        let mut state = small_random_state(1, 0.01);
        state.psi = RealField::zeros(g);
        let pair = to_alpha(&state, Mode::EulerPoisson).unwrap();
        let rho_hat = fields::transform_forward(&state.rho);
        let scale = rho_hat.l2_box();
        for ((a, b), r) in pair
            .alpha1
            .data
            .iter()
            .zip(&pair.alpha2.data)
            .zip(&rho_hat.data)
        {
            assert!((a - r).norm() < 1e-12 * scale);
            assert!((b - r).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn alpha_of_pure_potential_is_antisymmetric() {
        let mut state = small_random_state(2, 0.01);
        state.rho = RealField::zeros(state.grid());
        let pair = to_alpha(&state, Mode::EulerPoisson).unwrap();
        let scale = pair.alpha1.l2_box().max(1e-300);
        for (a, b) in pair.alpha1.data.iter().zip(&pair.alpha2.data) {
            assert!((a + b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn alpha_roundtrip_and_conjugacy() {
        let state = small_random_state(3, 1e-3);
        let pair = to_alpha(&state, Mode::EulerPoisson).unwrap();

        // Pointwise conjugacy in physical space.
        let a1 = fields::transform_inverse_c(&pair.alpha1);
        let a2 = fields::transform_inverse_c(&pair.alpha2);
        let scale = a1.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        for (x, y) in a1.iter().zip(&a2) {
            assert!((y - x.conj()).norm() < 1e-12 * scale);
        }

        let back = from_alpha(&pair, Mode::EulerPoisson, state.t).unwrap();
        let sup_r = state.rho.sup_abs();
        let sup_p = state.psi.sup_abs();
        for (a, b) in back.rho.data.iter().zip(&state.rho.data) {
            assert!((a - b).abs() < 1e-12 * sup_r.max(1.0));
        }
        for (a, b) in back.psi.data.iter().zip(&state.psi.data) {
            assert!((a - b).abs() < 1e-12 * sup_p.max(1.0));
        }
    }

    #[test]
    fn to_alpha_rejects_nonzero_mean_psi() {
        let g = grid();
        let rho = RealField::zeros(g);
        let psi = RealField::from_fn(g, |_| 1.0);
        let state = FluidState {
            rho,
            psi,
            t: 0.0,
        };
        assert!(to_alpha(&state, Mode::EulerPoisson).is_err());
    }

    #[test]
    fn gaussian_datum_is_gauged_and_positive() {
        let g = Grid3::new(32, 64.0).unwrap();
        let st = initial_gaussian(g, 1e-3, 4.0, [32.0, 32.0, 32.0]).unwrap();
        assert!(st.rho.mean().abs() < 1e-15);
        assert!(st.rho.sup_abs() < 1.5e-3);
        assert_relative_eq!(st.psi.sup_abs() / st.rho.sup_abs(), 4.0, max_relative = 0.2);
        assert!(initial_gaussian(g, 1e-3, 20.0, [0.0; 3]).is_err());
    }
}
