//! Right-hand sides. The full rhs in (ρ, ψ) form is
//!   dρ = -div((1+ρ)∇ψ),   dψ = -½|∇ψ|² - ln(1+ρ) - φ(ρ),
//! with all products dealiased and dψ gauged to zero mean. The stepper uses
//! the nonlinear-only part so the exactly-integrated linear phase never has
//! to be subtracted numerically.

use super::{FluidState, Mode, SolverConfig};
use crate::fields::{self, RealField, SpectralField};
use crate::{Complex, Error, Result};
use rayon::prelude::*;

pub(crate) struct NonlinearParts {
    /// Spectral -div(ρ∇ψ), dealiased.
    pub drho_nl: SpectralField,
    /// Spectral -½|∇ψ|² - (ln(1+ρ) - ρ) - (φ(ρ) - (1-Δ)^{-1}ρ), dealiased,
    /// mean gauged to zero. In pure-Euler mode the φ terms are absent.
    pub dpsi_nl: SpectralField,
    pub poisson_res: f64,
    pub sup_v: f64,
}

pub(crate) fn nonlinear_parts(
    rho: &RealField,
    psi: &RealField,
    cfg: &SolverConfig,
) -> Result<NonlinearParts> {
    let grid = rho.grid;
    let min_density = 1.0 + rho.data.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_density <= 0.0 {
        return Err(Error::DensityPositivity(min_density));
    }

    let psi_hat = fields::transform_forward(psi);
    let v = fields::gradient(&psi_hat);
    let sup_v = v.iter().map(|f| f.sup_abs()).fold(0.0_f64, f64::max);

    // -div(ρ v), products in physical space, then dealias.
    let mut drho_nl = SpectralField::zeros(grid);
    for (ax, v_ax) in v.iter().enumerate() {
        let prod = RealField {
            grid,
            data: rho
                .data
                .par_iter().with_min_len(1 << 15)
                .zip(&v_ax.data)
                .map(|(r, w)| r * w)
                .collect(),
        };
        let d = fields::derivative(&fields::transform_forward(&prod), ax);
        drho_nl
            .data
            .par_iter_mut().with_min_len(1 << 15)
            .zip(&d.data)
            .for_each(|(a, b)| *a -= b);
    }
    fields::dealias_in_place(&mut drho_nl);

    // -½|v|² - (ln(1+ρ) - ρ) - nonlinear part of φ.
    let mut nl_phys: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .with_min_len(1 << 15)
        .map(|i| {
            let vv = v[0].data[i] * v[0].data[i]
                + v[1].data[i] * v[1].data[i]
                + v[2].data[i] * v[2].data[i];
            let r = rho.data[i];
            -0.5 * vv - (r.ln_1p() - r)
        })
        .collect();

    let poisson_res = if cfg.mode == Mode::EulerPoisson {
        let sol = super::poisson::boltzmann_poisson_solve(rho, cfg.poisson_tol, cfg.poisson_max_iter)?;
        let rho_hat = fields::transform_forward(rho);
        let mut phi_nl_hat = sol.phi_hat.clone();
        phi_nl_hat
            .data
            .par_iter_mut().with_min_len(1 << 15)
            .enumerate()
            .for_each(|(idx, c)| {
                let r = grid.xi_abs_at(idx);
                *c -= rho_hat.data[idx] / (1.0 + r * r);
            });
        let phi_nl = fields::transform_inverse(&phi_nl_hat);
        nl_phys
            .par_iter_mut().with_min_len(1 << 15)
            .zip(&phi_nl.data)
            .for_each(|(a, p)| *a -= p);
        sol.residual
    } else {
        0.0
    };

    let mut dpsi_nl = fields::transform_forward(&RealField {
        grid,
        data: nl_phys,
    });
    dpsi_nl.data[0] = Complex::new(0.0, 0.0); // mean-zero gauge
    fields::dealias_in_place(&mut dpsi_nl);

    Ok(NonlinearParts {
        drho_nl,
        dpsi_nl,
        poisson_res,
        sup_v,
    })
}

/// Nonlinear part of the α₁ equation: Q₁ + N₁ = FT(dρ_nl) - (i/q)|ξ| FT(dψ_nl).
pub(crate) fn alpha_nonlinear_rhs(
    alpha1: &SpectralField,
    cfg: &SolverConfig,
) -> Result<(SpectralField, f64, f64)> {
    let (rho_hat, s_hat) = super::hermitian_split(alpha1);
    let grid = alpha1.grid;
    let mut psi_hat = SpectralField::zeros(grid);
    psi_hat.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        if r > 0.0 {
            *c = Complex::new(0.0, -cfg.mode.q_sym(r) / r) * s_hat.data[idx];
        }
    });
    let rho = fields::transform_inverse(&rho_hat);
    let psi = fields::transform_inverse(&psi_hat);
    let parts = nonlinear_parts(&rho, &psi, cfg)?;
    let mut out = SpectralField::zeros(grid);
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        let s = Complex::new(0.0, r / cfg.mode.q_sym(r)) * parts.dpsi_nl.data[idx];
        *c = parts.drho_nl.data[idx] - s;
    });
    Ok((out, parts.poisson_res, parts.sup_v))
}

/// Nonlinear part of the α₁ equation for an explicit state: the quadratic
/// and higher terms Q₁ + N₁, spectrally. Used by the Fourier-side kernel
/// cross-validation.
pub fn alpha_nonlinear(state: &FluidState, cfg: &SolverConfig) -> Result<SpectralField> {
    let alpha1 = super::to_alpha1_hat(state, cfg.mode)?;
    alpha_nonlinear_rhs(&alpha1, cfg).map(|(f, _, _)| f)
}

/// The full right-hand side in (ρ, ψ) variables.
pub fn rhs(state: &FluidState, cfg: &SolverConfig) -> Result<(RealField, RealField)> {
    let grid = state.grid();
    let parts = nonlinear_parts(&state.rho, &state.psi, cfg)?;
    let rho_hat = fields::transform_forward(&state.rho);
    let psi_hat = fields::transform_forward(&state.psi);

    // Linear parts: dρ_lin = -Δψ = +|ξ|²ψ̂; dψ_lin = -(1 + (1-Δ)^{-1})ρ
    // (pure Euler keeps only the -ρ pressure term).
    let mut drho = parts.drho_nl.clone();
    drho.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        *c += r * r * psi_hat.data[idx];
    });
    let mut dpsi = parts.dpsi_nl.clone();
    let poisson_on = cfg.mode == Mode::EulerPoisson;
    dpsi.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        let lin = if poisson_on {
            1.0 + 1.0 / (1.0 + r * r)
        } else {
            1.0
        };
        *c -= lin * rho_hat.data[idx];
    });
    Ok((fields::transform_inverse(&drho), fields::transform_inverse(&dpsi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cfg(grid: Grid3) -> SolverConfig {
        SolverConfig::defaults(grid)
    }

    #[test]
    fn zero_state_has_zero_rhs() {
        let g = Grid3::new(16, 16.0).unwrap();
        let st = FluidState::zeros(g);
        let (drho, dpsi) = rhs(&st, &cfg(g)).unwrap();
        assert_eq!(drho.sup_abs(), 0.0);
        assert_eq!(dpsi.sup_abs(), 0.0);
    }

    #[test]
    fn linearization_of_single_mode_potential() {
        let g = Grid3::new(16, 16.0).unwrap();
        let kk = 2.0 * std::f64::consts::PI / g.box_len;
        let psi = RealField::from_fn(g, |x| 1e-9 * (kk * x[0]).cos());
        let st = FluidState::new(RealField::zeros(g), psi, 0.0).unwrap();
        let (drho, _) = rhs(&st, &cfg(g)).unwrap();
        // dρ = -Δψ = k²ψ at linear order (the ρv term vanishes identically).
        let expect = RealField::from_fn(g, |x| 1e-9 * kk * kk * (kk * x[0]).cos());
        let scale = expect.sup_abs();
        for (a, b) in drho.data.iter().zip(&expect.data) {
            assert!((a - b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn gradient_of_dpsi_matches_velocity_equation() {
        // ∇(dψ) must equal -(v·∇)v - ∇ln(1+ρ) - ∇φ evaluated directly.
        let g = Grid3::new(16, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rho = RealField::zeros(g);
        let mut psi = RealField::zeros(g);
        for v in rho.data.iter_mut() {
            *v = 1e-3 * rng.gen_range(-1.0..1.0);
        }
        for v in psi.data.iter_mut() {
            *v = 1e-3 * rng.gen_range(-1.0..1.0);
        }
        rho.subtract_mean();
        psi.subtract_mean();
        // Keep data in the 2/3 ball so product identities are alias-free.
        let mut rh = fields::transform_forward(&rho);
        fields::dealias_in_place(&mut rh);
        let rho = fields::transform_inverse(&rh);
        let mut ph = fields::transform_forward(&psi);
        fields::dealias_in_place(&mut ph);
        let psi = fields::transform_inverse(&ph);
        let st = FluidState::new(rho.clone(), psi.clone(), 0.0).unwrap();
        let mut c = cfg(g);
        c.poisson_tol = 1e-14;
        let (_, dpsi) = rhs(&st, &c).unwrap();
        let grad_dpsi = fields::gradient(&fields::transform_forward(&dpsi));

        // Direct velocity-form right side, dealiased the same way the solver
        // dealiases its scalars.
        let psi_hat = fields::transform_forward(&psi);
        let v = fields::gradient(&psi_hat);
        let sol = super::super::poisson::boltzmann_poisson_solve(&rho, 1e-14, 200).unwrap();
        let log_rho = RealField {
            grid: g,
            data: rho.data.iter().map(|r| r.ln_1p()).collect(),
        };
        let mut scalars = fields::transform_forward(&log_rho);
        scalars
            .data
            .iter_mut()
            .zip(&sol.phi_hat.data)
            .for_each(|(a, b)| *a += b);
        fields::dealias_in_place(&mut scalars);
        let grad_scal = fields::gradient(&scalars);

        for ax in 0..3 {
            // -(v·∇)v_ax via physical products, dealiased like the solver.
            let mut adv = SpectralField::zeros(g);
            for j in 0..3 {
                let dv = fields::transform_inverse(&fields::derivative(
                    &fields::transform_forward(&v[ax]),
                    j,
                ));
                let prod = RealField {
                    grid: g,
                    data: v[j].data.iter().zip(&dv.data).map(|(a, b)| a * b).collect(),
                };
                let ph = fields::transform_forward(&prod);
                adv.data.iter_mut().zip(&ph.data).for_each(|(a, b)| *a += b);
            }
            fields::dealias_in_place(&mut adv);
            let adv = fields::transform_inverse(&adv);

            let scale = grad_scal[ax].sup_abs().max(1e-12);
            for i in 0..g.len() {
                let direct = -adv.data[i] - grad_scal[ax].data[i];
                let got = grad_dpsi[ax].data[i];
                assert!(
                    (got - direct).abs() < 1e-10 * scale,
                    "axis {ax} site {i}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn density_positivity_guard_fires() {
        let g = Grid3::new(16, 16.0).unwrap();
        let kk = 2.0 * std::f64::consts::PI / g.box_len;
        let mut rho = RealField::from_fn(g, |x| -2.5 * (kk * x[0]).cos().powi(2));
        rho.subtract_mean();
        let st = FluidState {
            rho,
            psi: RealField::zeros(g),
            t: 0.0,
        };
        assert!(matches!(
            rhs(&st, &cfg(g)),
            Err(Error::DensityPositivity(_))
        ));
    }
}
