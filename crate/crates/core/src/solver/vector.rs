//! Direct (ρ, v) evolution without a potential: plain RK4 on
//!   ∂_t ρ = -div((1+ρ)v),   ∂_t v = -(v·∇)v - ∇ln(1+ρ) - ∇φ(ρ),
//! with the same Poisson solve. Used to confirm that irrotationality is
//! preserved by the flow and to cross-check the potential formulation.

use super::{DiagnosticsRow, FluidState, Mode, SolverConfig};
use crate::fields::{self, Grid3, RealField, SpectralField};
use crate::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct VectorState {
    pub rho: RealField,
    pub v: [RealField; 3],
    pub t: f64,
}

impl VectorState {
    pub fn new(rho: RealField, v: [RealField; 3], t: f64) -> Result<VectorState> {
        let grid = rho.grid;
        for comp in &v {
            if comp.grid != grid {
                return Err(Error::Shape("velocity components on different grids".into()));
            }
        }
        let mean = rho.mean();
        if mean.abs() > 1e-12 * rho.sup_abs().max(1.0) {
            return Err(Error::NonzeroMean(mean));
        }
        Ok(VectorState { rho, v, t })
    }

    pub fn from_potential(state: &FluidState) -> VectorState {
        let psi_hat = fields::transform_forward(&state.psi);
        VectorState {
            rho: state.rho.clone(),
            v: fields::gradient(&psi_hat),
            t: state.t,
        }
    }

    pub fn curl_l2(&self) -> f64 {
        let v_hat = [
            fields::transform_forward(&self.v[0]),
            fields::transform_forward(&self.v[1]),
            fields::transform_forward(&self.v[2]),
        ];
        fields::curl_l2(&v_hat)
    }
}

struct VecRhs {
    drho: SpectralField,
    dv: [SpectralField; 3],
    poisson_res: f64,
}

fn vector_rhs(rho: &RealField, v: &[RealField; 3], cfg: &SolverConfig) -> Result<VecRhs> {
    let grid = rho.grid;
    let min_density = 1.0 + rho.data.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_density <= 0.0 {
        return Err(Error::DensityPositivity(min_density));
    }

    // -div((1+ρ)v)
    let mut drho = SpectralField::zeros(grid);
    for ax in 0..3 {
        let prod = RealField {
            grid,
            data: rho
                .data
                .par_iter().with_min_len(1 << 15)
                .zip(&v[ax].data)
                .map(|(r, w)| (1.0 + r) * w)
                .collect(),
        };
        let d = fields::derivative(&fields::transform_forward(&prod), ax);
        drho.data
            .par_iter_mut().with_min_len(1 << 15)
            .zip(&d.data)
            .for_each(|(a, b)| *a -= b);
    }
    fields::dealias_in_place(&mut drho);

    // scalar pressure/electric part: ln(1+ρ) + φ, differentiated spectrally
    let log_rho = RealField {
        grid,
        data: rho.data.par_iter().with_min_len(1 << 15).map(|r| r.ln_1p()).collect(),
    };
    let mut scal = fields::transform_forward(&log_rho);
    let poisson_res = if cfg.mode == Mode::EulerPoisson {
        let sol =
            super::poisson::boltzmann_poisson_solve(rho, cfg.poisson_tol, cfg.poisson_max_iter)?;
        scal.data
            .par_iter_mut().with_min_len(1 << 15)
            .zip(&sol.phi_hat.data)
            .for_each(|(a, b)| *a += b);
        sol.residual
    } else {
        0.0
    };
    fields::dealias_in_place(&mut scal);

    let v_hat = [
        fields::transform_forward(&v[0]),
        fields::transform_forward(&v[1]),
        fields::transform_forward(&v[2]),
    ];
    let dv = [0, 1, 2].map(|ax| {
        // -(v·∇)v_ax
        let mut adv = SpectralField::zeros(grid);
        for j in 0..3 {
            let dvj = fields::transform_inverse(&fields::derivative(&v_hat[ax], j));
            let prod = RealField {
                grid,
                data: v[j]
                    .data
                    .par_iter().with_min_len(1 << 15)
                    .zip(&dvj.data)
                    .map(|(a, b)| a * b)
                    .collect(),
            };
            let ph = fields::transform_forward(&prod);
            adv.data
                .par_iter_mut().with_min_len(1 << 15)
                .zip(&ph.data)
                .for_each(|(a, b)| *a += b);
        }
        fields::dealias_in_place(&mut adv);
        let grad_scal = fields::derivative(&scal, ax);
        let mut out = SpectralField::zeros(grid);
        out.data
            .par_iter_mut().with_min_len(1 << 15)
            .enumerate()
            .for_each(|(i, c)| *c = -adv.data[i] - grad_scal.data[i]);
        out
    });

    Ok(VecRhs {
        drho,
        dv,
        poisson_res,
    })
}

fn to_phys(state_hat: &(SpectralField, [SpectralField; 3]), grid: Grid3, t: f64) -> (RealField, [RealField; 3], f64) {
    let rho = fields::transform_inverse(&state_hat.0);
    let v = [
        fields::transform_inverse(&state_hat.1[0]),
        fields::transform_inverse(&state_hat.1[1]),
        fields::transform_inverse(&state_hat.1[2]),
    ];
    let _ = grid;
    (rho, v, t)
}

pub struct VectorRunResult {
    pub rows: Vec<DiagnosticsRow>,
    pub max_curl: f64,
    pub outcome: Result<VectorState>,
}

/// RK4 evolution of (ρ, v); reports max_t ‖curl v‖_{L²}.
pub fn vector_velocity_run(cfg: &SolverConfig, initial: VectorState) -> VectorRunResult {
    let mut rows = Vec::new();
    if let Err(e) = cfg.validate() {
        return VectorRunResult {
            rows,
            max_curl: f64::NAN,
            outcome: Err(e),
        };
    }
    let curl0 = initial.curl_l2();
    if curl0 > 1e-12 * (1.0 + initial.v.iter().map(|f| f.sup_abs()).fold(0.0_f64, f64::max)) {
        return VectorRunResult {
            rows,
            max_curl: curl0,
            outcome: Err(Error::NotAGradient {
                curl: curl0,
                tol: 1e-12,
            }),
        };
    }

    let grid = initial.rho.grid;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = initial;
    let mut max_curl: f64 = curl0;
    let mut last_res = 0.0;

    let record = |state: &VectorState, res: f64, rows: &mut Vec<DiagnosticsRow>, max_curl: &mut f64| {
        let curl = state.curl_l2();
        *max_curl = max_curl.max(curl);
        let sup_v = state.v.iter().map(|f| f.sup_abs()).fold(0.0_f64, f64::max);
        rows.push(DiagnosticsRow {
            t: state.t,
            mass: state.rho.mean() * grid.volume(),
            sup_rho: state.rho.sup_abs(),
            sup_v,
            h2k: f64::NAN,
            hm1: f64::NAN,
            l10w: f64::NAN,
            poisson_res: res,
            curl_res: Some(curl),
        });
    };
    record(&state, 0.0, &mut rows, &mut max_curl);

    for istep in 1..=steps {
        let dt = cfg.dt;
        let r = (|| -> Result<VectorState> {
            let y0 = (
                fields::transform_forward(&state.rho),
                [
                    fields::transform_forward(&state.v[0]),
                    fields::transform_forward(&state.v[1]),
                    fields::transform_forward(&state.v[2]),
                ],
            );
            let k1 = vector_rhs(&state.rho, &state.v, cfg)?;
            last_res = k1.poisson_res;
            let stage = |k: &VecRhs, h: f64| {
                let rho_hat = add_scaled(&y0.0, &k.drho, h);
                let v_hat = [
                    add_scaled(&y0.1[0], &k.dv[0], h),
                    add_scaled(&y0.1[1], &k.dv[1], h),
                    add_scaled(&y0.1[2], &k.dv[2], h),
                ];
                to_phys(&(rho_hat, v_hat), grid, state.t + h)
            };
            let (r2, v2, _) = stage(&k1, dt / 2.0);
            let k2 = vector_rhs(&r2, &v2, cfg)?;
            let (r3, v3, _) = stage(&k2, dt / 2.0);
            let k3 = vector_rhs(&r3, &v3, cfg)?;
            let (r4, v4, _) = stage(&k3, dt);
            let k4 = vector_rhs(&r4, &v4, cfg)?;

            let combine = |a: &SpectralField, k1: &SpectralField, k2: &SpectralField, k3: &SpectralField, k4: &SpectralField| {
                let mut out = a.clone();
                out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(i, c)| {
                    *c += dt / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
                });
                out
            };
            let rho_hat = combine(&y0.0, &k1.drho, &k2.drho, &k3.drho, &k4.drho);
            let v_hat = [
                combine(&y0.1[0], &k1.dv[0], &k2.dv[0], &k3.dv[0], &k4.dv[0]),
                combine(&y0.1[1], &k1.dv[1], &k2.dv[1], &k3.dv[1], &k4.dv[1]),
                combine(&y0.1[2], &k1.dv[2], &k2.dv[2], &k3.dv[2], &k4.dv[2]),
            ];
            let (rho, v, t) = to_phys(&(rho_hat, v_hat), grid, state.t + dt);
            Ok(VectorState { rho, v, t })
        })();
        match r {
            Ok(next) => {
                state = next;
                if istep % cfg.snapshot_every == 0 || istep == steps {
                    record(&state, last_res, &mut rows, &mut max_curl);
                }
            }
            Err(e) => {
                return VectorRunResult {
                    rows,
                    max_curl,
                    outcome: Err(e),
                };
            }
        }
    }
    VectorRunResult {
        rows,
        max_curl,
        outcome: Ok(state),
    }
}

fn add_scaled(a: &SpectralField, b: &SpectralField, h: f64) -> SpectralField {
    let mut out = a.clone();
    out.data
        .par_iter_mut().with_min_len(1 << 15)
        .zip(&b.data)
        .for_each(|(x, y)| *x += h * y);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{initial_gaussian, run, SolverConfig};

    fn cfg(grid: Grid3, t_end: f64) -> SolverConfig {
        // Plain RK4 integrates the linear oscillation numerically, so the
        // cross-formulation comparisons need a small dt.
        let mut c = SolverConfig::defaults(grid);
        c.dt = 0.005;
        c.t_end = t_end;
        c.snapshot_every = 50;
        c
    }

    #[test]
    fn zero_velocity_matches_potential_run() {
        let g = Grid3::new(16, 16.0).unwrap();
        let mut st = initial_gaussian(g, 1e-3, 2.0, [8.0, 8.0, 8.0]).unwrap();
        st.psi = crate::fields::RealField::zeros(g);
        let c = cfg(g, 1.0);
        let vec_initial = VectorState::from_potential(&st);
        let vres = vector_velocity_run(&c, vec_initial);
        let vfinal = vres.outcome.unwrap();
        let pres = run(&c, st, None);
        let pfinal = pres.outcome.unwrap();
        let scale = pfinal.rho.sup_abs().max(1e-12);
        for (a, b) in vfinal.rho.data.iter().zip(&pfinal.rho.data) {
            assert!((a - b).abs() < 1e-9 * scale.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_initial_velocity_matches_potential_run() {
        let g = Grid3::new(16, 16.0).unwrap();
        let st = initial_gaussian(g, 1e-3, 2.0, [8.0, 8.0, 8.0]).unwrap();
        let c = cfg(g, 1.0);
        let vres = vector_velocity_run(&c, VectorState::from_potential(&st));
        let vfinal = vres.outcome.unwrap();
        let pres = run(&c, st, None);
        let pfinal = pres.outcome.unwrap();
        let scale = pfinal.rho.sup_abs();
        for (a, b) in vfinal.rho.data.iter().zip(&pfinal.rho.data) {
            assert!((a - b).abs() < 1e-8 * scale.max(1.0));
        }
        assert!(vres.max_curl < 1e-9);
    }

    #[test]
    fn rotational_initial_data_is_rejected() {
        let g = Grid3::new(16, 16.0).unwrap();
        let kk = 2.0 * std::f64::consts::PI / g.box_len;
        let v = [
            RealField::from_fn(g, |x| 1e-3 * (kk * x[1]).sin()),
            RealField::zeros(g),
            RealField::zeros(g),
        ];
        let st = VectorState::new(RealField::zeros(g), v, 0.0).unwrap();
        let res = vector_velocity_run(&cfg(g, 1.0), st);
        assert!(matches!(res.outcome, Err(Error::NotAGradient { .. })));
    }
    #[test]
    fn formulations_converge_to_each_other_at_fourth_order() {
        // The vector route carries its linear phase through plain RK4, so
        // the gap to the integrating-factor potential route is pure O(dt⁴).
        let g = Grid3::new(16, 16.0).unwrap();
        let st = initial_gaussian(g, 1e-3, 2.0, [8.0, 8.0, 8.0]).unwrap();
        let gap = |dt: f64| {
            let mut c = SolverConfig::defaults(g);
            c.dt = dt;
            c.t_end = 1.0;
            c.snapshot_every = 1000;
            let vfinal = vector_velocity_run(&c, VectorState::from_potential(&st))
                .outcome
                .unwrap();
            let pfinal = run(&c, st.clone(), None).outcome.unwrap();
            vfinal
                .rho
                .data
                .iter()
                .zip(&pfinal.rho.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let (g1, g2) = (gap(0.04), gap(0.02));
        let ratio = g1 / g2;
        assert!(
            (10.0..=24.0).contains(&ratio),
            "gap ratio {ratio} (gaps {g1}, {g2})"
        );
    }
}
