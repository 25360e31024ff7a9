//! Direct Fourier-side bilinear machinery, O(n⁶) and restricted to small
//! grids: the pseudo-product
//!   B[f, g](ξ) = L^{-3} Σ_η m(ξ, η) f̂(ξ-η) ĝ(η)
//! (the discrete weighted convolution; m ≡ 1 reproduces the pointwise
//! product), and the quadratic kernel of the diagonalized system evaluated
//! as an explicit double sum over η, used to cross-validate the solver's
//! pseudo-spectral quadratic terms.
//!
//! Kernel convention: with S = α̂₁ + α̂₂ and D = α̂₂ - α̂₁,
//!   Q̂_j(ξ) = L^{-3} Σ_η { -(i/4)(ξ·η/|η|) q(|η|) S(ξ-η) D(η)
//!            + (-1)^j (i|ξ|/(8 q(|ξ|))) [ B₁ S(ξ-η) S(η) - B₂ D(ξ-η) D(η) ] }
//!   B₁ = 1 + ⟨ξ⟩^{-2}⟨ξ-η⟩^{-2}⟨η⟩^{-2},
//!   B₂ = ((ξ-η)·η)/(|ξ-η||η|) · q(|ξ-η|) q(|η|),
//! the signs fixed against the solver oracle (amplitude extraction).

use crate::dispersion;
use crate::fields::{Grid3, SpectralField};
use crate::solver::AlphaPair;
use crate::{Complex, Error, Result};
use rayon::prelude::*;

pub const MAX_DIRECT_GRID: usize = 32;

fn check_small(grid: Grid3) -> Result<()> {
    if grid.n > MAX_DIRECT_GRID {
        return Err(Error::Config(format!(
            "direct O(n^6) sums are limited to n <= {MAX_DIRECT_GRID}, got {}",
            grid.n
        )));
    }
    Ok(())
}

#[inline]
fn wrap(k: i64, n: i64) -> i64 {
    let mut k = k % n;
    if k >= n / 2 {
        k -= n;
    }
    if k < -n / 2 {
        k += n;
    }
    k
}

#[inline]
fn mode_index(grid: Grid3, k: [i64; 3]) -> usize {
    let n = grid.n as i64;
    let fold = |v: i64| ((v + n) % n) as usize;
    grid.idx(fold(k[0]), fold(k[1]), fold(k[2]))
}

/// B[f, g] with the multiplier evaluated at principal wavenumbers; the
/// convolution wraps like the grid product, so m ≡ 1 is exactly f·g.
pub fn pseudo_product(
    m: &(dyn Fn([f64; 3], [f64; 3]) -> Complex + Sync),
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField> {
    if f.grid != g.grid {
        return Err(Error::Shape("pseudo-product inputs on different grids".into()));
    }
    let grid = f.grid;
    check_small(grid)?;
    let n = grid.n as i64;
    let dxi = 2.0 * std::f64::consts::PI / grid.box_len;
    let modes: Vec<[i64; 3]> = (0..grid.len())
        .map(|idx| {
            let i = idx % grid.n;
            let j = (idx / grid.n) % grid.n;
            let k = idx / (grid.n * grid.n);
            [grid.k_int(i), grid.k_int(j), grid.k_int(k)]
        })
        .collect();

    let mut out = SpectralField::zeros(grid);
    let inv_vol = 1.0 / grid.volume();
    out.data
        .par_iter_mut()
        .enumerate()
        .for_each(|(out_idx, c)| {
            let k_out = modes[out_idx];
            let xi = [
                k_out[0] as f64 * dxi,
                k_out[1] as f64 * dxi,
                k_out[2] as f64 * dxi,
            ];
            let mut acc = Complex::new(0.0, 0.0);
            for (eta_idx, k_eta) in modes.iter().enumerate() {
                let gv = g.data[eta_idx];
                if gv.norm_sqr() == 0.0 {
                    continue;
                }
                let k_f = [
                    wrap(k_out[0] - k_eta[0], n),
                    wrap(k_out[1] - k_eta[1], n),
                    wrap(k_out[2] - k_eta[2], n),
                ];
                let fv = f.data[mode_index(grid, k_f)];
                if fv.norm_sqr() == 0.0 {
                    continue;
                }
                let eta = [
                    k_eta[0] as f64 * dxi,
                    k_eta[1] as f64 * dxi,
                    k_eta[2] as f64 * dxi,
                ];
                acc += m(xi, eta) * fv * gv;
            }
            *c = acc * inv_vol;
        });
    Ok(out)
}

/// Q̂_j(α) by direct double sum; j ∈ {1, 2}. The output is restricted to the
/// 2/3 dealias ball, matching the solver's alias-free pseudo-spectral
/// products mode for mode.
pub fn quadratic_kernel_eval(pair: &AlphaPair, j: usize) -> Result<SpectralField> {
    if j != 1 && j != 2 {
        return Err(Error::Config(format!("alpha index must be 1 or 2, got {j}")));
    }
    if pair.alpha1.grid != pair.alpha2.grid {
        return Err(Error::Shape("alpha pair on different grids".into()));
    }
    let grid = pair.alpha1.grid;
    check_small(grid)?;
    let n = grid.n as i64;
    let dxi = 2.0 * std::f64::consts::PI / grid.box_len;
    let sign_j = if j == 1 { -1.0 } else { 1.0 };

    let len = grid.len();
    let mut s_arr = vec![Complex::new(0.0, 0.0); len];
    let mut d_arr = vec![Complex::new(0.0, 0.0); len];
    for idx in 0..len {
        s_arr[idx] = pair.alpha1.data[idx] + pair.alpha2.data[idx];
        d_arr[idx] = pair.alpha2.data[idx] - pair.alpha1.data[idx];
    }
    let modes: Vec<[i64; 3]> = (0..len)
        .map(|idx| {
            let i = idx % grid.n;
            let jj = (idx / grid.n) % grid.n;
            let k = idx / (grid.n * grid.n);
            [grid.k_int(i), grid.k_int(jj), grid.k_int(k)]
        })
        .collect();

    let mut out = SpectralField::zeros(grid);
    let inv_vol = 1.0 / grid.volume();
    out.data
        .par_iter_mut()
        .enumerate()
        .for_each(|(out_idx, c)| {
            if !crate::fields::inside_dealias_ball(grid, out_idx) {
                return;
            }
            let k_out = modes[out_idx];
            let xi = [
                k_out[0] as f64 * dxi,
                k_out[1] as f64 * dxi,
                k_out[2] as f64 * dxi,
            ];
            let n_xi = dispersion::vec_norm(xi);
            let coef_j =
                Complex::new(0.0, sign_j * n_xi / (8.0 * dispersion::q(n_xi)));
            let mut acc = Complex::new(0.0, 0.0);
            for (eta_idx, k_eta) in modes.iter().enumerate() {
                let s_eta = s_arr[eta_idx];
                let d_eta = d_arr[eta_idx];
                if s_eta.norm_sqr() == 0.0 && d_eta.norm_sqr() == 0.0 {
                    continue;
                }
                let k_b = [
                    wrap(k_out[0] - k_eta[0], n),
                    wrap(k_out[1] - k_eta[1], n),
                    wrap(k_out[2] - k_eta[2], n),
                ];
                let b_idx = mode_index(grid, k_b);
                let s_b = s_arr[b_idx];
                let d_b = d_arr[b_idx];

                let eta = [
                    k_eta[0] as f64 * dxi,
                    k_eta[1] as f64 * dxi,
                    k_eta[2] as f64 * dxi,
                ];
                let b = [
                    k_b[0] as f64 * dxi,
                    k_b[1] as f64 * dxi,
                    k_b[2] as f64 * dxi,
                ];
                let n_eta = dispersion::vec_norm(eta);
                let n_b = dispersion::vec_norm(b);

                // transport: -(i/4)(ξ·η/|η|) q(|η|) S(ξ-η) D(η)
                if n_eta > 0.0 {
                    let w = dispersion::vec_dot(xi, eta) / n_eta * dispersion::q(n_eta);
                    acc += Complex::new(0.0, -0.25 * w) * s_b * d_eta;
                }

                // gradient-pressure-Poisson bracket
                let b1 = 1.0
                    + 1.0
                        / ((1.0 + n_xi * n_xi)
                            * (1.0 + n_b * n_b)
                            * (1.0 + n_eta * n_eta));
                acc += coef_j * b1 * s_b * s_eta;
                if n_eta > 0.0 && n_b > 0.0 {
                    let cosang = dispersion::vec_dot(b, eta) / (n_b * n_eta);
                    let b2 = cosang * dispersion::q(n_b) * dispersion::q(n_eta);
                    acc -= coef_j * b2 * d_b * d_eta;
                }
            }
            *c = acc * inv_vol;
        });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{self, RealField};
    use crate::solver::{to_alpha, FluidState, Mode};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid3 {
        Grid3::new(16, 16.0).unwrap()
    }

    fn random_spectral(grid: Grid3, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = RealField::zeros(grid);
        for v in f.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        fields::transform_forward(&f)
    }

    #[test]
    fn unit_multiplier_reproduces_pointwise_product() {
        let g = grid();
        let fh = random_spectral(g, 1);
        let gh = random_spectral(g, 2);
        let bh = pseudo_product(&|_, _| Complex::new(1.0, 0.0), &fh, &gh).unwrap();
        let b = fields::transform_inverse_c(&bh);
        let f = fields::transform_inverse_c(&fh);
        let gg = fields::transform_inverse_c(&gh);
        let scale = b.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        for i in 0..g.len() {
            let want = f[i] * gg[i];
            assert!((b[i] - want).norm() < 1e-12 * scale.max(1.0), "site {i}");
        }
    }

    #[test]
    fn derivative_multiplier_reproduces_f_d1g() {
        // Band-limited inputs: spectral differentiation of a real field is
        // Nyquist-ambiguous, so the oracle is only exact inside the ball.
        let g = grid();
        let fh = fields::dealias(&random_spectral(g, 3));
        let gh = fields::dealias(&random_spectral(g, 4));
        let bh = pseudo_product(&|_, eta| Complex::new(0.0, eta[0]), &fh, &gh).unwrap();
        let b = fields::transform_inverse_c(&bh);
        let f = fields::transform_inverse_c(&fh);
        let d1g = fields::transform_inverse(&fields::derivative(&gh, 0));
        let scale = f.iter().map(|c| c.norm()).fold(0.0_f64, f64::max)
            * d1g.sup_abs();
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let want = f[i] * d1g.data[i];
            worst = worst.max((b[i] - want).norm());
        }
        assert!(worst < 1e-12 * scale, "worst {worst} vs scale {scale}");
    }

    #[test]
    fn pseudo_product_is_bilinear() {
        let g = grid();
        let f1 = random_spectral(g, 5);
        let f2 = random_spectral(g, 6);
        let gh = random_spectral(g, 7);
        let m = |xi: [f64; 3], eta: [f64; 3]| {
            Complex::new(
                crate::multiplier::m1_eval(
                    &crate::dispersion::FrequencyTriple::new(xi, eta),
                    1.0,
                ),
                0.0,
            )
        };
        let (a, b) = (2.3, -0.7);
        let mut comb = f1.clone();
        comb.data
            .iter_mut()
            .zip(&f2.data)
            .for_each(|(x, y)| *x = a * *x + b * y);
        let lhs = pseudo_product(&m, &comb, &gh).unwrap();
        let r1 = pseudo_product(&m, &f1, &gh).unwrap();
        let r2 = pseudo_product(&m, &f2, &gh).unwrap();
        let scale = lhs.l2_box().max(1e-300);
        for i in 0..g.len() {
            let want = a * r1.data[i] + b * r2.data[i];
            assert!((lhs.data[i] - want).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn rejects_large_grids_and_mismatches() {
        let big = Grid3::new(64, 16.0).unwrap();
        let f = SpectralField::zeros(big);
        assert!(pseudo_product(&|_, _| Complex::new(1.0, 0.0), &f, &f).is_err());
        let g16 = SpectralField::zeros(grid());
        let g32 = SpectralField::zeros(Grid3::new(32, 16.0).unwrap());
        assert!(pseudo_product(&|_, _| Complex::new(1.0, 0.0), &g16, &g32).is_err());
    }

    fn small_state(seed: u64, amp: f64) -> FluidState {
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
        // keep everything inside the 2/3 ball
        let mut rh = fields::transform_forward(&rho);
        fields::dealias_in_place(&mut rh);
        let mut ph = fields::transform_forward(&psi);
        fields::dealias_in_place(&mut ph);
        FluidState::new(
            fields::transform_inverse(&rh),
            fields::transform_inverse(&ph),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_alpha_gives_zero_kernel() {
        let g = grid();
        let pair = to_alpha(&FluidState::zeros(g), Mode::EulerPoisson).unwrap();
        let q = quadratic_kernel_eval(&pair, 1).unwrap();
        assert_eq!(q.l2_box(), 0.0);
    }

    #[test]
    fn kernel_pieces_have_stated_reality() {
        // For real (ρ, ψ): Re(Q₁ physical) = -div(ρ v) and Im(Q₁ physical) is
        // the |∇|/q-multiplier bracket; both real fields.
        let st = small_state(11, 1e-2);
        let g = st.grid();
        let pair = to_alpha(&st, Mode::EulerPoisson).unwrap();
        let q1 = quadratic_kernel_eval(&pair, 1).unwrap();
        let phys = fields::transform_inverse_c(&q1);

        // Pseudo-spectral -div(ρ v), dealiased.
        let psi_hat = fields::transform_forward(&st.psi);
        let v = fields::gradient(&psi_hat);
        let mut dr = SpectralField::zeros(g);
        for ax in 0..3 {
            let prod = RealField {
                grid: g,
                data: st
                    .rho
                    .data
                    .iter()
                    .zip(&v[ax].data)
                    .map(|(r, w)| r * w)
                    .collect(),
            };
            let d = fields::derivative(&fields::transform_forward(&prod), ax);
            dr.data.iter_mut().zip(&d.data).for_each(|(a, b)| *a -= b);
        }
        fields::dealias_in_place(&mut dr);
        let want_re = fields::transform_inverse(&dr);
        let scale = want_re.sup_abs().max(1e-30);
        for i in 0..g.len() {
            assert!(
                (phys[i].re - want_re.data[i]).abs() < 1e-10 * scale,
                "site {i}: {} vs {}",
                phys[i].re,
                want_re.data[i]
            );
        }

        // Q₂ = conj(Q₁) pointwise for real states.
        let q2 = quadratic_kernel_eval(&pair, 2).unwrap();
        let phys2 = fields::transform_inverse_c(&q2);
        let sup = phys.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        for i in 0..g.len() {
            assert!((phys2[i] - phys[i].conj()).norm() < 1e-10 * sup);
        }
    }
}
