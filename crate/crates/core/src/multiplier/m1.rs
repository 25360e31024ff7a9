//! The weighted multiplier
//!   𝔐₁(ξ, η) = |ξ||ξ-η||η| / (Φ₁ ⟨ξ-η⟩^{2λ} ⟨η⟩^{2λ}),
//! set to 0 on the zero set |ξ-η||η| = 0 where the numerator vanishes, plus
//! dyadic Sobolev-slice norms: for a frozen ξ, the slice η ↦ 𝔐₁(ξ, η) is
//! decomposed over annuli φ(|η|/N) and the homogeneous H^s norm of each
//! piece is taken spectrally on the η grid (the slice extended by zero).
//! Gridding under-resolves the unbounded η domain, so reports carry a
//! refinement-stability comparison rather than a convergence claim.

use crate::dispersion::{self, eval_phase, FrequencyTriple, PhaseIndex};
use crate::fields::{self, Grid3, RealField};
use crate::rng;
use crate::{Error, Result};

use rayon::prelude::*;

/// 𝔐₁ with the zero-set convention.
pub fn m1_eval(t: &FrequencyTriple, lambda: f64) -> f64 {
    let n_xi = dispersion::vec_norm(t.xi);
    let n_b = dispersion::vec_norm(t.xi_minus_eta());
    let n_eta = dispersion::vec_norm(t.eta);
    let num = n_xi * n_b * n_eta;
    if num == 0.0 {
        return 0.0;
    }
    let phi = eval_phase(PhaseIndex::Phi1, t);
    if phi == 0.0 {
        return 0.0;
    }
    let w = (1.0 + n_b * n_b).powf(lambda) * (1.0 + n_eta * n_eta).powf(lambda);
    num / (phi * w)
}

/// The f-weights of the slice-norm proposition: χ_Ω ⟨η⟩^{-1/2} or
/// χ_Ω ⟨ξ-η⟩^{-1/2} with χ_Ω a smoothed indicator of
/// Ω = {max(|ξ|, |ξ-η|, |η|) ≥ 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceWeight {
    None,
    EtaHalf,
    XiMinusEtaHalf,
}

impl SliceWeight {
    pub fn parse(s: &str) -> Result<SliceWeight> {
        match s {
            "none" => Ok(SliceWeight::None),
            "eta" => Ok(SliceWeight::EtaHalf),
            "xi-eta" => Ok(SliceWeight::XiMinusEtaHalf),
            other => Err(Error::Config(format!("unknown slice weight '{other}'"))),
        }
    }

    fn eval(self, t: &FrequencyTriple) -> f64 {
        match self {
            SliceWeight::None => 1.0,
            _ => {
                let m = dispersion::vec_norm(t.xi)
                    .max(dispersion::vec_norm(t.eta))
                    .max(dispersion::vec_norm(t.xi_minus_eta()));
                let chi = dispersion::smooth_step(m - 1.0);
                let r = match self {
                    SliceWeight::EtaHalf => dispersion::vec_norm(t.eta),
                    SliceWeight::XiMinusEtaHalf => dispersion::vec_norm(t.xi_minus_eta()),
                    SliceWeight::None => unreachable!(),
                };
                chi / (1.0 + r * r).powf(0.25)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SliceNormConfig {
    pub lambda: f64,
    pub s: f64,
    /// Grid points per axis for the slice.
    pub n: usize,
    /// η covers [-extent/2, extent/2)³.
    pub extent: f64,
    /// Dyadic shell exponents [j_lo, j_hi], N = 2^j.
    pub shells: (i32, i32),
    pub weight: SliceWeight,
}

impl SliceNormConfig {
    pub fn defaults(lambda: f64, s: f64) -> Self {
        SliceNormConfig {
            lambda,
            s,
            n: 64,
            extent: 32.0,
            shells: (-4, 4),
            weight: SliceWeight::None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShellNorm {
    pub n_dyadic: f64,
    /// Max over the frozen-frequency samples of ‖φ_N · slice‖_{Ḣ^s}.
    pub fixed_xi: f64,
    pub fixed_eta: f64,
}

#[derive(Debug, Clone)]
pub struct MultiplierReport {
    pub lambda: f64,
    pub s: f64,
    pub grid_n: usize,
    pub extent: f64,
    pub shells: Vec<ShellNorm>,
    /// max over ξ samples of Σ_N ‖P_N 𝔐₁(ξ, ·)‖_{Ḣ^s_η}.
    pub summed_fixed_xi: f64,
    /// Roles swapped: slices in ξ at frozen η.
    pub summed_fixed_eta: f64,
    /// sup |𝔐₁| over the sampled slices.
    pub sup_m1: f64,
}

/// Deterministic frozen-frequency samples: radii log-uniform, directions
/// uniform, from the seeded stream.
pub fn sample_frequencies(seed: u64, count: usize, range: (f64, f64)) -> Vec<[f64; 3]> {
    let mut rng = rng::stream(seed, 0);
    (0..count)
        .map(|_| {
            let r = rng::log_uniform(&mut rng, range.0, range.1);
            let d = rng::unit_vector(&mut rng);
            [r * d[0], r * d[1], r * d[2]]
        })
        .collect()
}

/// Ḣ^s of one gridded slice via the spectral route.
fn slice_hdot(vals: &RealField, s: f64) -> f64 {
    let fh = fields::transform_forward(vals);
    let grid = vals.grid;
    (crate::par_sum_indexed(grid.len(), 1 << 14, |i| {
        let z = grid.xi_abs_at(i);
        if z > 0.0 {
            z.powf(2.0 * s) * fh.data[i].norm_sqr()
        } else {
            0.0
        }
    }) / grid.volume())
    .sqrt()
}

/// Evaluate g(η) at every grid site; the grid coordinate x ∈ [0, E)³ maps to
/// η = x - E/2 (the half-period shift only changes spectral phases).
fn eval_slice(grid: Grid3, g: impl Fn([f64; 3]) -> f64 + Sync) -> RealField {
    let half = grid.box_len / 2.0;
    RealField::from_fn(grid, move |x| g([x[0] - half, x[1] - half, x[2] - half]))
}

pub fn slice_norm_estimate(
    cfg: &SliceNormConfig,
    frozen: &[[f64; 3]],
) -> Result<MultiplierReport> {
    let grid = Grid3::new(cfg.n, cfg.extent)?;
    if frozen.is_empty() {
        return Err(Error::Config("need at least one frozen-frequency sample".into()));
    }
    // The smallest requested shell must be representable on the grid.
    let h = grid.spacing();
    let n_lo = (2.0_f64).powi(cfg.shells.0);
    if 2.0 * n_lo < h {
        // Sub-grid shells carry no samples; that is tolerated (they read 0)
        // but the caller should know the config is partly vacuous.
        // No error: the refinement-stability comparison is the safeguard.
    }
    let shell_js: Vec<i32> = (cfg.shells.0..=cfg.shells.1).collect();

    let lambda = cfg.lambda;
    let weight = cfg.weight;

    // Slices at frozen ξ (function of η) and frozen η (function of ξ).
    let eval_fixed_xi = |xi: [f64; 3], eta: [f64; 3]| {
        let t = FrequencyTriple::new(xi, eta);
        m1_eval(&t, lambda) * weight.eval(&t)
    };

    let mut shells = Vec::new();
    let mut summed_fixed_xi = vec![0.0f64; frozen.len()];
    let mut summed_fixed_eta = vec![0.0f64; frozen.len()];
    let mut sup_m1 = 0.0f64;

    // Cache the raw slices once per frozen sample.
    let slices_xi: Vec<RealField> = frozen
        .iter()
        .map(|&xi| eval_slice(grid, move |eta| eval_fixed_xi(xi, eta)))
        .collect();
    let slices_eta: Vec<RealField> = frozen
        .iter()
        .map(|&eta| eval_slice(grid, move |xi| eval_fixed_xi(xi, eta)))
        .collect();
    for sl in slices_xi.iter().chain(&slices_eta) {
        sup_m1 = sup_m1.max(sl.sup_abs());
    }

    for &j in &shell_js {
        let n_dyadic = (2.0_f64).powi(j);
        let mut worst_xi = 0.0f64;
        let mut worst_eta = 0.0f64;
        for (i, (sx, se)) in slices_xi.iter().zip(&slices_eta).enumerate() {
            let cut = |vals: &RealField| {
                let mut cutfield = vals.clone();
                let half = grid.box_len / 2.0;
                cutfield
                    .data
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(idx, v)| {
                        let x = grid.x_at(idx);
                        let eta = [(x[0] - half), (x[1] - half), (x[2] - half)];
                        let r = dispersion::vec_norm(eta);
                        *v *= fields::lp_phi(r / n_dyadic);
                    });
                cutfield
            };
            let nx = slice_hdot(&cut(sx), cfg.s);
            let ne = slice_hdot(&cut(se), cfg.s);
            summed_fixed_xi[i] += nx;
            summed_fixed_eta[i] += ne;
            worst_xi = worst_xi.max(nx);
            worst_eta = worst_eta.max(ne);
        }
        shells.push(ShellNorm {
            n_dyadic,
            fixed_xi: worst_xi,
            fixed_eta: worst_eta,
        });
    }

    Ok(MultiplierReport {
        lambda: cfg.lambda,
        s: cfg.s,
        grid_n: cfg.n,
        extent: cfg.extent,
        shells,
        summed_fixed_xi: summed_fixed_xi.iter().cloned().fold(0.0, f64::max),
        summed_fixed_eta: summed_fixed_eta.iter().cloned().fold(0.0, f64::max),
        sup_m1,
    })
}
