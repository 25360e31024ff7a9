//! The half-wave group e^{itp(|∇|)}: as a spectral multiplier on grid fields
//! and as a radial oscillatory-integral kernel
//!
//!   K(t, x) = (2π)^{-3/2} ∫₀^∞ e^{itp(r)} ψ_band(r) J̃(r|x|) r² dr,
//!
//! with J̃(s) = s^{-1/2} J_{1/2}(s) = sqrt(2/π) sin(s)/s in three dimensions.
//! The normalization makes K(0, ·) the inverse Fourier transform of the band
//! cutoff under the convention fixed in `fields` (forward kernel e^{-ix·ξ},
//! inverse carrying (2π)^{-3}). Band-wise sup-norm decay exponents are
//! measured on an adaptive ray grid that tracks the stationary ray
//! |x| ≈ p′(r₀) t.

use crate::dispersion::{self, Band, BandCutoffs};
use crate::fields::{self, Grid3, RealField, SpectralField};
use crate::fit;
use crate::{par_sum, Complex, Error, Result};
use rayon::prelude::*;

/// sqrt(2/π), the J_{1/2} prefactor.
const J_HALF_NORM: f64 = 0.797_884_560_802_865_4;

/// (2π)^{-3/2}.
const KERNEL_NORM: f64 = 0.063_493_635_934_240_97;

/// Frequency truncation for the unbounded high band.
pub const HIGH_BAND_RADIUS: f64 = 40.0;

/// J̃(s) = s^{-1/2} J_{1/2}(s) = sqrt(2/π) sin(s)/s, with the s → 0 limit
/// taken by series below 1e-4.
#[inline]
pub fn bessel_tilde(s: f64) -> f64 {
    if s < 1e-4 {
        let s2 = s * s;
        J_HALF_NORM * (1.0 - s2 / 6.0 + s2 * s2 / 120.0)
    } else {
        J_HALF_NORM * s.sin() / s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelRequest {
    pub t: f64,
    pub x_abs: f64,
    pub band: Band,
    pub epsilon: f64,
}

/// A converged kernel value with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub value: Complex,
    /// Bound on the high-band truncation remainder (infinite when the
    /// spectral weight does not decay; meaningful for Gaussian data).
    pub tail_bound: f64,
    pub panels: usize,
}

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn integrate_panels(
    lo: f64,
    hi: f64,
    panels: usize,
    f: impl Fn(f64) -> Complex + Sync,
) -> Complex {
    let w = (hi - lo) / panels as f64;
    let parts: Vec<Complex> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let a = lo + i as f64 * w;
            let mut acc = Complex::new(0.0, 0.0);
            for g in 0..8 {
                let r = a + 0.5 * w * (1.0 + GL_X[g]);
                acc += GL_W[g] * f(r);
            }
            acc * (0.5 * w)
        })
        .collect();
    parts.iter().sum()
}

/// Oscillatory radial integral with an extra spectral weight (the datum).
/// `weight` defaults to 1 for the bare kernel.
pub(crate) fn kernel_weighted(
    t: f64,
    x_abs: f64,
    cuts: &BandCutoffs,
    band: Band,
    weight: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<KernelEval> {
    if !t.is_finite() || !x_abs.is_finite() || x_abs < 0.0 {
        return Err(Error::Domain(format!(
            "kernel arguments must be finite with |x| >= 0, got t={t}, x={x_abs}"
        )));
    }
    let (lo, hi_opt) = cuts.support(band);
    let hi = hi_opt.unwrap_or(HIGH_BAND_RADIUS).min(HIGH_BAND_RADIUS);
    let lo = lo.max(0.0);

    // Both oscillation scales must be resolved: t·p′ (p′ ≤ sqrt(2)) and x.
    let osc = (t.abs() * dispersion::Q0).max(x_abs.max(1.0));
    let width_cap = 2.0 * std::f64::consts::PI / osc / 8.0;
    let mut panels = (((hi - lo) / width_cap).ceil() as usize).max(4);

    let integrand = |r: f64| -> Complex {
        let amp = cuts.eval(band, r) * weight(r) * bessel_tilde(r * x_abs) * r * r;
        let phase = t * dispersion::p(r);
        Complex::new(phase.cos(), phase.sin()) * amp
    };

    // Absolute scale of the (unnormalized) integral for the convergence floor.
    let scale = integrate_panels(lo, hi, 64, &|r: f64| {
        Complex::new((cuts.eval(band, r) * weight(r) * r * r).abs() * J_HALF_NORM, 0.0)
    })
    .re;

    let mut coarse = integrate_panels(lo, hi, panels, &integrand);
    let mut disagreement = f64::INFINITY;
    for _ in 0..3 {
        let fine = integrate_panels(lo, hi, panels * 2, &integrand);
        disagreement = (fine - coarse).norm();
        // Relative 1e-8, floored absolutely: values this far below the
        // kernel's own scale are indistinguishable from zero.
        let tol = (1e-8 * fine.norm()).max(1e-14 * scale.max(1e-300));
        if disagreement <= tol {
            let tail_bound = if hi_opt.is_none() || hi_opt.unwrap_or(0.0) > HIGH_BAND_RADIUS {
                tail_estimate(cuts, band, weight)
            } else {
                0.0
            };
            return Ok(KernelEval {
                value: fine * KERNEL_NORM,
                tail_bound,
                panels: panels * 2,
            });
        }
        coarse = fine;
        panels *= 2;
    }
    let v = coarse * KERNEL_NORM;
    Err(Error::QuadratureNonconvergence {
        re: v.re,
        im: v.im,
        disagreement: disagreement * KERNEL_NORM,
    })
}

/// ∫_{R}^{8R} ψ_band(r) w(r) r² dr · sup|J̃| as the truncation error bar;
/// infinite when the weight does not decay.
fn tail_estimate(cuts: &BandCutoffs, band: Band, weight: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    let r1 = HIGH_BAND_RADIUS;
    let r2 = 8.0 * HIGH_BAND_RADIUS;
    if (weight(r2) * r2 * r2).abs() > 1e-280 {
        return f64::INFINITY;
    }
    let int = integrate_panels(r1, r2, 128, &|r: f64| {
        Complex::new((cuts.eval(band, r) * weight(r)).abs() * r * r, 0.0)
    })
    .re;
    KERNEL_NORM * J_HALF_NORM * int
}

/// 2π ∫ e^{itp} ψ_band J̃(r|x|) r² dr under the workspace normalization; see
/// the module docs for the exact constant.
pub fn kernel_radial(req: &KernelRequest) -> Result<KernelEval> {
    let cuts = BandCutoffs::new(req.epsilon)?;
    kernel_weighted(req.t, req.x_abs, &cuts, req.band, &|_| 1.0)
}

/// Multiply every coefficient by e^{itp(|ξ|)}; unitary on L².
pub fn apply_halfwave(t: f64, f: &SpectralField) -> SpectralField {
    let grid = f.grid;
    let mut out = f.clone();
    out.data.par_iter_mut().enumerate().for_each(|(idx, c)| {
        let ph = t * dispersion::p(grid.xi_abs_at(idx));
        *c *= Complex::new(ph.cos(), ph.sin());
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Sup,
    L10,
    L2,
}

impl NormKind {
    pub fn parse(s: &str) -> Result<NormKind> {
        match s {
            "inf" | "sup" => Ok(NormKind::Sup),
            "l10" => Ok(NormKind::L10),
            "l2" => Ok(NormKind::L2),
            other => Err(Error::Config(format!("unknown norm kind '{other}'"))),
        }
    }
}

/// What gets propagated.
#[derive(Debug, Clone, Copy)]
pub enum Datum {
    /// Radial route: the band kernel applied to a radial Gaussian with
    /// spectral profile exp(-σ²r²/4); σ = 0 gives the bare kernel.
    RadialGaussian { sigma: f64 },
    /// Grid route: a Gaussian of width σ on the given grid, band-filtered.
    GridField { grid: Grid3, sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_window: (f64, f64),
    pub norm_kind: NormKind,
}

/// Rays to search for the sup: a coarse log grid on [0, 2p′(0)t] plus a fine
/// grid across the stationary band |x|/t ∈ p′(supp ψ_band), where the
/// slow-decaying contribution lives.
fn sup_search_grid(t: f64, band: Band, cuts: &BandCutoffs) -> Vec<f64> {
    let te = t.max(1.0);
    let mut xs = vec![0.0];
    let x_hi = 2.0 * dispersion::Q0 * te;
    let x_lo = 1e-3 * te;
    for i in 0..80 {
        xs.push(x_lo * (x_hi / x_lo).powf(i as f64 / 79.0));
    }
    let (lo, hi_opt) = cuts.support(band);
    let hi = hi_opt.unwrap_or(HIGH_BAND_RADIUS);
    let mut dp_min = f64::INFINITY;
    let mut dp_max = f64::NEG_INFINITY;
    for i in 0..=256 {
        let r = (lo + (hi - lo) * i as f64 / 256.0).max(1e-9);
        let d = dispersion::dp(r);
        dp_min = dp_min.min(d);
        dp_max = dp_max.max(d);
    }
    let a = 0.9 * dp_min * te;
    let b = 1.1 * dp_max * te;
    for i in 0..200 {
        xs.push(a + (b - a) * i as f64 / 199.0);
    }
    // The stationary-phase caustic at |x| = p'(r0) t has width of order
    // (t p'''(r0))^{1/3}, which grows slower than the fine band above; track
    // it with its own window so the peak never falls between samples.
    let r0 = dispersion::critical_point();
    let x_c = dispersion::dp(r0) * te;
    let airy = (te * dispersion::d3p(r0) / 2.0).cbrt();
    let (ca, cb) = (x_c - 12.0 * airy, x_c + 12.0 * airy);
    for i in 0..160 {
        let x = ca + (cb - ca) * i as f64 / 159.0;
        if x > 0.0 {
            xs.push(x);
        }
    }
    xs
}

pub struct DecayScan {
    pub band: Band,
    pub norm: NormKind,
    pub datum: Datum,
    pub times: Vec<f64>,
    pub epsilon: f64,
    /// Overrides the default [t_max/30, t_max] fit window.
    pub fit_window: Option<(f64, f64)>,
}

pub fn decay_scan(scan: &DecayScan) -> Result<DecayTrace> {
    if scan.times.len() < 12 {
        return Err(Error::Config(format!(
            "need at least 12 sample times, got {}",
            scan.times.len()
        )));
    }
    let mut sorted = scan.times.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.windows(2).any(|w| w[1] <= w[0]) || sorted[0] < 1.0 {
        return Err(Error::Config(
            "times must be strictly increasing and >= 1".into(),
        ));
    }
    let cuts = BandCutoffs::new(scan.epsilon)?;

    let values: Vec<f64> = match scan.datum {
        Datum::RadialGaussian { sigma } => {
            if scan.norm != NormKind::Sup {
                return Err(Error::Config(
                    "the radial route measures the sup norm; use a grid datum for L^p".into(),
                ));
            }
            let weight = move |r: f64| (-sigma * sigma * r * r / 4.0).exp();
            sorted
                .iter()
                .map(|&t| {
                    let xs = sup_search_grid(t, scan.band, &cuts);
                    let best = xs
                        .par_iter()
                        .map(|&x| {
                            kernel_weighted(t, x, &cuts, scan.band, &weight)
                                .map(|k| k.value.norm())
                        })
                        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
                    Ok(best)
                })
                .collect::<Result<Vec<f64>>>()?
        }
        Datum::GridField { grid, sigma } => {
            let datum = band_filtered_gaussian(grid, sigma, scan.band, &cuts)?;
            sorted
                .iter()
                .map(|&t| {
                    let prop = apply_halfwave(t, &datum);
                    Ok(grid_norm(&prop, scan.norm))
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };

    let window = scan.fit_window.unwrap_or_else(|| fit::default_window(&sorted));
    let (slope, _) = fit::log_log_fit(&sorted, &values, window)?;
    Ok(DecayTrace {
        times: sorted,
        values,
        fitted_exponent: slope,
        fit_window: window,
        norm_kind: scan.norm,
    })
}

/// Unit-mass Gaussian centered in the box, band-filtered in frequency.
pub fn band_filtered_gaussian(
    grid: Grid3,
    sigma: f64,
    band: Band,
    cuts: &BandCutoffs,
) -> Result<SpectralField> {
    if sigma <= 0.0 || sigma > grid.box_len / 8.0 {
        return Err(Error::Config(format!(
            "datum width sigma must lie in (0, L/8] to keep wrap-around negligible, got {sigma}"
        )));
    }
    let c = grid.box_len / 2.0;
    let f = RealField::from_fn(grid, |x| {
        let d2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
        (-d2 / (sigma * sigma)).exp()
    });
    let fh = fields::transform_forward(&f);
    fields::apply_radial_multiplier(&fh, |r| cuts.eval(band, r))
}

/// L^p(box) of the modulus of the propagated complex field.
pub fn grid_norm(f: &SpectralField, kind: NormKind) -> f64 {
    let phys = fields::transform_inverse_c(f);
    let w = f.grid.cell_volume();
    match kind {
        NormKind::Sup => phys.par_iter().map(|c| c.norm()).reduce(|| 0.0, f64::max),
        NormKind::L2 => (par_sum(&phys, 1 << 14, |c| c.norm_sqr()) * w).sqrt(),
        NormKind::L10 => {
            (par_sum(&phys, 1 << 14, |c| c.norm_sqr().powi(5)) * w).powf(0.1)
        }
    }
}
