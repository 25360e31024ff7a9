//! Monte-Carlo verification of the phase lower bound
//!   |p(a) - p(b) - p(c)| ≳ |c|{(1-cos[c,a]) + (1-cos[b,a])}
//!                          + |a||b||c|/((1+|a||b|)(1+|c|²)),
//! and of the four global derivative bounds on Φ₁. Sampling is stratified:
//! a quarter of the budget goes to near-collinear cones (angle < 0.1) where
//! the phase degenerates. Chunked ChaCha streams keep every report
//! reproducible under any thread schedule.

use crate::dispersion::{self, eval_phase, phase_bound_rhs, FrequencyTriple, PhaseIndex};
use crate::rng;
use crate::Result;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct PhaseVerifyConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub radius_range: (f64, f64),
    /// Fraction of samples forced into the near-collinear cone.
    pub collinear_fraction: f64,
    pub collinear_angle: f64,
}

impl PhaseVerifyConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        PhaseVerifyConfig {
            n_samples,
            seed,
            radius_range: (1e-3, 1e3),
            collinear_fraction: 0.25,
            collinear_angle: 0.1,
        }
    }
}

pub const HISTOGRAM_BINS: usize = 80;
pub const HISTOGRAM_LOG10_RANGE: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub samples: u64,
    pub seed: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: FrequencyTriple,
    /// Counts of log10(ratio) over HISTOGRAM_LOG10_RANGE, clamped at the ends.
    pub histogram: Vec<u64>,
    pub degenerate_excluded: u64,
}

fn sample_triple(
    rng: &mut impl Rng,
    cfg: &PhaseVerifyConfig,
    collinear: bool,
) -> FrequencyTriple {
    let (lo, hi) = cfg.radius_range;
    let r_xi = rng::log_uniform(rng, lo, hi);
    let r_eta = rng::log_uniform(rng, lo, hi);
    let d_xi = rng::unit_vector(rng);
    let d_eta = if collinear {
        let ang = rng.gen_range(0.0..cfg.collinear_angle);
        rng::nearby_direction(rng, d_xi, ang)
    } else {
        rng::unit_vector(rng)
    };
    FrequencyTriple::new(
        [r_xi * d_xi[0], r_xi * d_xi[1], r_xi * d_xi[2]],
        [r_eta * d_eta[0], r_eta * d_eta[1], r_eta * d_eta[2]],
    )
}

struct ChunkAccum {
    min_ratio: f64,
    min_at: (u64, FrequencyTriple),
    max_ratio: f64,
    histogram: Vec<u64>,
    degenerate: u64,
}

pub fn verify_phase_bound(cfg: &PhaseVerifyConfig) -> Result<PhaseReport> {
    if cfg.n_samples == 0 {
        return Err(crate::Error::Config("need at least one sample".into()));
    }
    if !(cfg.radius_range.0 > 0.0 && cfg.radius_range.1 > cfg.radius_range.0) {
        return Err(crate::Error::Config(format!(
            "empty radius range {:?}",
            cfg.radius_range
        )));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = (cfg.n_samples + CHUNK - 1) / CHUNK;
    let (lg_lo, lg_hi) = HISTOGRAM_LOG10_RANGE;

    let accums: Vec<ChunkAccum> = (0..chunks)
        .into_par_iter()
        .map(|chunk_idx| {
            let mut rng = rng::stream(cfg.seed, chunk_idx);
            let base = chunk_idx * CHUNK;
            let count = CHUNK.min(cfg.n_samples - base);
            let mut acc = ChunkAccum {
                min_ratio: f64::INFINITY,
                min_at: (u64::MAX, FrequencyTriple::new([0.0; 3], [0.0; 3])),
                max_ratio: 0.0,
                histogram: vec![0u64; HISTOGRAM_BINS],
                degenerate: 0,
            };
            for i in 0..count {
                let global_idx = base + i;
                let collinear =
                    (global_idx % 4 == 3) && cfg.collinear_fraction >= 0.249;
                let t = sample_triple(&mut rng, cfg, collinear);
                let rhs = phase_bound_rhs(&t);
                if rhs == 0.0 {
                    acc.degenerate += 1;
                    continue;
                }
                let lhs = eval_phase(PhaseIndex::Phi1, &t).abs();
                let ratio = lhs / rhs;
                if ratio < acc.min_ratio {
                    acc.min_ratio = ratio;
                    acc.min_at = (global_idx, t);
                }
                acc.max_ratio = acc.max_ratio.max(ratio);
                let lg = ratio.max(1e-300).log10().clamp(lg_lo, lg_hi - 1e-12);
                let bin = ((lg - lg_lo) / (lg_hi - lg_lo) * HISTOGRAM_BINS as f64) as usize;
                acc.histogram[bin.min(HISTOGRAM_BINS - 1)] += 1;
            }
            acc
        })
        .collect();

    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let mut min_ratio = f64::INFINITY;
    let mut min_at = (u64::MAX, FrequencyTriple::new([0.0; 3], [0.0; 3]));
    let mut max_ratio: f64 = 0.0;
    let mut degenerate = 0u64;
    for acc in accums {
        for (h, a) in histogram.iter_mut().zip(&acc.histogram) {
            *h += a;
        }
        degenerate += acc.degenerate;
        max_ratio = max_ratio.max(acc.max_ratio);
        // Tie-break on the sample index so the argmin is schedule-free.
        if acc.min_ratio < min_ratio
            || (acc.min_ratio == min_ratio && acc.min_at.0 < min_at.0)
        {
            min_ratio = acc.min_ratio;
            min_at = acc.min_at;
        }
    }
    Ok(PhaseReport {
        samples: cfg.n_samples,
        seed: cfg.seed,
        min_ratio,
        max_ratio,
        argmin: min_at.1,
        histogram,
        degenerate_excluded: degenerate,
    })
}

/// Analytic ∇_ξ Φ₁ = p′(|ξ|)ξ̂ - p′(|ξ-η|)(ξ-η)̂.
pub fn grad_xi_phi1(t: &FrequencyTriple) -> [f64; 3] {
    let xi = t.xi;
    let b = t.xi_minus_eta();
    let n_xi = dispersion::vec_norm(xi);
    let n_b = dispersion::vec_norm(b);
    let mut out = [0.0; 3];
    for ax in 0..3 {
        let mut v = 0.0;
        if n_xi > 0.0 {
            v += dispersion::dp(n_xi) * xi[ax] / n_xi;
        }
        if n_b > 0.0 {
            v -= dispersion::dp(n_b) * b[ax] / n_b;
        }
        out[ax] = v;
    }
    out
}

/// Analytic ∇_η Φ₁ = p′(|ξ-η|)(ξ-η)̂ - p′(|η|)η̂.
pub fn grad_eta_phi1(t: &FrequencyTriple) -> [f64; 3] {
    let b = t.xi_minus_eta();
    let eta = t.eta;
    let n_b = dispersion::vec_norm(b);
    let n_eta = dispersion::vec_norm(eta);
    let mut out = [0.0; 3];
    for ax in 0..3 {
        let mut v = 0.0;
        if n_b > 0.0 {
            v += dispersion::dp(n_b) * b[ax] / n_b;
        }
        if n_eta > 0.0 {
            v -= dispersion::dp(n_eta) * eta[ax] / n_eta;
        }
        out[ax] = v;
    }
    out
}

/// Radial Laplacian Δ p(|z|) = p″(|z|) + 2p′(|z|)/|z|.
#[inline]
fn lap_p(r: f64) -> f64 {
    dispersion::d2p(r) + 2.0 * dispersion::dp(r) / r
}

pub fn lap_xi_phi1(t: &FrequencyTriple) -> f64 {
    lap_p(dispersion::vec_norm(t.xi)) - lap_p(dispersion::vec_norm(t.xi_minus_eta()))
}

pub fn lap_eta_phi1(t: &FrequencyTriple) -> f64 {
    -lap_p(dispersion::vec_norm(t.xi_minus_eta())) - lap_p(dispersion::vec_norm(t.eta))
}

#[derive(Debug, Clone)]
pub struct DerivativeBoundsReport {
    pub samples: u64,
    pub seed: u64,
    /// Max LHS/RHS for (∇_ξ, ∇_η, Δ_ξ, Δ_η) respectively.
    pub max_ratios: [f64; 4],
    pub resampled: u64,
}

fn angle(u: [f64; 3], v: [f64; 3]) -> f64 {
    let nu = dispersion::vec_norm(u);
    let nv = dispersion::vec_norm(v);
    (dispersion::vec_dot(u, v) / (nu * nv)).clamp(-1.0, 1.0).acos()
}

fn bracket(a: f64) -> f64 {
    (1.0 + a * a).sqrt()
}

pub fn verify_phi1_derivative_bounds(n_samples: u64, seed: u64) -> Result<DerivativeBoundsReport> {
    let cfg = PhaseVerifyConfig::new(n_samples, seed);
    const CHUNK: u64 = 1 << 13;
    let chunks = (n_samples + CHUNK - 1) / CHUNK;
    let results: Vec<([f64; 4], u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk_idx| {
            let mut rng = rng::stream(seed, chunk_idx);
            let base = chunk_idx * CHUNK;
            let count = CHUNK.min(n_samples - base);
            let mut maxima = [0.0f64; 4];
            let mut resampled = 0u64;
            for i in 0..count {
                let collinear = (base + i) % 4 == 3;
                let t = loop {
                    let cand = sample_triple(&mut rng, &cfg, collinear);
                    let legs = [
                        dispersion::vec_norm(cand.xi),
                        dispersion::vec_norm(cand.eta),
                        dispersion::vec_norm(cand.xi_minus_eta()),
                    ];
                    if legs.iter().all(|&l| l >= 1e-8) {
                        break cand;
                    }
                    resampled += 1;
                };
                let xi = t.xi;
                let eta = t.eta;
                let b = t.xi_minus_eta();
                let (n_xi, n_eta, n_b) = (
                    dispersion::vec_norm(xi),
                    dispersion::vec_norm(eta),
                    dispersion::vec_norm(b),
                );
                let gamma = angle(xi, b);
                let theta = angle(xi, eta);
                let beta = gamma + theta;

                let g_xi = dispersion::vec_norm(grad_xi_phi1(&t));
                let rhs1 = n_eta / (bracket(n_b.max(n_xi)) * bracket(n_b.min(n_xi)).powi(2))
                    + gamma.sin().abs();
                maxima[0] = maxima[0].max(g_xi / rhs1);

                let g_eta = dispersion::vec_norm(grad_eta_phi1(&t));
                let rhs2 = n_xi / (bracket(n_b.max(n_eta)) * bracket(n_b.min(n_eta)).powi(2))
                    + beta.sin().abs();
                maxima[1] = maxima[1].max(g_eta / rhs2);

                let l_xi = lap_xi_phi1(&t).abs();
                let rhs3 = n_eta / (bracket(n_b.max(n_xi)) * bracket(n_b.min(n_xi)).powi(3))
                    + n_eta / (n_b * n_xi);
                maxima[2] = maxima[2].max(l_xi / rhs3);

                let l_eta = lap_eta_phi1(&t).abs();
                let rhs4 = 1.0 / n_b.min(n_eta);
                maxima[3] = maxima[3].max(l_eta / rhs4);
            }
            (maxima, resampled)
        })
        .collect();

    let mut max_ratios = [0.0f64; 4];
    let mut resampled = 0;
    for (m, r) in results {
        for k in 0..4 {
            max_ratios[k] = max_ratios[k].max(m[k]);
        }
        resampled += r;
    }
    Ok(DerivativeBoundsReport {
        samples: n_samples,
        seed,
        max_ratios,
        resampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::p;
    use approx::assert_relative_eq;

    #[test]
    fn report_is_reproducible_and_positive() {
        let cfg = PhaseVerifyConfig::new(50_000, 1);
        let a = verify_phase_bound(&cfg).unwrap();
        let b = verify_phase_bound(&cfg).unwrap();
        assert_eq!(a.min_ratio, b.min_ratio);
        assert_eq!(a.histogram, b.histogram);
        assert!(a.min_ratio > 0.0, "no violations allowed");
        assert_eq!(
            a.histogram.iter().sum::<u64>() + a.degenerate_excluded,
            a.samples
        );
    }

    #[test]
    fn collinear_example_ratio() {
        let t = FrequencyTriple::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let lhs = (p(2.0) - 2.0 * p(1.0)).abs();
        assert_relative_eq!(lhs, 0.2586, max_relative = 1e-3);
        let ratio = lhs / phase_bound_rhs(&t);
        assert_relative_eq!(ratio, 0.776, max_relative = 1e-3);
    }

    #[test]
    fn relabel_branch_has_positive_floor() {
        // |b| ≥ |a| forces |Φ₁| ≥ p(|c|); the measured ratio must stay
        // bounded below on such samples.
        let mut rng = crate::rng::stream(7, 0);
        let cfg = PhaseVerifyConfig::new(1, 7);
        let mut min_ratio = f64::INFINITY;
        let mut seen = 0;
        while seen < 2000 {
            let t = sample_triple(&mut rng, &cfg, false);
            let b = t.xi_minus_eta();
            let (na, nb, nc) = (
                crate::dispersion::vec_norm(t.xi),
                crate::dispersion::vec_norm(b).max(crate::dispersion::vec_norm(t.eta)),
                crate::dispersion::vec_norm(b).min(crate::dispersion::vec_norm(t.eta)),
            );
            if nb < na || nc == 0.0 {
                continue;
            }
            seen += 1;
            let lhs = eval_phase(PhaseIndex::Phi1, &t).abs();
            assert!(lhs >= p(nc) * (1.0 - 1e-12));
            min_ratio = min_ratio.min(lhs / phase_bound_rhs(&t));
        }
        assert!(min_ratio > 0.15, "measured floor {min_ratio}");
    }

    #[test]
    fn min_ratio_rotation_invariant() {
        // Rotating the whole sample set cannot change the ratio of any pair.
        let t = FrequencyTriple::new([0.3, 1.2, -0.5], [1.0, -0.2, 0.8]);
        let rot = |v: [f64; 3]| {
            let a = 0.913f64;
            [
                v[0] * a.cos() - v[2] * a.sin(),
                v[1],
                v[0] * a.sin() + v[2] * a.cos(),
            ]
        };
        let tr = FrequencyTriple::new(rot(t.xi), rot(t.eta));
        let r1 = eval_phase(PhaseIndex::Phi1, &t).abs() / phase_bound_rhs(&t);
        let r2 = eval_phase(PhaseIndex::Phi1, &tr).abs() / phase_bound_rhs(&tr);
        assert_relative_eq!(r1, r2, max_relative = 1e-11);
    }

    fn fd_grad_xi(t: &FrequencyTriple, h: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for ax in 0..3 {
            let mut shift = |d: f64| {
                let mut xi = t.xi;
                xi[ax] += d;
                eval_phase(PhaseIndex::Phi1, &FrequencyTriple::new(xi, t.eta))
            };
            out[ax] = (-shift(2.0 * h) + 8.0 * shift(h) - 8.0 * shift(-h) + shift(-2.0 * h))
                / (12.0 * h);
        }
        out
    }

    fn fd_grad_eta(t: &FrequencyTriple, h: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for ax in 0..3 {
            let mut shift = |d: f64| {
                let mut eta = t.eta;
                eta[ax] += d;
                eval_phase(PhaseIndex::Phi1, &FrequencyTriple::new(t.xi, eta))
            };
            out[ax] = (-shift(2.0 * h) + 8.0 * shift(h) - 8.0 * shift(-h) + shift(-2.0 * h))
                / (12.0 * h);
        }
        out
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = crate::rng::stream(11, 0);
        let cfg = PhaseVerifyConfig {
            radius_range: (0.05, 20.0),
            ..PhaseVerifyConfig::new(100, 11)
        };
        for i in 0..100 {
            let t = sample_triple(&mut rng, &cfg, i % 4 == 3);
            let h = 1e-5;
            let (ax, fx) = (grad_xi_phi1(&t), fd_grad_xi(&t, h));
            let (ae, fe) = (grad_eta_phi1(&t), fd_grad_eta(&t, h));
            let scale_x = crate::dispersion::vec_norm(ax).max(1e-6);
            let scale_e = crate::dispersion::vec_norm(ae).max(1e-6);
            for k in 0..3 {
                assert!(
                    (ax[k] - fx[k]).abs() / scale_x < 1e-6,
                    "grad_xi[{k}] {} vs {}",
                    ax[k],
                    fx[k]
                );
                assert!(
                    (ae[k] - fe[k]).abs() / scale_e < 1e-6,
                    "grad_eta[{k}] {} vs {}",
                    ae[k],
                    fe[k]
                );
            }
        }
    }

    #[test]
    fn grad_eta_collinear_closed_form() {
        // ξ = 2η collinear: ∇_ηΦ₁ = p′(|ξ-η|)(ξ-η)̂ - p′(|η|)η̂, both legs
        // along e₁.
        let t = FrequencyTriple::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let g = grad_eta_phi1(&t);
        let expect = crate::dispersion::dp(1.0) - crate::dispersion::dp(1.0);
        assert_relative_eq!(g[0], expect, epsilon = 1e-14);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn derivative_bounds_hold_on_small_sweep() {
        let rep = verify_phi1_derivative_bounds(20_000, 3).unwrap();
        for (k, r) in rep.max_ratios.iter().enumerate() {
            assert!(r.is_finite() && *r > 0.0, "ratio {k} = {r}");
        }
        // Reproducibility.
        let rep2 = verify_phi1_derivative_bounds(20_000, 3).unwrap();
        assert_eq!(rep.max_ratios, rep2.max_ratios);
    }
}
