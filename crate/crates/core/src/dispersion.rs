//! Ion-acoustic dispersion relation p(r) = r·sqrt((2+r²)/(1+r²)) = r·q(r),
//! its derivatives, the critical radius r₀ where p″ vanishes, the four
//! quadratic resonance phases, the phase lower-bound right-hand side, and the
//! smooth frequency-band partition {ψ₀, ψ_{r₀}, ψ_∞}.
//!
//! Everything here is a pure function of its arguments and safe to call from
//! any thread.

use crate::{Error, Result};

/// q(0) = sqrt(2), the ion-acoustic speed at zero wavenumber.
pub const Q0: f64 = std::f64::consts::SQRT_2;

/// Where the direct polynomial forms of p″/p‴ would overflow; beyond this the
/// leading large-r asymptotics are exact to f64.
const ASYMPTOTIC_RADIUS: f64 = 1e20;

#[inline]
fn check_radius(r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")))
    } else {
        Ok(r)
    }
}

/// q(r) = sqrt(1 + 1/(1+r²)). This form has no cancellation at either end.
#[inline]
pub fn q(r: f64) -> f64 {
    (1.0 + 1.0 / (1.0 + r * r)).sqrt()
}

/// q(r) - 1 = 1/((1+r²)(q(r)+1)), exact in relative terms for large r.
#[inline]
pub fn q_minus_one(r: f64) -> f64 {
    1.0 / ((1.0 + r * r) * (q(r) + 1.0))
}

/// p(r) = r·q(r).
#[inline]
pub fn p(r: f64) -> f64 {
    r * q(r)
}

/// p′(r) = (1 + 1/(1+r²)²) / q(r). Equals the textbook quotient form but
/// stays finite and cancellation-free over the whole half-line.
#[inline]
pub fn dp(r: f64) -> f64 {
    let u = 1.0 / (1.0 + r * r);
    (1.0 + u * u) / q(r)
}

/// q′(r) = -r / ((1+r²)² q(r)).
#[inline]
pub fn dq(r: f64) -> f64 {
    let d = 1.0 + r * r;
    -r / (d * d * q(r))
}

/// p″(r) = r (r⁴ - 2r² - 6) / ((1+r²)⁴ q(r)³).
#[inline]
pub fn d2p(r: f64) -> f64 {
    if r > ASYMPTOTIC_RADIUS {
        return 1.0 / (r * r * r);
    }
    let s = r * r;
    let d = 1.0 + s;
    let qq = q(r);
    r * (s * s - 2.0 * s - 6.0) / (d * d * d * d * qq * qq * qq)
}

/// p‴(r) = (5r⁴-6r²-6)/((1+r²)⁴ q³) - r²(8r²+13)(r⁴-2r²-6)/((1+r²)⁶ q⁵).
///
/// At r₀ the second term vanishes and this reduces to
/// (4r₀⁴-4r₀²)/((1+r₀²)^{5/2}(2+r₀²)^{3/2}).
#[inline]
pub fn d3p(r: f64) -> f64 {
    if r > ASYMPTOTIC_RADIUS {
        return -3.0 / (r * r * r * r);
    }
    let s = r * r;
    let d = 1.0 + s;
    let qq = q(r);
    let d4 = d * d * d * d;
    let q3 = qq * qq * qq;
    let t1 = (5.0 * s * s - 6.0 * s - 6.0) / (d4 * q3);
    let t2 = s * (8.0 * s + 13.0) * (s * s - 2.0 * s - 6.0) / (d4 * d * d * q3 * qq * qq);
    t1 - t2
}

pub fn eval_p(r: f64) -> Result<f64> {
    check_radius(r).map(p)
}

pub fn eval_q(r: f64) -> Result<f64> {
    check_radius(r).map(q)
}

pub fn eval_dp(r: f64) -> Result<f64> {
    check_radius(r).map(dp)
}

pub fn eval_d2p(r: f64) -> Result<f64> {
    check_radius(r).map(d2p)
}

pub fn eval_d3p(r: f64) -> Result<f64> {
    check_radius(r).map(d3p)
}

/// Unique positive root of p″, found by bisection on [1, 3].
///
/// The sign change is analytically guaranteed in the bracket: the numerator
/// r⁴-2r²-6 is -7 at r=1 and +57 at r=3.
pub fn critical_point() -> f64 {
    let (mut lo, mut hi) = (1.0_f64, 3.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if d2p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form dispersion family. Stateless apart from the cached critical
/// radius; `r0` is produced by `critical_point()` and equals sqrt(1+sqrt(7)).
#[derive(Debug, Clone, Copy)]
pub struct DispersionProfile {
    pub r0: f64,
    pub q0: f64,
}

impl DispersionProfile {
    pub fn new() -> Self {
        DispersionProfile {
            r0: critical_point(),
            q0: Q0,
        }
    }
}

impl Default for DispersionProfile {
    fn default() -> Self {
        Self::new()
    }
}

/// Which of the four resonance phases ±p(ξ)±p(ξ-η)±p(η).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseIndex {
    /// p(ξ) - p(ξ-η) - p(η)
    Phi1,
    /// p(ξ) + p(ξ-η) + p(η)
    Phi2,
    /// p(ξ) - p(ξ-η) + p(η)
    Phi3,
    /// p(ξ) + p(ξ-η) - p(η)
    Phi4,
}

/// A frequency pair (ξ, η); the third leg ξ-η is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyTriple {
    pub xi: [f64; 3],
    pub eta: [f64; 3],
}

#[inline]
pub(crate) fn vec_sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn vec_norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
pub(crate) fn vec_dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl FrequencyTriple {
    pub fn new(xi: [f64; 3], eta: [f64; 3]) -> Self {
        FrequencyTriple { xi, eta }
    }

    #[inline]
    pub fn xi_minus_eta(&self) -> [f64; 3] {
        vec_sub(self.xi, self.eta)
    }
}

/// Φ_j(ξ, η) for the requested sign pattern.
pub fn eval_phase(j: PhaseIndex, t: &FrequencyTriple) -> f64 {
    let a = p(vec_norm(t.xi));
    let b = p(vec_norm(t.xi_minus_eta()));
    let c = p(vec_norm(t.eta));
    match j {
        PhaseIndex::Phi1 => a - b - c,
        PhaseIndex::Phi2 => a + b + c,
        PhaseIndex::Phi3 => a - b + c,
        PhaseIndex::Phi4 => a + b - c,
    }
}

/// Right-hand side of the phase lower bound
///   |c|·{(1-cos[c,a]) + (1-cos[b,a])} + |a||b||c| / ((1+|a||b|)(1+|c|²))
/// with a = ξ, b = ξ-η, c = η relabeled so |c| ≤ |b|. Φ₁ is symmetric in
/// (ξ-η, η), so callers may pass raw (ξ, η). Degenerate legs return 0.
pub fn phase_bound_rhs(t: &FrequencyTriple) -> f64 {
    let a = t.xi;
    let (b, c) = {
        let b = t.xi_minus_eta();
        let c = t.eta;
        if vec_norm(c) <= vec_norm(b) {
            (b, c)
        } else {
            (c, b)
        }
    };
    let (na, nb, nc) = (vec_norm(a), vec_norm(b), vec_norm(c));
    if na == 0.0 || nc == 0.0 {
        return 0.0;
    }
    let cos_ca = (vec_dot(c, a) / (nc * na)).clamp(-1.0, 1.0);
    let cos_ba = if nb == 0.0 {
        1.0
    } else {
        (vec_dot(b, a) / (nb * na)).clamp(-1.0, 1.0)
    };
    nc * ((1.0 - cos_ca) + (1.0 - cos_ba)) + na * nb * nc / ((1.0 + na * nb) * (1.0 + nc * nc))
}

/// Frequency band relative to the critical radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    Crit,
    High,
    Full,
}

impl Band {
    pub fn parse(s: &str) -> Result<Band> {
        match s {
            "low" => Ok(Band::Low),
            "crit" => Ok(Band::Crit),
            "high" => Ok(Band::High),
            "full" => Ok(Band::Full),
            other => Err(Error::Config(format!("unknown band '{other}'"))),
        }
    }
}

/// C^∞ transition built from the exp(-1/x) mollifier: 0 for x ≤ 0, 1 for
/// x ≥ 1, strictly monotone in between.
#[inline]
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// The smooth partition ψ₀ + ψ_{r₀} + ψ_∞ ≡ 1 on (0, ∞).
///
/// ψ_{r₀} = 1 on |r-r₀| ≤ ε and 0 on |r-r₀| ≥ 2ε; ψ₀ = (1-ψ_{r₀})·1_{r<r₀}
/// and ψ_∞ = (1-ψ_{r₀})·1_{r≥r₀}, both smooth because 1-ψ_{r₀} vanishes
/// identically near r₀.
#[derive(Debug, Clone, Copy)]
pub struct BandCutoffs {
    pub epsilon: f64,
    r0: f64,
}

impl BandCutoffs {
    /// Requires 0 < ε < r₀/4 and a fixed sign of p‴ on [r₀-2ε, r₀+2ε]
    /// (checked by sampling), so the stationary-phase degeneracy at r₀ stays
    /// simple across the whole critical band.
    pub fn new(epsilon: f64) -> Result<Self> {
        let r0 = critical_point();
        if !(epsilon > 0.0 && epsilon < r0 / 4.0) {
            return Err(Error::Config(format!(
                "band half-width epsilon must lie in (0, r0/4) = (0, {:.6}), got {epsilon}",
                r0 / 4.0
            )));
        }
        let sign = d3p(r0).signum();
        for i in 0..=512 {
            let r = r0 - 2.0 * epsilon + 4.0 * epsilon * (i as f64) / 512.0;
            if d3p(r).signum() != sign {
                return Err(Error::Config(format!(
                    "p''' changes sign on [r0-2eps, r0+2eps] for epsilon = {epsilon}; choose a smaller band"
                )));
            }
        }
        Ok(BandCutoffs { epsilon, r0 })
    }

    #[inline]
    pub fn crit(&self, r: f64) -> f64 {
        let x = (2.0 * self.epsilon - (r - self.r0).abs()) / self.epsilon;
        smooth_step(x)
    }

    #[inline]
    pub fn low(&self, r: f64) -> f64 {
        if r < self.r0 {
            1.0 - self.crit(r)
        } else {
            0.0
        }
    }

    #[inline]
    pub fn high(&self, r: f64) -> f64 {
        if r >= self.r0 {
            1.0 - self.crit(r)
        } else {
            0.0
        }
    }

    #[inline]
    pub fn eval(&self, band: Band, r: f64) -> f64 {
        match band {
            Band::Low => self.low(r),
            Band::Crit => self.crit(r),
            Band::High => self.high(r),
            Band::Full => 1.0,
        }
    }

    /// Support of the band on the half-line, `None` end meaning unbounded.
    pub fn support(&self, band: Band) -> (f64, Option<f64>) {
        match band {
            Band::Low => (0.0, Some(self.r0 - self.epsilon)),
            Band::Crit => (self.r0 - 2.0 * self.epsilon, Some(self.r0 + 2.0 * self.epsilon)),
            Band::High => (self.r0 + self.epsilon, None),
            Band::Full => (0.0, None),
        }
    }
}

/// Default half-width of the critical band.
pub const DEFAULT_EPSILON: f64 = 0.3;

/// Checked single-point band evaluation.
pub fn band_cutoff(band: Band, epsilon: f64, r: f64) -> Result<f64> {
    Ok(BandCutoffs::new(epsilon)?.eval(band, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn r0_closed_form() -> f64 {
        (1.0 + 7.0_f64.sqrt()).sqrt()
    }

    #[test]
    fn p_at_zero_and_one() {
        assert_eq!(eval_p(0.0).unwrap(), 0.0);
        assert_relative_eq!(eval_p(1.0).unwrap(), (1.5f64).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(eval_p(1.0).unwrap(), 1.224744871, max_relative = 1e-9);
    }

    #[test]
    fn p_asymptotically_linear() {
        let r = 1e6;
        assert!((eval_p(r).unwrap() / r - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(eval_p(-1.0).is_err());
        assert!(eval_p(f64::NAN).is_err());
        assert!(eval_q(f64::INFINITY).is_err());
        assert!(eval_dp(-0.5).is_err());
    }

    #[test]
    fn q_endpoints() {
        assert_relative_eq!(eval_q(0.0).unwrap(), Q0, max_relative = 1e-15);
        assert!(q(1e8) >= 1.0 && q(1e8) < 1.0 + 1e-15);
        assert_relative_eq!(q_minus_one(2.0), q(2.0) - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn d2p_vanishes_at_critical_radius() {
        assert!(eval_d2p(r0_closed_form()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn critical_point_matches_closed_form() {
        let r0 = critical_point();
        assert_abs_diff_eq!(r0, r0_closed_form(), epsilon = 1e-12);
        assert!(d2p(r0 - 0.1) * d2p(r0 + 0.1) < 0.0);
        assert!(d3p(r0).abs() > 0.01);
    }

    #[test]
    fn profile_constants() {
        let prof = DispersionProfile::new();
        assert_abs_diff_eq!(prof.r0, r0_closed_form(), epsilon = 1e-12);
        assert_eq!(prof.q0, Q0);
    }

    /// Five-point central differences as the independent derivative oracle.
    fn fd5(f: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
        (-f(r + 2.0 * h) + 8.0 * f(r + h) - 8.0 * f(r - h) + f(r - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn derivative_ladder_matches_finite_differences() {
        // 100 log-spaced radii in [0.01, 100].
        for i in 0..100 {
            let r = 0.01 * (10000.0_f64).powf(i as f64 / 99.0);
            let h = 1e-5 * r.max(0.1);
            assert_relative_eq!(dp(r), fd5(p, r, h), max_relative = 1e-6);
            assert_relative_eq!(dq(r), fd5(q, r, h), max_relative = 1e-6);
            let d2 = fd5(dp, r, h);
            if d2.abs() > 1e-12 {
                assert_relative_eq!(d2p(r), d2, max_relative = 1e-6);
            }
            assert_relative_eq!(d3p(r), fd5(d2p, r, h), max_relative = 1e-6);
        }
    }

    #[test]
    fn dp_against_fd_at_spec_point() {
        let fd = (p(0.7 + 1e-5) - p(0.7 - 1e-5)) / 2e-5;
        assert_relative_eq!(eval_dp(0.7).unwrap(), fd, max_relative = 1e-6);
    }

    #[test]
    fn dp_positive_over_twelve_decades() {
        for i in 0..=240 {
            let r = 1e-6 * (1e12_f64).powf(i as f64 / 240.0);
            assert!(dp(r) > 0.0, "p' must be positive at r = {r}");
        }
    }

    #[test]
    fn q_is_decreasing() {
        let mut prev = q(0.0);
        for i in 1..=200 {
            let r = 1e-3 * (1e7_f64).powf(i as f64 / 200.0);
            let cur = q(r);
            assert!(cur <= prev + 1e-15, "q must be nonincreasing at r = {r}");
            prev = cur;
        }
    }

    #[test]
    fn phase_examples() {
        let xi = [0.3, -1.1, 0.7];
        let t = FrequencyTriple::new(xi, xi);
        assert_abs_diff_eq!(eval_phase(PhaseIndex::Phi1, &t), 0.0, epsilon = 1e-14);

        let t2 = FrequencyTriple::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_relative_eq!(
            eval_phase(PhaseIndex::Phi1, &t2),
            p(2.0) - 2.0 * p(1.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(eval_phase(PhaseIndex::Phi1, &t2), -0.2586, max_relative = 1e-3);

        let t3 = FrequencyTriple::new([0.5, 0.5, 0.0], [0.0, 0.2, -0.4]);
        assert!(eval_phase(PhaseIndex::Phi2, &t3) >= p(vec_norm(t3.xi)));
    }

    #[test]
    fn phase_bound_rhs_examples() {
        // c = 0.
        let t = FrequencyTriple::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]);
        assert_eq!(phase_bound_rhs(&t), 0.0);

        // Collinear aligned: cos terms drop.
        let t = FrequencyTriple::new([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_relative_eq!(phase_bound_rhs(&t), 1.0 / 3.0, max_relative = 1e-14);
        let ratio = eval_phase(PhaseIndex::Phi1, &t).abs() / phase_bound_rhs(&t);
        assert_relative_eq!(ratio, 0.776, max_relative = 1e-3);
    }

    fn rotate_z(v: [f64; 3], a: f64) -> [f64; 3] {
        [
            v[0] * a.cos() - v[1] * a.sin(),
            v[0] * a.sin() + v[1] * a.cos(),
            v[2],
        ]
    }

    proptest! {
        #[test]
        fn phase_symmetries(
            xi in proptest::array::uniform3(-5.0f64..5.0),
            eta in proptest::array::uniform3(-5.0f64..5.0),
        ) {
            let t = FrequencyTriple::new(xi, eta);
            let swapped = FrequencyTriple::new(eta, xi);
            let shifted = FrequencyTriple::new(vec_sub(xi, eta), xi);
            let phi1 = eval_phase(PhaseIndex::Phi1, &t);
            prop_assert!((eval_phase(PhaseIndex::Phi4, &t) + eval_phase(PhaseIndex::Phi1, &swapped)).abs() < 1e-12);
            prop_assert!((eval_phase(PhaseIndex::Phi3, &t) + eval_phase(PhaseIndex::Phi1, &shifted)).abs() < 1e-12);
            // Radiality: invariant under simultaneous rotation.
            let a = 0.7368;
            let tr = FrequencyTriple::new(rotate_z(xi, a), rotate_z(eta, a));
            prop_assert!((eval_phase(PhaseIndex::Phi1, &tr) - phi1).abs() < 1e-10);
        }

        #[test]
        fn partition_of_unity(r in 1e-6f64..50.0) {
            let cuts = BandCutoffs::new(DEFAULT_EPSILON).unwrap();
            let s = cuts.low(r) + cuts.crit(r) + cuts.high(r);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn band_cutoff_support() {
        let eps = DEFAULT_EPSILON;
        let r0 = critical_point();
        assert_eq!(band_cutoff(Band::Crit, eps, r0).unwrap(), 1.0);
        assert_eq!(band_cutoff(Band::Crit, eps, r0 + 3.0 * eps).unwrap(), 0.0);
        assert_eq!(band_cutoff(Band::Crit, eps, r0 - 2.5 * eps).unwrap(), 0.0);
        // psi_0 vanishes past r0 - eps, psi_inf below r0 + eps.
        let cuts = BandCutoffs::new(eps).unwrap();
        assert_eq!(cuts.low(r0 - 0.5 * eps), 0.0);
        assert_eq!(cuts.high(r0 + 0.5 * eps), 0.0);
        assert!(cuts.low(r0 - 3.0 * eps) > 0.0);
        assert!(cuts.high(r0 + 3.0 * eps) > 0.0);
        // Partition at 10^4 radii.
        for i in 0..10_000 {
            let r = 1e-3 + 10.0 * (i as f64) / 1e4;
            let s = cuts.low(r) + cuts.crit(r) + cuts.high(r);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn band_cutoff_rejects_bad_epsilon() {
        assert!(band_cutoff(Band::Crit, 0.0, 1.0).is_err());
        assert!(band_cutoff(Band::Crit, 0.5, 1.0).is_err());
    }
}
