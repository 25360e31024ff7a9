//! 3D periodic spectral-grid infrastructure: the grid, real/spectral field
//! containers, transforms, radial Fourier multipliers, Littlewood-Paley
//! projections, the 2/3-rule dealias mask, and the binary snapshot format.

mod fft;
pub mod snapshot;

use crate::dispersion;
use crate::{par_sum, Complex, Error, Result};
use rayon::prelude::*;

/// Cubic periodic grid: n points per axis (even, n ≥ 16; powers of two are
/// fastest but any mixed-radix size works), period L. Wavenumbers are
/// ξ_k = 2πk/L with k ∈ [-n/2, n/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub n: usize,
    pub box_len: f64,
}

impl Grid3 {
    pub fn new(n: usize, box_len: f64) -> Result<Grid3> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size must be even and >= 16, got {n}"
            )));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(Error::Config(format!("box length must be positive, got {box_len}")));
        }
        Ok(Grid3 { n, box_len })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    #[inline]
    pub fn volume(&self) -> f64 {
        self.box_len * self.box_len * self.box_len
    }

    /// Signed integer wavenumber index for axis position i.
    #[inline]
    pub fn k_int(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber 2πk/L for axis position i.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.k_int(i) as f64 / self.box_len
    }

    /// Row-major, x-fastest linear index.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }

    /// (|ξ|, ξ) at the linear index.
    #[inline]
    pub fn xi_at(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let i = idx % n;
        let j = (idx / n) % n;
        let k = idx / (n * n);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    #[inline]
    pub fn xi_abs_at(&self, idx: usize) -> f64 {
        let v = self.xi_at(idx);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    /// Largest wavenumber magnitude along one axis (the Nyquist mode).
    pub fn xi_max_axis(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / self.box_len
    }

    /// Physical coordinates of grid point (i, j, k), in [0, L).
    #[inline]
    pub fn x_at(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = self.spacing();
        let i = idx % n;
        let j = (idx / n) % n;
        let k = idx / (n * n);
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }
}

/// Real-valued samples on the grid, row-major x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid3,
    pub data: Vec<f64>,
}

/// Complex Fourier coefficients under the convention
///   F(ξ) = ∫ f(x) e^{-ix·ξ} dx  (discretized with cell-volume weight),
/// inverse carrying the (2π)^{-3} factor, i.e. f(x) = L^{-3} Σ_ξ F(ξ) e^{ix·ξ}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid3,
    pub data: Vec<Complex>,
}

impl RealField {
    pub fn zeros(grid: Grid3) -> RealField {
        RealField {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64 + Sync) -> RealField {
        let mut data = vec![0.0; grid.len()];
        data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, v)| {
            *v = f(grid.x_at(idx));
        });
        RealField { grid, data }
    }

    pub fn mean(&self) -> f64 {
        par_sum(&self.data, 1 << 14, |v| *v) / self.grid.len() as f64
    }

    pub fn sup_abs(&self) -> f64 {
        self.data
            .par_iter().with_min_len(1 << 15)
            .map(|v| v.abs())
            .reduce(|| 0.0, f64::max)
    }

    pub fn l2_box(&self) -> f64 {
        (par_sum(&self.data, 1 << 14, |v| v * v) * self.grid.cell_volume()).sqrt()
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.data.par_iter_mut().with_min_len(1 << 15).for_each(|v| *v -= m);
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid3) -> SpectralField {
        SpectralField {
            grid,
            data: vec![Complex::new(0.0, 0.0); grid.len()],
        }
    }

    /// L²(box) norm via Parseval.
    pub fn l2_box(&self) -> f64 {
        (par_sum(&self.data, 1 << 14, |c| c.norm_sqr()) / self.grid.volume()).sqrt()
    }

    /// Largest relative Hermitian-symmetry defect c(-ξ) - conj(c(ξ)).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let scale = self
            .data
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let mut worst = 0.0_f64;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let a = self.data[self.grid.idx(i, j, k)];
                    let (im, jm, km) = ((n - i) % n, (n - j) % n, (n - k) % n);
                    let b = self.data[self.grid.idx(im, jm, km)];
                    worst = worst.max((b - a.conj()).norm());
                }
            }
        }
        worst / scale
    }
}

fn check_same_grid(a: Grid3, b: Grid3) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "grid mismatch: {}^3/L={} vs {}^3/L={}",
            a.n, a.box_len, b.n, b.box_len
        )));
    }
    Ok(())
}

/// Forward transform of a real field.
pub fn transform_forward(f: &RealField) -> SpectralField {
    let mut data: Vec<Complex> = f.data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft::fft3(&mut data, f.grid.n, fft::Direction::Forward);
    let w = f.grid.cell_volume();
    data.par_iter_mut().with_min_len(1 << 15).for_each(|c| *c *= w);
    SpectralField { grid: f.grid, data }
}

/// Inverse transform to a real field. The imaginary residue (rounding level
/// for Hermitian input) is discarded.
pub fn transform_inverse(ff: &SpectralField) -> RealField {
    let c = transform_inverse_c(ff);
    RealField {
        grid: ff.grid,
        data: c.iter().map(|z| z.re).collect(),
    }
}

/// Inverse transform keeping complex values (for complex physical fields such
/// as the alpha variables or propagated data).
pub fn transform_inverse_c(ff: &SpectralField) -> Vec<Complex> {
    let mut data = ff.data.clone();
    fft::fft3(&mut data, ff.grid.n, fft::Direction::Inverse);
    let w = 1.0 / ff.grid.volume();
    data.par_iter_mut().with_min_len(1 << 15).for_each(|c| *c *= w);
    data
}

/// Forward transform of complex physical samples.
pub fn transform_forward_c(grid: Grid3, phys: &[Complex]) -> Result<SpectralField> {
    if phys.len() != grid.len() {
        return Err(Error::Shape(format!(
            "expected {} samples, got {}",
            grid.len(),
            phys.len()
        )));
    }
    let mut data = phys.to_vec();
    fft::fft3(&mut data, grid.n, fft::Direction::Forward);
    let w = grid.cell_volume();
    data.par_iter_mut().with_min_len(1 << 15).for_each(|c| *c *= w);
    Ok(SpectralField { grid, data })
}

/// Coefficient-wise multiplication by a radial symbol m(|ξ|).
///
/// Fails with a singular-multiplier error naming the offending mode if the
/// symbol is not finite at any discrete wavenumber carried by the grid.
pub fn apply_radial_multiplier(
    f: &SpectralField,
    m: impl Fn(f64) -> f64 + Sync,
) -> Result<SpectralField> {
    let grid = f.grid;
    let mut out = f.clone();
    let bad = std::sync::Mutex::new(None::<usize>);
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let v = m(grid.xi_abs_at(idx));
        if !v.is_finite() {
            *bad.lock().unwrap() = Some(idx);
        }
        *c *= v;
    });
    if let Some(idx) = bad.into_inner().unwrap() {
        let n = grid.n;
        let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
        return Err(Error::SingularMultiplier(
            grid.k_int(i),
            grid.k_int(j),
            grid.k_int(k),
        ));
    }
    Ok(out)
}

/// |∇|^{-1} with the ξ=0 mode defined as 0, legal only on mean-zero fields.
pub fn inverse_gradient_magnitude(f: &SpectralField) -> Result<SpectralField> {
    let mean = f.data[0].norm() / f.grid.volume();
    let scale = f.l2_box().max(1e-300);
    if mean > 1e-10 * scale.max(1.0) {
        return Err(Error::NonzeroMean(mean));
    }
    let grid = f.grid;
    let mut out = f.clone();
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let r = grid.xi_abs_at(idx);
        if r > 0.0 {
            *c /= r;
        } else {
            *c = Complex::new(0.0, 0.0);
        }
    });
    Ok(out)
}

/// Spectral partial derivative along one axis.
pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    let grid = f.grid;
    let mut out = f.clone();
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let xi = grid.xi_at(idx)[axis];
        *c *= Complex::new(0.0, xi);
    });
    out
}

/// Gradient of a real field, as three real fields.
pub fn gradient(f_hat: &SpectralField) -> [RealField; 3] {
    [0, 1, 2].map(|axis| transform_inverse(&derivative(f_hat, axis)))
}

/// Spectral curl magnitude ‖∇×v‖_{L²(box)}.
pub fn curl_l2(v_hat: &[SpectralField; 3]) -> f64 {
    let c0 = sub_spec(&derivative(&v_hat[2], 1), &derivative(&v_hat[1], 2));
    let c1 = sub_spec(&derivative(&v_hat[0], 2), &derivative(&v_hat[2], 0));
    let c2 = sub_spec(&derivative(&v_hat[1], 0), &derivative(&v_hat[0], 1));
    (c0.l2_box().powi(2) + c1.l2_box().powi(2) + c2.l2_box().powi(2)).sqrt()
}

pub fn sub_spec(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let mut out = a.clone();
    out.data
        .par_iter_mut().with_min_len(1 << 15)
        .zip(&b.data)
        .for_each(|(x, y)| *x -= y);
    out
}

/// Recover |∇|ψ from v = ∇ψ: per mode -(iξ·v̂)/|ξ|, ξ=0 mode set to 0.
///
/// Rejects inputs whose relative spectral curl exceeds 1e-10.
pub fn riesz_inverse_apply(v: &[RealField; 3]) -> Result<RealField> {
    let grid = v[0].grid;
    check_same_grid(grid, v[1].grid)?;
    check_same_grid(grid, v[2].grid)?;
    let v_hat = [
        transform_forward(&v[0]),
        transform_forward(&v[1]),
        transform_forward(&v[2]),
    ];
    let scale = (v_hat[0].l2_box().powi(2) + v_hat[1].l2_box().powi(2) + v_hat[2].l2_box().powi(2))
        .sqrt();
    let curl = curl_l2(&v_hat);
    let tol = 1e-10;
    if scale > 0.0 && curl > tol * scale {
        return Err(Error::NotAGradient {
            curl: curl / scale,
            tol,
        });
    }
    let mut out = SpectralField::zeros(grid);
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        let xi = grid.xi_at(idx);
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        if r > 0.0 {
            let div = Complex::new(0.0, 1.0)
                * (xi[0] * v_hat[0].data[idx] + xi[1] * v_hat[1].data[idx] + xi[2] * v_hat[2].data[idx]);
            *c = -div / r;
        }
    });
    Ok(transform_inverse(&out))
}

/// Littlewood-Paley annulus bump φ(r) = χ(r) - χ(2r) with χ a smooth radial
/// cutoff, 1 on r ≤ 1 and 0 on r ≥ 2; Σ_N φ(r/N) telescopes to 1 for r ≠ 0.
#[inline]
pub fn lp_chi(r: f64) -> f64 {
    dispersion::smooth_step(2.0 - r)
}

#[inline]
pub fn lp_phi(r: f64) -> f64 {
    lp_chi(r) - lp_chi(2.0 * r)
}

/// Dyadic range [2^{j_min}, 2^{j_max}] resolvable on the grid: every nonzero
/// wavenumber magnitude lands inside the telescoping window.
pub fn lp_resolvable_range(grid: Grid3) -> (i32, i32) {
    let xi_min = 2.0 * std::f64::consts::PI / grid.box_len;
    let xi_max = grid.xi_max_axis() * 3.0_f64.sqrt();
    let j_min = (xi_min / 2.0).log2().floor() as i32;
    let j_max = (2.0 * xi_max).log2().ceil() as i32;
    (j_min, j_max)
}

/// Littlewood-Paley projection P_N = φ(ξ/N).
pub fn littlewood_paley(f: &SpectralField, n_dyadic: f64) -> Result<SpectralField> {
    let (j_min, j_max) = lp_resolvable_range(f.grid);
    let j = n_dyadic.log2();
    if !(n_dyadic > 0.0) || j < j_min as f64 - 0.5 || j > j_max as f64 + 0.5 {
        return Err(Error::Config(format!(
            "dyadic scale {n_dyadic} outside the grid-resolvable range [2^{j_min}, 2^{j_max}]"
        )));
    }
    apply_radial_multiplier(f, |r| lp_phi(r / n_dyadic))
}

/// True if the mode survives the 2/3-rule (all |k_i| ≤ n/3).
#[inline]
pub fn inside_dealias_ball(grid: Grid3, idx: usize) -> bool {
    let n = grid.n;
    let i = idx % n;
    let j = (idx / n) % n;
    let k = idx / (n * n);
    let lim = (n / 3) as i64;
    grid.k_int(i).abs() <= lim && grid.k_int(j).abs() <= lim && grid.k_int(k).abs() <= lim
}

/// 2/3-rule dealias: zeroes all modes with any |k_i| > n/3.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid;
    let mut out = f.clone();
    out.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        if !inside_dealias_ball(grid, idx) {
            *c = Complex::new(0.0, 0.0);
        }
    });
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let grid = f.grid;
    f.data.par_iter_mut().with_min_len(1 << 15).enumerate().for_each(|(idx, c)| {
        if !inside_dealias_ball(grid, idx) {
            *c = Complex::new(0.0, 0.0);
        }
    });
}
