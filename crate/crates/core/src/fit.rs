//! Log-log least-squares exponent fitting for decay traces.

use crate::{Error, Result};

/// Ordinary least squares of log(value) against log(t) over the points whose
/// t lies inside `window`. Returns (slope, intercept).
pub fn log_log_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::Shape("times and values differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= window.0 && **t <= window.1 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 6 {
        return Err(Error::InsufficientFitPoints {
            have: pts.len(),
            need: 6,
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Domain("degenerate abscissas in log-log fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

/// Default fit window [t_max/30, t_max]: early times carry the (1+t)
/// prefactor crossover and are excluded.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    let t_max = times.iter().cloned().fold(f64::MIN, f64::max);
    (t_max / 30.0, t_max)
}

/// Log-spaced sample times.
pub fn log_spaced(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && points >= 2);
    (0..points)
        .map(|i| t0 * (t1 / t0).powf(i as f64 / (points - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exact_power_law() {
        let times = log_spaced(1.0, 1000.0, 24);
        let values: Vec<f64> = times.iter().map(|t| 3.7 * t.powf(-4.0 / 3.0)).collect();
        let (slope, intercept) = log_log_fit(&times, &values, (1.0, 1000.0)).unwrap();
        assert_relative_eq!(slope, -4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(intercept.exp(), 3.7, max_relative = 1e-12);
    }

    #[test]
    fn window_restricts_points() {
        let times = log_spaced(1.0, 100.0, 20);
        let values: Vec<f64> = times
            .iter()
            .map(|t| if *t < 10.0 { 1.0 } else { 10.0 * t.powf(-1.0) })
            .collect();
        let (slope, _) = log_log_fit(&times, &values, (10.0, 100.0)).unwrap();
        assert_relative_eq!(slope, -1.0, max_relative = 1e-10);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let times = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let values = vec![1.0; 5];
        assert!(matches!(
            log_log_fit(&times, &values, (0.5, 6.0)),
            Err(Error::InsufficientFitPoints { have: 5, need: 6 })
        ));
    }
}
