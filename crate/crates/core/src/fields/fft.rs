//! Thin 3D FFT driver over rustfft: three axis passes of 1D transforms with
//! a process-wide plan cache keyed by size. Lines are processed in parallel;
//! the per-line arithmetic is schedule-independent, so results are
//! deterministic regardless of thread count.

use crate::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place unnormalized 3D DFT on an n³ cube, x-fastest layout.
pub fn fft3(data: &mut [Complex], n: usize, dir: Direction) {
    assert_eq!(data.len(), n * n * n);
    let plans = plans_for(n);
    let fft = match dir {
        Direction::Forward => &plans.forward,
        Direction::Inverse => &plans.inverse,
    };

    // x lines are contiguous; batch them so each task carries real work.
    data.par_chunks_mut(n * n).for_each_init(
        || vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, slab| {
            for line in slab.chunks_exact_mut(n) {
                fft.process_with_scratch(line, scratch);
            }
        },
    );

    // y lines: stride n within each z-plane.
    data.par_chunks_exact_mut(n * n).for_each_init(
        || {
            (
                vec![Complex::new(0.0, 0.0); n],
                vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            )
        },
        |(line, scratch), plane| {
            for i in 0..n {
                for j in 0..n {
                    line[j] = plane[j * n + i];
                }
                fft.process_with_scratch(line, scratch);
                for j in 0..n {
                    plane[j * n + i] = line[j];
                }
            }
        },
    );

    // z lines: stride n², parallel over batches of columns.
    let nn = n * n;
    let raw = SendPtr(data.as_mut_ptr());
    let batch = n.max(64);
    (0..nn).into_par_iter().step_by(batch).for_each_init(
        || {
            (
                vec![Complex::new(0.0, 0.0); n],
                vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            )
        },
        |(line, scratch), col0| {
            let raw = &raw;
            let base = raw.0;
            // Each column (i, j) touches the disjoint index set col + k·n².
            for col in col0..(col0 + batch).min(nn) {
                unsafe {
                    for k in 0..n {
                        line[k] = *base.add(col + k * nn);
                    }
                    fft.process_with_scratch(line, scratch);
                    for k in 0..n {
                        *base.add(col + k * nn) = line[k];
                    }
                }
            }
        },
    );
}

struct SendPtr(*mut Complex);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_of_plane_wave_is_delta() {
        let n = 16;
        let mut data = vec![Complex::new(0.0, 0.0); n * n * n];
        // e^{i 2π (2x + 3y + 5z)/n}
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let ph = 2.0 * std::f64::consts::PI
                        * (2.0 * i as f64 + 3.0 * j as f64 + 5.0 * k as f64)
                        / n as f64;
                    data[(k * n + j) * n + i] = Complex::new(ph.cos(), ph.sin());
                }
            }
        }
        fft3(&mut data, n, Direction::Forward);
        let hot = (5 * n + 3) * n + 2;
        assert!((data[hot] - Complex::new((n * n * n) as f64, 0.0)).norm() < 1e-8);
        let rest: f64 = data
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hot)
            .map(|(_, c)| c.norm())
            .sum();
        assert!(rest < 1e-6);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let n = 16;
        let mut data: Vec<Complex> = (0..n * n * n)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        fft3(&mut data, n, Direction::Forward);
        fft3(&mut data, n, Direction::Inverse);
        let scale = 1.0 / (n * n * n) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a * scale - b).norm() < 1e-12);
        }
    }
}
