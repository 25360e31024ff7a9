use epsim_core::fields::{self, Grid3, RealField};
use epsim_core::solver::*;

fn max_grad_rho(state: &FluidState) -> f64 {
    let rho_hat = fields::transform_forward(&state.rho);
    fields::gradient(&rho_hat)
        .iter()
        .map(|g| g.sup_abs())
        .fold(0.0_f64, f64::max)
}

/// Quasi-1D pulse: Gaussian profile in x1, uniform transverse.
fn pulse_state(g: Grid3, amp: f64, sigma: f64, center: f64) -> FluidState {
    let l = g.box_len;
    let prof = |x: f64| {
        let mut d = (x - center).abs();
        if d > l / 2.0 { d = l - d; }
        (-d * d / (sigma * sigma)).exp()
    };
    let mut rho = RealField::from_fn(g, |x| prof(x[0]));
    rho.subtract_mean();
    let mut rh = fields::transform_forward(&rho);
    fields::dealias_in_place(&mut rh);
    let base = fields::transform_inverse(&rh);
    let rho = RealField { grid: g, data: base.data.iter().map(|v| amp * v).collect() };
    let psi = RealField { grid: g, data: base.data.iter().map(|v| amp * sigma * v).collect() };
    FluidState::new(rho, psi, 0.0).unwrap()
}

fn growth(mode: Mode, seed: u64, amp: f64, t_end: f64) -> f64 {
    let g = Grid3::new(48, 32.0).unwrap();
    use rand::Rng;
    let mut rng = epsim_core::rng::stream(seed, 0);
    let center = 16.0 + rng.gen_range(-2.0..2.0);
    let st = pulse_state(g, amp, 3.0, center);
    let g0 = max_grad_rho(&st);
    let mut cfg = SolverConfig::defaults(g);
    cfg.dt = 0.1;
    cfg.t_end = t_end;
    cfg.mode = mode;
    cfg.snapshot_every = 10;
    let mut peak = g0;
    let res = run(&cfg, st, Some(&mut |s: &FluidState| {
        let v = max_grad_rho(s);
        if v > peak { peak = v; }
        Ok(())
    }));
    res.outcome.unwrap();
    peak / g0
}

fn main() {
    for amp in [0.12] {
        for t_end in [10.0] {
            for seed in [1u64, 2, 3] {
                let ge = growth(Mode::PureEuler, seed, amp, t_end);
                let gp = growth(Mode::EulerPoisson, seed, amp, t_end);
                println!("amp={amp} t_end={t_end} seed={seed}: euler {ge:.3}, poisson {gp:.3}, ratio {:.3}", ge/gp);
            }
        }
    }
}
