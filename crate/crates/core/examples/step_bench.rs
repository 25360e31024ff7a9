use epsim_core::fields::Grid3;
use epsim_core::solver::*;
use std::time::Instant;

fn main() {
    let g = Grid3::new(32, 32.0).unwrap();
    let st = initial_gaussian(g, 1e-3, 2.0, [16.0; 3]).unwrap();
    let cfg = SolverConfig::defaults(g);

    let t0 = Instant::now();
    for _ in 0..20 {
        let _ = boltzmann_poisson_solve(&st.rho, 1e-12, 200).unwrap();
    }
    println!("poisson solve: {:.1} ms", t0.elapsed().as_secs_f64() * 50.0);
    let sol = boltzmann_poisson_solve(&st.rho, 1e-12, 200).unwrap();
    println!("  iterations: {}", sol.iterations);

    let t0 = Instant::now();
    for _ in 0..20 {
        let _ = alpha_nonlinear(&st, &cfg).unwrap();
    }
    println!("alpha_nonlinear (incl to_alpha): {:.1} ms", t0.elapsed().as_secs_f64() * 50.0);

    let t0 = Instant::now();
    let mut s = st.clone();
    for _ in 0..20 {
        s = step(&s, 0.05, &cfg).unwrap();
    }
    println!("full step: {:.1} ms", t0.elapsed().as_secs_f64() * 50.0);
}
