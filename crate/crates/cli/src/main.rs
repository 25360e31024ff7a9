//! `epsim` — experiment runner for the ion Euler-Poisson spectral toolkit.
//!
//! Subcommands: dispersion-table, kernel, decay, simulate, norms,
//! phase-verify, mult-norms, bilinear-check. Outputs are CSV files (with a
//! `#` header carrying the tool version and the resolved-config hash) plus
//! structured text reports; every run also writes its fully-resolved config
//! next to the outputs. Exit codes: 0 success, 1 config error, 2 numerical
//! error. EPSIM_THREADS caps the worker pool.

mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{fmt_f64, RunConfig};
use epsim_core::dispersion::{self, Band};
use epsim_core::fields::{self, Grid3};
use epsim_core::multiplier::{
    self, PhaseVerifyConfig, SliceNormConfig, SliceWeight,
};
use epsim_core::propagator::{self, Datum, DecayScan, NormKind};
use epsim_core::solver;
use epsim_core::Complex;
use output::Writer;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "epsim", version, about = "Ion Euler-Poisson spectral toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate r, p, q, p', p'', p''' over a radius range.
    DispersionTable {
        #[arg(long, default_value_t = 0.01)]
        rmin: f64,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Log-spaced radii instead of linear.
        #[arg(long)]
        log: bool,
        #[arg(long, default_value = "dispersion.csv")]
        out: PathBuf,
    },
    /// Evaluate the radial half-wave kernel on a (t, x) product grid.
    Kernel {
        #[arg(long, default_value = "crit")]
        band: String,
        #[arg(long, default_value_t = dispersion::DEFAULT_EPSILON)]
        eps: f64,
        /// Comma-separated times.
        #[arg(long, default_value = "0,1,5")]
        t: String,
        /// Comma-separated radii |x|.
        #[arg(long, default_value = "0,1,10")]
        x: String,
        #[arg(long, default_value = "kernel.csv")]
        out: PathBuf,
    },
    /// Measure a band-wise decay trace and fit the exponent.
    Decay {
        #[arg(long, default_value = "crit")]
        band: String,
        /// inf | l10 | l2
        #[arg(long, default_value = "inf")]
        norm: String,
        #[arg(long, default_value_t = 10.0)]
        t0: f64,
        #[arg(long, default_value_t = 3000.0)]
        t1: f64,
        #[arg(long, default_value_t = 24)]
        points: usize,
        /// radial | grid
        #[arg(long, default_value = "radial")]
        datum: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = dispersion::DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = 96)]
        grid_n: usize,
        #[arg(long, default_value_t = 128.0)]
        grid_len: f64,
        /// Fit window override (defaults to [t1/30, t1]).
        #[arg(long)]
        fit_lo: Option<f64>,
        #[arg(long)]
        fit_hi: Option<f64>,
        #[arg(long, default_value = "decay.csv")]
        out: PathBuf,
    },
    /// Nonlinear Euler-Poisson run from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Norms of a snapshot file, one CSV row.
    Norms {
        #[arg(long)]
        snapshot: PathBuf,
        /// rho | psi | alpha
        #[arg(long, default_value = "rho")]
        field: String,
        #[arg(long, default_value_t = 5)]
        k: u32,
        #[arg(long, default_value = "norms.csv")]
        out: PathBuf,
    },
    /// Sampled verification of the phase lower bound.
    PhaseVerify {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        rmin: f64,
        #[arg(long, default_value_t = 1e3)]
        rmax: f64,
        #[arg(long, default_value = "phase")]
        out_prefix: String,
    },
    /// Derivative bounds and Sobolev-slice norms of the weighted multiplier.
    MultNorms {
        #[arg(long, default_value_t = 1.25)]
        lambda: f64,
        #[arg(long, default_value_t = 1.15)]
        s: f64,
        #[arg(long, default_value_t = 12)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 32.0)]
        extent: f64,
        /// none | eta | xi-eta
        #[arg(long, default_value = "none")]
        weight: String,
        #[arg(long, default_value_t = 100_000)]
        derivative_samples: u64,
        #[arg(long, default_value = "mult-norms.txt")]
        out: PathBuf,
    },
    /// Pseudo-product sanity and bilinear-estimate ratios on a small grid.
    BilinearCheck {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1.25)]
        lambda: f64,
        #[arg(long, default_value_t = 1.25)]
        s: f64,
        #[arg(long, default_value = "bilinear.txt")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("EPSIM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 1 for configuration problems, 2 for numerical failures.
fn classify(err: &anyhow::Error) -> u8 {
    use epsim_core::Error as E;
    if let Some(e) = err.downcast_ref::<E>() {
        match e {
            E::Config(_) | E::Shape(_) | E::Io(_) | E::Snapshot(_) => 1,
            _ => 2,
        }
    } else {
        1
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad number '{p}': {e}")))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DispersionTable {
            rmin,
            rmax,
            samples,
            log,
            out,
        } => dispersion_table(rmin, rmax, samples, log, out),
        Command::Kernel { band, eps, t, x, out } => kernel(band, eps, t, x, out),
        Command::Decay {
            band,
            norm,
            t0,
            t1,
            points,
            datum,
            sigma,
            eps,
            grid_n,
            grid_len,
            fit_lo,
            fit_hi,
            out,
        } => decay(
            band, norm, t0, t1, points, datum, sigma, eps, grid_n, grid_len, fit_lo, fit_hi, out,
        ),
        Command::Simulate { config } => simulate(config),
        Command::Norms {
            snapshot,
            field,
            k,
            out,
        } => norms_cmd(snapshot, field, k, out),
        Command::PhaseVerify {
            samples,
            seed,
            rmin,
            rmax,
            out_prefix,
        } => phase_verify(samples, seed, rmin, rmax, out_prefix),
        Command::MultNorms {
            lambda,
            s,
            samples,
            seed,
            n,
            extent,
            weight,
            derivative_samples,
            out,
        } => mult_norms(lambda, s, samples, seed, n, extent, weight, derivative_samples, out),
        Command::BilinearCheck {
            n,
            pairs,
            seed,
            lambda,
            s,
            out,
        } => bilinear_check(n, pairs, seed, lambda, s, out),
    }
}

fn dispersion_table(rmin: f64, rmax: f64, samples: usize, log: bool, out: PathBuf) -> Result<()> {
    if !(rmin >= 0.0 && rmax > rmin && samples >= 2) {
        anyhow::bail!(epsim_core::Error::Config(
            "need 0 <= rmin < rmax and at least 2 samples".into()
        ));
    }
    if log && rmin <= 0.0 {
        anyhow::bail!(epsim_core::Error::Config("log spacing needs rmin > 0".into()));
    }
    let mut resolved = BTreeMap::new();
    resolved.insert("rmin".to_string(), fmt_f64(rmin));
    resolved.insert("rmax".to_string(), fmt_f64(rmax));
    resolved.insert("samples".to_string(), samples.to_string());
    resolved.insert("log".to_string(), log.to_string());
    let mut w = Writer::create(&out, &resolved)?;
    w.line("r,p,q,dp,d2p,d3p")?;
    for i in 0..samples {
        let frac = i as f64 / (samples - 1) as f64;
        let r = if log {
            rmin * (rmax / rmin).powf(frac)
        } else {
            rmin + (rmax - rmin) * frac
        };
        w.row(&[
            r,
            dispersion::eval_p(r)?,
            dispersion::eval_q(r)?,
            dispersion::eval_dp(r)?,
            dispersion::eval_d2p(r)?,
            dispersion::eval_d3p(r)?,
        ])?;
    }
    w.finish()?;
    println!("wrote {} rows to {}", samples, out.display());
    Ok(())
}

fn kernel(band: String, eps: f64, t: String, x: String, out: PathBuf) -> Result<()> {
    let band = Band::parse(&band)?;
    let ts = parse_list(&t)?;
    let xs = parse_list(&x)?;
    let mut resolved = BTreeMap::new();
    resolved.insert("band".to_string(), format!("{band:?}").to_lowercase());
    resolved.insert("eps".to_string(), fmt_f64(eps));
    resolved.insert("t".to_string(), t.clone());
    resolved.insert("x".to_string(), x.clone());
    let mut w = Writer::create(&out, &resolved)?;
    w.line("t,x,re,im")?;
    for &tv in &ts {
        for &xv in &xs {
            let k = propagator::kernel_radial(&propagator::KernelRequest {
                t: tv,
                x_abs: xv,
                band,
                epsilon: eps,
            })?;
            w.row(&[tv, xv, k.value.re, k.value.im])?;
        }
    }
    w.finish()?;
    println!("wrote {} kernel samples to {}", ts.len() * xs.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn decay(
    band: String,
    norm: String,
    t0: f64,
    t1: f64,
    points: usize,
    datum: String,
    sigma: f64,
    eps: f64,
    grid_n: usize,
    grid_len: f64,
    fit_lo: Option<f64>,
    fit_hi: Option<f64>,
    out: PathBuf,
) -> Result<()> {
    let band = Band::parse(&band)?;
    let norm = NormKind::parse(&norm)?;
    let datum = match datum.as_str() {
        "radial" => Datum::RadialGaussian { sigma },
        "grid" => Datum::GridField {
            grid: Grid3::new(grid_n, grid_len)?,
            sigma,
        },
        other => anyhow::bail!(epsim_core::Error::Config(format!("unknown datum '{other}'"))),
    };
    let times = epsim_core::fit::log_spaced(t0, t1, points);
    let fit_window = match (fit_lo, fit_hi) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => anyhow::bail!(epsim_core::Error::Config(
            "fit-lo and fit-hi must be given together".into()
        )),
    };
    let scan = DecayScan {
        band,
        norm,
        datum,
        times,
        epsilon: eps,
        fit_window,
    };
    let mut resolved = BTreeMap::new();
    resolved.insert("band".to_string(), format!("{band:?}").to_lowercase());
    resolved.insert("norm".to_string(), format!("{norm:?}").to_lowercase());
    resolved.insert("t0".to_string(), fmt_f64(t0));
    resolved.insert("t1".to_string(), fmt_f64(t1));
    resolved.insert("points".to_string(), points.to_string());
    resolved.insert("sigma".to_string(), fmt_f64(sigma));
    resolved.insert("eps".to_string(), fmt_f64(eps));

    let trace = propagator::decay_scan(&scan)?;
    let mut w = Writer::create(&out, &resolved)?;
    w.line(&format!(
        "# fitted_exponent = {} over window [{}, {}]",
        fmt_f64(trace.fitted_exponent),
        fmt_f64(trace.fit_window.0),
        fmt_f64(trace.fit_window.1)
    ))?;
    w.line("t,value")?;
    for (t, v) in trace.times.iter().zip(&trace.values) {
        w.row(&[*t, *v])?;
    }
    w.finish()?;
    println!("fitted exponent {:.6}", trace.fitted_exponent);
    Ok(())
}

fn simulate(config: PathBuf) -> Result<()> {
    let cfg = RunConfig::parse_file(&config)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let resolved = cfg.resolved();
    std::fs::write(
        cfg.out_dir.join("resolved.cfg"),
        config::resolved_text(&resolved),
    )?;

    let grid = cfg.grid()?;
    let scfg = cfg.solver_config()?;
    // Seed jitters the datum center within the central cell block so seed
    // sweeps explore independent realizations.
    let mut rng = epsim_core::rng::stream(cfg.seed, 0);
    let jitter = |r: &mut dyn rand::RngCore| {
        use rand::Rng;
        r.gen_range(-0.5..0.5) * cfg.sigma
    };
    use rand::RngCore;
    let center = [
        cfg.box_len / 2.0 + jitter(&mut rng as &mut dyn RngCore),
        cfg.box_len / 2.0 + jitter(&mut rng as &mut dyn RngCore),
        cfg.box_len / 2.0 + jitter(&mut rng as &mut dyn RngCore),
    ];
    let initial = solver::initial_gaussian(grid, cfg.amplitude, cfg.sigma, center)?;

    let diag_path = cfg.out_dir.join("diagnostics.csv");
    let mut w = Writer::create(&diag_path, &resolved)?;
    w.line("t,mass,sup_rho,sup_v,h2k,hm1,l10w,poisson_res,curl_res")?;

    let out_dir = cfg.out_dir.clone();
    let mut snap_idx = 0usize;
    let mut on_snapshot = |state: &solver::FluidState| -> epsim_core::Result<()> {
        let path = out_dir.join(format!("snap_{snap_idx:06}.bin"));
        fields::snapshot::write_snapshot(&path, state.t, &state.rho, &state.psi)?;
        snap_idx += 1;
        Ok(())
    };
    let result = solver::run(&scfg, initial, Some(&mut on_snapshot));
    for row in &result.rows {
        w.line(&format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.mass),
            fmt_f64(row.sup_rho),
            fmt_f64(row.sup_v),
            fmt_f64(row.h2k),
            fmt_f64(row.hm1),
            fmt_f64(row.l10w),
            fmt_f64(row.poisson_res),
            row.curl_res.map(fmt_f64).unwrap_or_default()
        ))?;
    }
    match result.outcome {
        Ok(final_state) => {
            w.finish()?;
            println!(
                "integrated to t = {} ({} diagnostics rows, {} snapshots)",
                final_state.t,
                result.rows.len(),
                snap_idx
            );
            Ok(())
        }
        Err(e) => {
            w.line(&format!("# ABORTED: {e}"))?;
            w.finish()?;
            Err(e.into())
        }
    }
}

fn norms_cmd(snapshot: PathBuf, field: String, k: u32, out: PathBuf) -> Result<()> {
    use epsim_core::norms::NormSpec;
    let snap = fields::snapshot::read_snapshot(&snapshot)?;
    let mut resolved = BTreeMap::new();
    resolved.insert("snapshot".to_string(), snapshot.display().to_string());
    resolved.insert("field".to_string(), field.clone());
    resolved.insert("k".to_string(), k.to_string());

    let spectral = match field.as_str() {
        "rho" => fields::transform_forward(&snap.rho),
        "psi" => fields::transform_forward(&snap.psi),
        "alpha" => {
            let state = solver::FluidState::new(snap.rho.clone(), snap.psi.clone(), snap.t)?;
            solver::to_alpha1_hat(&state, solver::Mode::EulerPoisson)?
        }
        other => anyhow::bail!(epsim_core::Error::Config(format!("unknown field '{other}'"))),
    };
    let specs: Vec<(&str, NormSpec)> = vec![
        ("l2", NormSpec::L2),
        ("h1", NormSpec::Hs(1.0)),
        ("h2k", NormSpec::Hs(2.0 * k as f64)),
        ("hdot_m1", NormSpec::Hdot(-1.0)),
        ("wk10", NormSpec::Wkp(k as f64, 10.0)),
        ("y", NormSpec::Y(k)),
        ("xsnap", NormSpec::Xsnap(k, snap.t)),
    ];
    let psi_hat = fields::transform_forward(&snap.psi);
    let v = fields::gradient(&psi_hat);
    let energy = epsim_core::norms::energy(&snap.rho, &v, 2)?;

    let mut w = Writer::create(&out, &resolved)?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(specs.iter().map(|(name, _)| name.to_string()))
        .chain(std::iter::once("energy_tau2".to_string()))
        .collect();
    w.line(&header.join(","))?;
    let mut vals = vec![snap.t];
    for (_, spec) in &specs {
        vals.push(epsim_core::norms::norm(&spectral, spec)?);
    }
    vals.push(energy);
    w.row(&vals)?;
    w.finish()?;
    println!("wrote norms row to {}", out.display());
    Ok(())
}

fn phase_verify(samples: u64, seed: u64, rmin: f64, rmax: f64, out_prefix: String) -> Result<()> {
    let cfg = PhaseVerifyConfig {
        radius_range: (rmin, rmax),
        ..PhaseVerifyConfig::new(samples, seed)
    };
    let mut resolved = BTreeMap::new();
    resolved.insert("samples".to_string(), samples.to_string());
    resolved.insert("seed".to_string(), seed.to_string());
    resolved.insert("rmin".to_string(), fmt_f64(rmin));
    resolved.insert("rmax".to_string(), fmt_f64(rmax));

    let report = multiplier::verify_phase_bound(&cfg)?;
    let txt_path = PathBuf::from(format!("{out_prefix}_report.txt"));
    let mut w = Writer::create(&txt_path, &resolved)?;
    w.line(&format!("samples: {}", report.samples))?;
    w.line(&format!("seed: {}", report.seed))?;
    w.line(&format!("min_ratio: {}", fmt_f64(report.min_ratio)))?;
    w.line(&format!("max_ratio: {}", fmt_f64(report.max_ratio)))?;
    w.line(&format!(
        "argmin_xi: {} {} {}",
        fmt_f64(report.argmin.xi[0]),
        fmt_f64(report.argmin.xi[1]),
        fmt_f64(report.argmin.xi[2])
    ))?;
    w.line(&format!(
        "argmin_eta: {} {} {}",
        fmt_f64(report.argmin.eta[0]),
        fmt_f64(report.argmin.eta[1]),
        fmt_f64(report.argmin.eta[2])
    ))?;
    w.line(&format!("degenerate_excluded: {}", report.degenerate_excluded))?;
    w.finish()?;

    let hist_path = PathBuf::from(format!("{out_prefix}_hist.csv"));
    let mut h = Writer::create(&hist_path, &resolved)?;
    h.line("log10_lo,log10_hi,count")?;
    let (lo, hi) = multiplier::phase_histogram_range();
    let bins = report.histogram.len();
    for (i, c) in report.histogram.iter().enumerate() {
        let a = lo + (hi - lo) * i as f64 / bins as f64;
        let b = lo + (hi - lo) * (i + 1) as f64 / bins as f64;
        h.line(&format!("{},{},{}", fmt_f64(a), fmt_f64(b), c))?;
    }
    h.finish()?;
    println!(
        "min ratio {:.6} over {} samples ({} degenerate excluded)",
        report.min_ratio, report.samples, report.degenerate_excluded
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mult_norms(
    lambda: f64,
    s: f64,
    samples: usize,
    seed: u64,
    n: usize,
    extent: f64,
    weight: String,
    derivative_samples: u64,
    out: PathBuf,
) -> Result<()> {
    let weight = SliceWeight::parse(&weight)?;
    let mut resolved = BTreeMap::new();
    resolved.insert("lambda".to_string(), fmt_f64(lambda));
    resolved.insert("s".to_string(), fmt_f64(s));
    resolved.insert("samples".to_string(), samples.to_string());
    resolved.insert("seed".to_string(), seed.to_string());
    resolved.insert("n".to_string(), n.to_string());
    resolved.insert("extent".to_string(), fmt_f64(extent));
    resolved.insert("weight".to_string(), format!("{weight:?}"));

    let frozen = multiplier::sample_frequencies(seed, samples, (0.05, 12.0));
    let cfg = SliceNormConfig {
        lambda,
        s,
        n,
        extent,
        shells: (-4, 4),
        weight,
    };
    let report = multiplier::slice_norm_estimate(&cfg, &frozen)?;
    let deriv = multiplier::verify_phi1_derivative_bounds(derivative_samples, seed)?;

    let mut w = Writer::create(&out, &resolved)?;
    w.line(&format!("lambda: {}", fmt_f64(report.lambda)))?;
    w.line(&format!("s: {}", fmt_f64(report.s)))?;
    w.line(&format!("grid_n: {}", report.grid_n))?;
    w.line(&format!("extent: {}", fmt_f64(report.extent)))?;
    w.line(&format!("sup_m1: {}", fmt_f64(report.sup_m1)))?;
    w.line(&format!(
        "m_estimate_fixed_xi: {}",
        fmt_f64(report.summed_fixed_xi)
    ))?;
    w.line(&format!(
        "m_estimate_fixed_eta: {}",
        fmt_f64(report.summed_fixed_eta)
    ))?;
    for shell in &report.shells {
        w.line(&format!(
            "shell N={}: fixed_xi {} fixed_eta {}",
            shell.n_dyadic,
            fmt_f64(shell.fixed_xi),
            fmt_f64(shell.fixed_eta)
        ))?;
    }
    w.line(&format!(
        "derivative_bound_max_ratios: {} {} {} {}",
        fmt_f64(deriv.max_ratios[0]),
        fmt_f64(deriv.max_ratios[1]),
        fmt_f64(deriv.max_ratios[2]),
        fmt_f64(deriv.max_ratios[3])
    ))?;
    w.line(&format!("derivative_samples: {}", deriv.samples))?;
    w.line(&format!("resampled: {}", deriv.resampled))?;
    w.finish()?;
    println!(
        "M-norm estimates: fixed-xi {:.4}, fixed-eta {:.4}; sup|M1| {:.4}",
        report.summed_fixed_xi, report.summed_fixed_eta, report.sup_m1
    );
    Ok(())
}

fn bilinear_check(
    n: usize,
    pairs: usize,
    seed: u64,
    lambda: f64,
    s: f64,
    out: PathBuf,
) -> Result<()> {
    use rand::Rng;
    let grid = Grid3::new(n, 16.0)?;
    let mut resolved = BTreeMap::new();
    resolved.insert("n".to_string(), n.to_string());
    resolved.insert("pairs".to_string(), pairs.to_string());
    resolved.insert("seed".to_string(), seed.to_string());
    resolved.insert("lambda".to_string(), fmt_f64(lambda));
    resolved.insert("s".to_string(), fmt_f64(s));

    // Measured M-norm on a small slice grid.
    let frozen = multiplier::sample_frequencies(seed, 6, (0.1, 8.0));
    let m_cfg = SliceNormConfig {
        lambda,
        s,
        n: 32,
        extent: 16.0,
        shells: (-3, 3),
        weight: SliceWeight::None,
    };
    let m_report = multiplier::slice_norm_estimate(&m_cfg, &frozen)?;
    let m_norm = m_report.summed_fixed_eta.max(m_report.summed_fixed_xi);

    let random_field = |stream: u64| {
        let mut rng = epsim_core::rng::stream(seed, stream);
        let mut f = fields::RealField::zeros(grid);
        for v in f.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        fields::dealias(&fields::transform_forward(&f))
    };

    // Product-theorem check with m ≡ 1.
    let f0 = random_field(1000);
    let g0 = random_field(1001);
    let b0 = multiplier::pseudo_product(&|_, _| Complex::new(1.0, 0.0), &f0, &g0)?;
    let prod: Vec<Complex> = {
        let fp = fields::transform_inverse_c(&f0);
        let gp = fields::transform_inverse_c(&g0);
        fp.iter().zip(&gp).map(|(a, b)| a * b).collect()
    };
    let bp = fields::transform_inverse_c(&b0);
    let scale = prod.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let product_defect = bp
        .iter()
        .zip(&prod)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0_f64, f64::max)
        / scale;

    // Bilinear-estimate ratios with the weighted multiplier.
    let m1 = |xi: [f64; 3], eta: [f64; 3]| {
        Complex::new(
            multiplier::m1_eval(&dispersion::FrequencyTriple::new(xi, eta), lambda),
            0.0,
        )
    };
    let l3 = 60.0 / 29.0;
    let mut max_ratio = 0.0f64;
    for pair in 0..pairs {
        let f = random_field(2 * pair as u64);
        let g = random_field(2 * pair as u64 + 1);
        let b = multiplier::pseudo_product(&m1, &f, &g)?;
        let b_l2 = b.l2_box();
        let f10 = epsim_core::norms::lp_norm_complex(
            &fields::transform_inverse_c(&f),
            grid.cell_volume(),
            10.0,
        );
        let g_l3 = epsim_core::norms::lp_norm_complex(
            &fields::transform_inverse_c(&g),
            grid.cell_volume(),
            l3,
        );
        max_ratio = max_ratio.max(b_l2 / (m_norm * f10 * g_l3));
    }

    let mut w = Writer::create(&out, &resolved)?;
    w.line(&format!("product_defect: {}", fmt_f64(product_defect)))?;
    w.line(&format!("measured_m_norm: {}", fmt_f64(m_norm)))?;
    w.line(&format!("pairs: {pairs}"))?;
    w.line(&format!("max_bilinear_ratio: {}", fmt_f64(max_ratio)))?;
    w.finish()?;
    println!(
        "product defect {product_defect:.3e}; max bilinear ratio {max_ratio:.4} against measured M-norm {m_norm:.4}"
    );
    Ok(())
}
