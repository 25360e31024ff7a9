//! Flat `key = value` run configuration: `#` comments, unknown keys rejected,
//! every run writes its fully-resolved form (sorted keys) next to the
//! outputs together with an FNV-1a hash that is embedded in every CSV header.

use anyhow::{bail, Context, Result};
use epsim_core::fields::Grid3;
use epsim_core::solver::{Integrator, Mode, SolverConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub box_len: f64,
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    pub integrator: Integrator,
    pub snapshot_every: usize,
    pub k_norm: u32,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 64,
            box_len: 64.0,
            dt: 0.05,
            t_end: 50.0,
            mode: Mode::EulerPoisson,
            integrator: Integrator::Rk4IntegratingFactor,
            snapshot_every: 20,
            k_norm: 5,
            poisson_tol: 1e-12,
            poisson_max_iter: 200,
            amplitude: 1e-3,
            sigma: 4.0,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not `key = value`: {raw:?}", lineno + 1);
            };
            let key = key.trim();
            let value = value.trim();
            let ctx = || format!("config line {}: bad value for {key}", lineno + 1);
            match key {
                "n" => cfg.n = value.parse().with_context(ctx)?,
                "box_len" => cfg.box_len = value.parse().with_context(ctx)?,
                "dt" => cfg.dt = value.parse().with_context(ctx)?,
                "t_end" => cfg.t_end = value.parse().with_context(ctx)?,
                "mode" => cfg.mode = Mode::parse(value)?,
                "integrator" => cfg.integrator = Integrator::parse(value)?,
                "snapshot_every" => cfg.snapshot_every = value.parse().with_context(ctx)?,
                "k_norm" => cfg.k_norm = value.parse().with_context(ctx)?,
                "poisson_tol" => cfg.poisson_tol = value.parse().with_context(ctx)?,
                "poisson_max_iter" => cfg.poisson_max_iter = value.parse().with_context(ctx)?,
                "amplitude" => cfg.amplitude = value.parse().with_context(ctx)?,
                "sigma" => cfg.sigma = value.parse().with_context(ctx)?,
                "seed" => cfg.seed = value.parse().with_context(ctx)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => bail!("unknown config key '{other}'"),
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid3> {
        Ok(Grid3::new(self.n, self.box_len)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig {
            grid: self.grid()?,
            dt: self.dt,
            t_end: self.t_end,
            poisson_tol: self.poisson_tol,
            poisson_max_iter: self.poisson_max_iter,
            mode: self.mode,
            integrator: self.integrator,
            snapshot_every: self.snapshot_every,
            k_norm: self.k_norm,
        })
    }

    /// Resolved key=value map, sorted.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("n".into(), self.n.to_string());
        m.insert("box_len".into(), fmt_f64(self.box_len));
        m.insert("dt".into(), fmt_f64(self.dt));
        m.insert("t_end".into(), fmt_f64(self.t_end));
        m.insert(
            "mode".into(),
            match self.mode {
                Mode::EulerPoisson => "euler_poisson".into(),
                Mode::PureEuler => "pure_euler".into(),
            },
        );
        m.insert(
            "integrator".into(),
            match self.integrator {
                Integrator::Rk4IntegratingFactor => "rk4_integrating_factor".into(),
                Integrator::Etdrk4 => "etdrk4".into(),
            },
        );
        m.insert("snapshot_every".into(), self.snapshot_every.to_string());
        m.insert("k_norm".into(), self.k_norm.to_string());
        m.insert("poisson_tol".into(), fmt_f64(self.poisson_tol));
        m.insert("poisson_max_iter".into(), self.poisson_max_iter.to_string());
        m.insert("amplitude".into(), fmt_f64(self.amplitude));
        m.insert("sigma".into(), fmt_f64(self.sigma));
        m.insert("seed".into(), self.seed.to_string());
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m
    }
}

/// 17 significant digits, no locale: deterministic output format.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn resolved_text(map: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    for (k, v) in map {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let cfg = RunConfig::parse_str("n = 32\nbox_len = 32.0 # comment\n\ndt = 0.1\n").unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.dt, 0.1);
        assert!(RunConfig::parse_str("frobnicate = 3").is_err());
        assert!(RunConfig::parse_str("n 32").is_err());
    }

    #[test]
    fn hash_is_stable() {
        let cfg = RunConfig::default();
        let t1 = resolved_text(&cfg.resolved());
        let t2 = resolved_text(&cfg.resolved());
        assert_eq!(fnv1a(t1.as_bytes()), fnv1a(t2.as_bytes()));
    }
}
