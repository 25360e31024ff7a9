//! Deterministic output files: a `#` comment header with tool version and
//! resolved-config hash, fixed float formatting, and the resolved config
//! written alongside as `<file>.cfg`.

use crate::config::{fmt_f64, fnv1a, resolved_text};
use anyhow::{Context, Result};
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

pub struct Writer {
    file: std::io::BufWriter<std::fs::File>,
}

impl Writer {
    pub fn create(path: &Path, resolved: &BTreeMap<String, String>) -> Result<Writer> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        let text = resolved_text(resolved);
        let hash = fnv1a(text.as_bytes());
        let cfg_path = path.with_extension(format!(
            "{}.cfg",
            path.extension().and_then(|e| e.to_str()).unwrap_or("out")
        ));
        std::fs::write(&cfg_path, &text)
            .with_context(|| format!("writing {}", cfg_path.display()))?;
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut w = Writer {
            file: std::io::BufWriter::new(file),
        };
        w.line(&format!(
            "# epsim {} config={hash:016x}",
            env!("CARGO_PKG_VERSION")
        ))?;
        Ok(w)
    }

    pub fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.file, "{s}")?;
        Ok(())
    }

    pub fn row(&mut self, vals: &[f64]) -> Result<()> {
        let cols: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        self.line(&cols.join(","))
    }

    pub fn finish(mut self) -> Result<()> {
        self.file.flush()?;
        Ok(())
    }
}
