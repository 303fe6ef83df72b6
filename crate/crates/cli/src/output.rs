//! CSV writing, number formatting and the run manifest.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "run_manifest.toml";

/// `x` with 9 significant digits; plain decimals for exponents in `-5..15`,
/// scientific notation otherwise.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Exponent after rounding to 9 digits, so 9.9999999996 counts as 1e1.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..15).contains(&exp) {
        format!("{x:.*}", (8 - exp).max(0) as usize)
    } else {
        sci
    }
}

/// Files written by one command, in order.
#[derive(Debug, Default)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().context("flushing CSV buffer")?;
        self.write(name, bytes)
    }

    /// Writes the resolved configuration plus a `[manifest]` table with the
    /// command and the SHA-256 of every artifact. Loading the file with
    /// `--config` repeats the run.
    pub fn write_manifest(&self, command: &str, cfg: &RunConfig) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            sha256: BTreeMap<&'a str, String>,
        }
        #[derive(Serialize)]
        struct Document<'a> {
            #[serde(flatten)]
            config: &'a RunConfig,
            manifest: Manifest<'a>,
        }
        let sha256 = self
            .written
            .iter()
            .map(|(name, bytes)| (name.as_str(), hex::encode(Sha256::digest(bytes))))
            .collect();
        let doc = Document {
            config: cfg,
            manifest: Manifest { command, sha256 },
        };
        let text = toml::to_string(&doc).context("serialising manifest")?;
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(0.037418), "0.0374180000");
        assert_eq!(num(1.5), "1.50000000");
        assert_eq!(num(-0.25), "-0.250000000");
        assert_eq!(num(123456789.4), "123456789");
        assert_eq!(num(9.9999999996), "10.0000000");
        assert_eq!(num(1.234e-7), "1.23400000e-7");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn values_survive_the_format() {
        for &x in &[0.1, 2.0 / 3.0, 1e-5 * std::f64::consts::PI, 7.0e20] {
            let back: f64 = num(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }
}
