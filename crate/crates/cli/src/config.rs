//! Run configuration: a TOML tree layered as preset, then config file, then flags.

use anyhow::{bail, ensure, Context, Result};
use kle_logistic::{
    DensityPath, InitialLaw, KleProcess, McConfig, Problem, StatsConfig, XiLaw,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const PRESETS: [&str; 3] = ["example1", "example2", "example3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Wiener,
    BrownianBridge,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiKind {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKindCfg {
    Beta,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Collapsed for Gaussian coordinates, tensor otherwise.
    Auto,
    Tensor,
    Collapsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub kind: ProcessKind,
    /// Right end of `[0, end]` (Wiener only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    /// Inverse correlation length (exponential only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Half-width of `[-a, a]` (exponential only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub xi: XiKind,
    pub mean_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub law: InitialKindCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Truncation orders.
    pub n: Vec<usize>,
    /// Tensor order per dimension: empty for the default, one value for all
    /// `N`, or one value per entry of `n`.
    pub quad_order: Vec<usize>,
    pub path: PathChoice,
    /// Eigenpairs listed by `spectrum`.
    pub spectrum_terms: usize,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub p_low: f64,
    pub p_high: f64,
    pub p_points: usize,
    /// Times of the density curves.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsSection {
    /// Error measures by label, e.g. `pdf_exact` or `mean_consecutive`.
    pub kinds: Vec<String>,
    /// Times of the pointwise measures.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub moment_points: usize,
    pub error_points: usize,
    pub time_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub seed: u64,
    pub samples: usize,
    pub bins: usize,
    pub times: Vec<f64>,
    /// Truncation order of the reference density; unset compares each `N`
    /// with itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_n: Option<usize>,
}

/// Fully resolved configuration; every field is present after layering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: String,
    pub out: PathBuf,
    pub process: ProcessConfig,
    pub initial: InitialConfig,
    pub run: RunSection,
    pub grid: GridSection,
    pub errors: ErrorsSection,
    pub stats: StatsSection,
    pub mc: McSection,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub n: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_order: Option<Vec<usize>>,
    pub threads: Option<usize>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Built-in configuration named `name`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let beta = InitialConfig {
        law: InitialKindCfg::Beta,
        alpha: Some(7.0),
        beta: Some(10.0),
        rate: None,
        lower: 0.1,
        upper: 0.9,
    };
    let base = |process, initial, n: Vec<usize>, times: Vec<f64>, kinds, err_times, mc_time| RunConfig {
        preset: name.to_string(),
        out: PathBuf::from("out"),
        process,
        initial,
        run: RunSection {
            n,
            quad_order: Vec::new(),
            path: PathChoice::Auto,
            spectrum_terms: 10,
            threads: 0,
        },
        grid: GridSection {
            p_low: 0.005,
            p_high: 0.995,
            p_points: 199,
            times,
        },
        errors: ErrorsSection {
            kinds,
            times: err_times,
        },
        stats: StatsSection {
            moment_points: 2001,
            error_points: 2001,
            time_points: 151,
        },
        mc: McSection {
            seed: 42,
            samples: 1_000_000,
            bins: 100,
            times: vec![mc_time],
            reference_n: None,
        },
    };
    let consecutive = strings(&["pdf_consecutive", "mean_consecutive", "variance_consecutive"]);
    Ok(match name {
        "example1" => base(
            ProcessConfig {
                kind: ProcessKind::Wiener,
                end: Some(1.5),
                c: None,
                a: None,
                xi: XiKind::Gaussian,
                mean_level: 0.0,
            },
            beta,
            vec![1, 2, 3, 4],
            vec![0.0, 0.5, 0.75, 1.0, 1.5],
            strings(&["pdf_exact", "mean_exact", "variance_exact"]),
            vec![0.5, 0.75, 1.0, 1.5],
            0.75,
        ),
        "example2" => base(
            ProcessConfig {
                kind: ProcessKind::BrownianBridge,
                end: None,
                c: None,
                a: None,
                xi: XiKind::Gaussian,
                mean_level: 0.0,
            },
            InitialConfig {
                law: InitialKindCfg::Exponential,
                alpha: None,
                beta: None,
                rate: Some(kle_logistic::presets::EXAMPLE2_RATE),
                lower: 0.1,
                upper: 0.9,
            },
            vec![2, 3, 4],
            vec![0.0, 0.25, 0.4, 0.5],
            consecutive,
            vec![0.25, 0.4, 0.5],
            0.4,
        ),
        "example3" => base(
            ProcessConfig {
                kind: ProcessKind::Exponential,
                end: None,
                c: Some(kle_logistic::presets::EXAMPLE3_C),
                a: Some(0.5),
                xi: XiKind::Uniform,
                mean_level: 0.0,
            },
            beta,
            vec![2, 3],
            vec![-0.5, -0.25, 0.0, 0.25],
            consecutive,
            vec![-0.25, 0.0, 0.25],
            0.0,
        ),
        other => bail!("unknown preset `{other}` (expected one of {})", PRESETS.join(", ")),
    })
}

/// Recursively overlays `top` on `base`; tables merge, everything else replaces.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Preset (flag, else the file's `preset` key, else `example1`), overlaid by
/// the file, overlaid by the flags. The result is validated.
pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let mut file_tree = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => toml::Table::new(),
    };
    // Written by earlier runs; not part of the configuration.
    file_tree.remove("manifest");
    let name = match (&flags.preset, file_tree.get("preset")) {
        (Some(name), _) => name.clone(),
        (None, Some(v)) => v
            .as_str()
            .context("`preset` must be a string")?
            .to_string(),
        (None, None) => "example1".to_string(),
    };
    let mut tree = toml::Value::try_from(preset(&name)?)?;
    merge(&mut tree, toml::Value::Table(file_tree));
    let mut cfg: RunConfig = tree.try_into().context("invalid configuration")?;
    cfg.preset = name;
    if let Some(n) = &flags.n {
        cfg.run.n = n.clone();
    }
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = flags.seed {
        cfg.mc.seed = seed;
    }
    if let Some(q) = &flags.quad_order {
        cfg.run.quad_order = q.clone();
    }
    if let Some(threads) = flags.threads {
        cfg.run.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, v: Option<f64>) -> Result<f64> {
    let v = v.with_context(|| format!("missing `{name}`"))?;
    ensure!(v.is_finite() && v > 0.0, "`{name}` must be positive, got {v}");
    Ok(v)
}

impl RunConfig {
    pub fn build_process(&self) -> Result<KleProcess<f64>> {
        let p = &self.process;
        let process = match p.kind {
            ProcessKind::Wiener => KleProcess::wiener(positive("process.end", p.end)?)?,
            ProcessKind::BrownianBridge => KleProcess::brownian_bridge(),
            ProcessKind::Exponential => {
                KleProcess::exponential(positive("process.c", p.c)?, positive("process.a", p.a)?)?
            }
        };
        let xi = match p.xi {
            XiKind::Gaussian => XiLaw::StandardGaussian,
            XiKind::Uniform => XiLaw::UniformSym,
        };
        Ok(process.with_xi_law(xi).with_mean_level(p.mean_level))
    }

    pub fn build_initial(&self) -> Result<InitialLaw<f64>> {
        let i = &self.initial;
        Ok(match i.law {
            InitialKindCfg::Beta => InitialLaw::truncated_beta(
                positive("initial.alpha", i.alpha)?,
                positive("initial.beta", i.beta)?,
                i.lower,
                i.upper,
            )?,
            InitialKindCfg::Exponential => {
                InitialLaw::truncated_exponential(positive("initial.rate", i.rate)?, i.lower, i.upper)?
            }
        })
    }

    /// Tensor order configured for the `index`-th truncation order.
    pub fn quad_order_at(&self, index: usize) -> Option<usize> {
        match self.run.quad_order.len() {
            0 => None,
            1 => Some(self.run.quad_order[0]),
            _ => Some(self.run.quad_order[index]),
        }
    }

    /// Problem at truncation order `n`, with the tensor order paired with it.
    pub fn problem(&self, n: usize) -> Result<Problem<f64>> {
        let mut problem = Problem::new(self.build_process()?, self.build_initial()?, n)?;
        if let Some(index) = self.run.n.iter().position(|&m| m == n) {
            if let Some(order) = self.quad_order_at(index) {
                problem = problem.with_quad_order(order)?;
            }
        }
        Ok(problem)
    }

    /// `(N, problem)` for every configured order.
    pub fn problems(&self) -> Result<Vec<(usize, Problem<f64>)>> {
        self.run.n.iter().map(|&n| Ok((n, self.problem(n)?))).collect()
    }

    pub fn path_for(&self, problem: &Problem<f64>) -> DensityPath {
        match self.run.path {
            PathChoice::Auto => problem.default_path(),
            PathChoice::Tensor => DensityPath::Tensor,
            PathChoice::Collapsed => DensityPath::Collapsed,
        }
    }

    pub fn stats_config(&self) -> StatsConfig {
        StatsConfig {
            moment_points: self.stats.moment_points,
            error_points: self.stats.error_points,
            time_points: self.stats.time_points,
            path: match self.run.path {
                PathChoice::Auto => None,
                PathChoice::Tensor => Some(DensityPath::Tensor),
                PathChoice::Collapsed => Some(DensityPath::Collapsed),
            },
        }
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            seed: self.mc.seed,
            samples: self.mc.samples,
            bins: self.mc.bins,
        }
    }

    /// p-grid of the density curves.
    pub fn p_grid(&self) -> Vec<f64> {
        kle_logistic::integrate::linspace(self.grid.p_low, self.grid.p_high, self.grid.p_points)
    }

    /// Checks everything that can be checked without computing densities.
    pub fn validate(&self) -> Result<()> {
        let process = self.build_process()?;
        self.build_initial()?;
        ensure!(!self.run.n.is_empty(), "`run.n` is empty");
        ensure!(self.run.n.iter().all(|&n| n >= 1), "truncation orders start at 1");
        let q = self.run.quad_order.len();
        ensure!(
            q <= 1 || q == self.run.n.len(),
            "`run.quad_order` needs 0, 1 or {} entries, got {q}",
            self.run.n.len()
        );
        ensure!(self.run.quad_order.iter().all(|&o| o >= 1), "quadrature orders start at 1");
        ensure!(self.run.spectrum_terms >= 1, "`run.spectrum_terms` must be at least 1");
        let g = &self.grid;
        ensure!(
            g.p_low > 0.0 && g.p_low < g.p_high && g.p_high < 1.0,
            "p-grid must satisfy 0 < p_low < p_high < 1"
        );
        ensure!(g.p_points >= 2, "`grid.p_points` must be at least 2");
        ensure!(
            self.stats.moment_points >= 3 && self.stats.error_points >= 3 && self.stats.time_points >= 3,
            "stats grids need at least 3 points"
        );
        let domain = process.domain();
        for (what, times) in [("grid.times", &g.times), ("errors.times", &self.errors.times), ("mc.times", &self.mc.times)] {
            for &t in times.iter() {
                domain.check(t).with_context(|| format!("`{what}`"))?;
            }
        }
        for label in &self.errors.kinds {
            ensure!(
                kle_logistic::ErrorKind::from_label(label).is_some(),
                "unknown error measure `{label}`"
            );
        }
        self.mc_config().validate()?;
        if let Some(n) = self.mc.reference_n {
            ensure!(n >= 1, "`mc.reference_n` must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("example4").is_err());
    }

    #[test]
    fn file_overlays_preset_and_flags_overlay_file() {
        let dir = std::env::temp_dir().join(format!("kle-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "preset = \"example2\"\n[run]\nn = [2, 3]\n[mc]\nseed = 7\n").unwrap();
        let flags = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = resolve(Some(&path), &flags).unwrap();
        assert_eq!(cfg.preset, "example2");
        assert_eq!(cfg.run.n, vec![2, 3]);
        assert_eq!(cfg.mc.seed, 9);
        assert_eq!(cfg.process.kind, ProcessKind::BrownianBridge);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn serialised_config_resolves_to_itself() {
        let cfg = preset("example3").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("kle-rt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        assert_eq!(resolve(Some(&path), &Overrides::default()).unwrap(), cfg);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut cfg = preset("example1").unwrap();
        cfg.grid.times.push(2.0);
        assert!(cfg.validate().is_err());
        let mut cfg = preset("example1").unwrap();
        cfg.run.quad_order = vec![10, 12];
        assert!(cfg.validate().is_err());
        let mut cfg = preset("example1").unwrap();
        cfg.errors.kinds.push("pdf_sideways".into());
        assert!(cfg.validate().is_err());
    }
}
