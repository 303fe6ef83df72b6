//! The subcommands. Each writes its artifacts and then the manifest.

use anyhow::{bail, Context, Result};
use kle_logistic::{
    density_grid, mc_density_check_against, DensityPath, ErrorKind, ErrorReport, McReport,
};
use std::collections::BTreeMap;

use crate::config::RunConfig;
use crate::output::{num, Artifacts};

pub fn spectrum(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let process = cfg.build_process()?;
    let pairs = process.eigenpairs(cfg.run.spectrum_terms)?;
    let with_parity = pairs.iter().any(|p| p.parity.is_some());
    let total = process.total_variance();
    let mut header = vec!["index".to_string()];
    if with_parity {
        header.push("parity".into());
    }
    header.extend(["eigenvalue", "frequency", "cumulative_variance_fraction"].map(String::from));
    let mut cumulative = 0.0;
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| {
            cumulative += p.value;
            let mut row = vec![p.index.to_string()];
            if with_parity {
                row.push(p.parity.map(|q| q.to_string()).unwrap_or_default());
            }
            row.extend([num(p.value), num(p.frequency), num(cumulative / total)]);
            row
        })
        .collect();
    out.write_csv("spectrum.csv", &header, &rows)
}

fn long_rows(grid: &kle_logistic::DensityGrid<f64>) -> Vec<Vec<String>> {
    grid.t_grid
        .iter()
        .zip(&grid.values)
        .flat_map(|(&t, row)| {
            grid.p_grid
                .iter()
                .zip(row)
                .map(move |(&p, &f)| vec![num(t), num(p), num(f)])
        })
        .collect()
}

pub fn pdf(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let header = ["t", "p", "f1n"].map(String::from);
    let ps = cfg.p_grid();
    let problems = cfg.problems()?;
    for (n, problem) in &problems {
        let grid = density_grid(problem, &ps, &cfg.grid.times, cfg.path_for(problem))
            .with_context(|| format!("density grid for N = {n}"))?;
        out.write_csv(&format!("pdf_N{n}.csv"), &header, &long_rows(&grid))?;
    }
    let (_, first) = &problems[0];
    if first.has_exact_reference() {
        let grid = density_grid(first, &ps, &cfg.grid.times, DensityPath::Exact)?;
        out.write_csv("pdf_exact.csv", &header, &long_rows(&grid))?;
    }
    Ok(())
}

pub fn moments(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let stats = cfg.stats_config();
    let problems = cfg.problems()?;
    let (_, first) = &problems[0];
    let times = stats.time_grid(first);
    let exact = if first.has_exact_reference() {
        Some(stats.exact_profile(first)?)
    } else {
        None
    };
    let mut header = ["t", "N", "mean", "variance"].map(String::from).to_vec();
    if exact.is_some() {
        header.extend(["exact_mean", "exact_variance"].map(String::from));
    }
    let mut rows = Vec::new();
    for (n, problem) in &problems {
        let profile = stats
            .profile_on(problem, &times, cfg.path_for(problem))
            .with_context(|| format!("moments for N = {n}"))?;
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![num(t), n.to_string(), num(profile.mean[i]), num(profile.variance[i])];
            if let Some(e) = &exact {
                row.extend([num(e.mean[i]), num(e.variance[i])]);
            }
            rows.push(row);
        }
    }
    out.write_csv("moments.csv", &header, &rows)
}

/// Truncation orders grouped by their tensor order, so that each group can
/// share moment profiles.
fn quad_groups(cfg: &RunConfig) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &n) in cfg.run.n.iter().enumerate() {
        groups.entry(cfg.quad_order_at(i)).or_default().push(n);
    }
    groups.into_values().collect()
}

pub fn errors(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let stats = cfg.stats_config();
    let kinds: Vec<ErrorKind> = cfg
        .errors
        .kinds
        .iter()
        .map(|l| ErrorKind::from_label(l).expect("validated"))
        .collect();
    let reference = cfg.problem(cfg.run.n[0])?;
    if let Some(k) = kinds.iter().find(|k| k.needs_exact()) {
        if !reference.has_exact_reference() {
            bail!(
                "error measure `{k}` needs an exact reference density, which exists only for the \
                 centred Wiener process with Gaussian coordinates"
            );
        }
    }
    // Consecutive measures are undefined at N = 1; those cells stay empty.
    let usable = |kind: ErrorKind, n: usize| kind.needs_exact() || n >= 2;
    let mut values: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut store = |kind: ErrorKind, t_index: usize, r: &ErrorReport<f64>| {
        let k = kinds.iter().position(|&x| x == kind);
        if let Some(k) = k {
            values.insert((k, t_index, r.truncation), r.value);
        }
    };
    for group in quad_groups(cfg) {
        let problem = cfg.problem(group[0])?;
        for &kind in kinds.iter().filter(|k| k.is_pointwise()) {
            let orders: Vec<usize> = group.iter().copied().filter(|&n| usable(kind, n)).collect();
            if orders.is_empty() {
                continue;
            }
            let table = stats.pointwise_table(&problem, kind, &cfg.errors.times, &orders)?;
            for r in &table {
                let t = r.t.expect("pointwise");
                let i = cfg.errors.times.iter().position(|&x| x == t).expect("requested time");
                store(kind, i, r);
            }
        }
        for against_exact in [true, false] {
            let wanted = kinds
                .iter()
                .any(|k| k.moment().is_some() && k.needs_exact() == against_exact);
            let orders: Vec<usize> = group
                .iter()
                .copied()
                .filter(|&n| against_exact || n >= 2)
                .collect();
            if !wanted || orders.is_empty() {
                continue;
            }
            for (mean, variance) in stats.moment_table(&problem, against_exact, &orders)? {
                store(mean.kind, 0, &mean);
                store(variance.kind, 0, &variance);
            }
        }
    }
    let mut header = vec!["measure".to_string(), "t".to_string()];
    header.extend(cfg.run.n.iter().map(|n| format!("N={n}")));
    let mut rows = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let times: Vec<String> = if kind.is_pointwise() {
            cfg.errors.times.iter().map(|&t| num(t)).collect()
        } else {
            vec!["all".to_string()]
        };
        for (i, t) in times.into_iter().enumerate() {
            let mut row = vec![kind.label().to_string(), t];
            row.extend(
                cfg.run
                    .n
                    .iter()
                    .map(|n| values.get(&(k, i, *n)).map(|&v| num(v)).unwrap_or_default()),
            );
            rows.push(row);
        }
    }
    out.write_csv("errors.csv", &header, &rows)
}

/// |z| above which the sampled and computed laws are declared inconsistent.
pub const MC_FAIL_Z: f64 = 5.0;

fn mc_failed(r: &McReport) -> bool {
    r.max_abs_z > MC_FAIL_Z || r.mean_z().abs() > MC_FAIL_Z || r.variance_z().abs() > MC_FAIL_Z
}

/// Returns whether every check stayed within [`MC_FAIL_Z`].
pub fn mc_check(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool> {
    let mc = cfg.mc_config();
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut all_pass = true;
    for &n in &cfg.run.n {
        let sampled = cfg.problem(n)?;
        let reference_n = cfg.mc.reference_n.unwrap_or(n);
        let reference = cfg.problem(reference_n)?;
        for &t in &cfg.mc.times {
            let r = mc_density_check_against(&sampled, &reference, t, &mc)
                .with_context(|| format!("Monte Carlo check at N = {n}, t = {t}"))?;
            let failed = mc_failed(&r);
            all_pass &= !failed;
            text.push_str(&format!(
                "N={n} reference_N={reference_n} t={} seed={} samples={} bins={}\n",
                num(t),
                mc.seed,
                mc.samples,
                mc.bins
            ));
            text.push_str(&format!(
                "  range [{}, {}] outside {} l1 {}\n",
                num(r.range.0),
                num(r.range.1),
                r.outside,
                num(r.l1)
            ));
            text.push_str(&format!(
                "  max|z| bins {} mean z {} variance z {}\n",
                num(r.max_abs_z),
                num(r.mean_z()),
                num(r.variance_z())
            ));
            text.push_str(&format!(
                "  mean {} vs {} variance {} vs {}\n  {}\n",
                num(r.mc_mean),
                num(r.density_mean),
                num(r.mc_variance),
                num(r.density_variance),
                if failed { "FAIL" } else { "PASS" }
            ));
            for b in &r.bins {
                rows.push(vec![
                    n.to_string(),
                    reference_n.to_string(),
                    num(t),
                    num(b.lo),
                    num(b.hi),
                    b.observed.to_string(),
                    num(b.expected),
                    num(b.z),
                ]);
            }
        }
    }
    text.push_str(&format!(
        "overall {} (threshold |z| > {MC_FAIL_Z})\n",
        if all_pass { "PASS" } else { "FAIL" }
    ));
    out.write("mc_report.txt", text.into_bytes())?;
    let header = ["N", "reference_N", "t", "bin_lo", "bin_hi", "observed", "expected", "z"]
        .map(String::from);
    out.write_csv("mc_report.csv", &header, &rows)?;
    Ok(all_pass)
}
