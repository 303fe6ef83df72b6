//! Moments of the truncated solution and the error measures between densities.

use std::fmt;

use rayon::prelude::*;

use crate::density::{density_grid, DensityPath, Problem};
use crate::error::{Error, Result};
use crate::integrate::{linspace, simpson_uniform};
use crate::scalar::{from_usize, lit, Real};

/// Which moment an error measure compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    Mean,
    Variance,
}

impl MomentKind {
    pub fn label(self) -> &'static str {
        match self {
            MomentKind::Mean => "mean",
            MomentKind::Variance => "variance",
        }
    }
}

/// The error measures between densities or their moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// `∫_0^1 |f_1 - f_1^N| dp` at one time.
    DensityVsExact,
    /// `∫_0^1 |f_1^N - f_1^{N-1}| dp` at one time.
    DensityConsecutive,
    /// `∫ |E[P] - E[P_N]| dt`.
    MeanVsExact,
    /// `∫ |V[P] - V[P_N]| dt`.
    VarianceVsExact,
    /// `∫ |E[P_N] - E[P_{N-1}]| dt`.
    MeanConsecutive,
    /// `∫ |V[P_N] - V[P_{N-1}]| dt`.
    VarianceConsecutive,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 6] = [
        ErrorKind::DensityVsExact,
        ErrorKind::DensityConsecutive,
        ErrorKind::MeanVsExact,
        ErrorKind::VarianceVsExact,
        ErrorKind::MeanConsecutive,
        ErrorKind::VarianceConsecutive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::DensityVsExact => "pdf_exact",
            ErrorKind::DensityConsecutive => "pdf_consecutive",
            ErrorKind::MeanVsExact => "mean_exact",
            ErrorKind::VarianceVsExact => "variance_exact",
            ErrorKind::MeanConsecutive => "mean_consecutive",
            ErrorKind::VarianceConsecutive => "variance_consecutive",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn needs_exact(self) -> bool {
        matches!(
            self,
            ErrorKind::DensityVsExact | ErrorKind::MeanVsExact | ErrorKind::VarianceVsExact
        )
    }

    pub fn is_pointwise(self) -> bool {
        matches!(self, ErrorKind::DensityVsExact | ErrorKind::DensityConsecutive)
    }

    pub fn moment(self) -> Option<MomentKind> {
        match self {
            ErrorKind::MeanVsExact | ErrorKind::MeanConsecutive => Some(MomentKind::Mean),
            ErrorKind::VarianceVsExact | ErrorKind::VarianceConsecutive => {
                Some(MomentKind::Variance)
            }
            _ => None,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One entry of an error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport<T> {
    pub kind: ErrorKind,
    /// Time of a pointwise measure; `None` for time-integrated ones.
    pub t: Option<T>,
    pub truncation: usize,
    pub value: T,
}

/// Grid sizes and path used by the moment and error computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsConfig {
    /// Points of the moment grid on `[0.001, 0.999]`.
    pub moment_points: usize,
    /// Points of the error grid on `[0, 1]`; the end values are taken as 0.
    pub error_points: usize,
    /// Points of the time grid for time-integrated errors.
    pub time_points: usize,
    /// Path for truncated densities; `None` picks the problem's default.
    pub path: Option<DensityPath>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            moment_points: 2001,
            error_points: 2001,
            time_points: 151,
            path: None,
        }
    }
}

pub const MOMENT_GRID_LOW: f64 = 0.001;
pub const MOMENT_GRID_HIGH: f64 = 0.999;

/// Means and variances over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile<T> {
    pub t_grid: Vec<T>,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
}

impl<T: Real> MomentProfile<T> {
    pub fn series(&self, kind: MomentKind) -> &[T] {
        match kind {
            MomentKind::Mean => &self.mean,
            MomentKind::Variance => &self.variance,
        }
    }

    /// Simpson integral over time of `|self - other|` for one moment.
    pub fn distance(&self, other: &Self, kind: MomentKind) -> Result<T> {
        if self.t_grid != other.t_grid {
            return Err(Error::Precondition(
                "moment profiles are on different time grids".into(),
            ));
        }
        let diff: Vec<T> = self
            .series(kind)
            .iter()
            .zip(other.series(kind))
            .map(|(&a, &b)| (a - b).abs())
            .collect();
        Ok(simpson_uniform(&diff, uniform_step(&self.t_grid)))
    }
}

fn uniform_step<T: Real>(grid: &[T]) -> T {
    match grid.len() {
        0 | 1 => T::zero(),
        n => (grid[n - 1] - grid[0]) / from_usize(n - 1),
    }
}

/// Mean and variance of a density sampled on a uniform grid, by Simpson's rule.
pub fn moments_from_values<T: Real>(p_grid: &[T], values: &[T]) -> (T, T) {
    let h = uniform_step(p_grid);
    let m1: Vec<T> = p_grid.iter().zip(values).map(|(&p, &f)| p * f).collect();
    let m2: Vec<T> = p_grid.iter().zip(values).map(|(&p, &f)| p * p * f).collect();
    let mean = simpson_uniform(&m1, h);
    let second = simpson_uniform(&m2, h);
    (mean, (second - mean * mean).max(T::zero()))
}

impl StatsConfig {
    fn path_for<T: Real>(&self, problem: &Problem<T>) -> DensityPath {
        self.path.unwrap_or_else(|| problem.default_path())
    }

    pub fn moment_grid<T: Real>(&self) -> Vec<T> {
        linspace(lit(MOMENT_GRID_LOW), lit(MOMENT_GRID_HIGH), self.moment_points)
    }

    pub fn error_grid<T: Real>(&self) -> Vec<T> {
        linspace(T::zero(), T::one(), self.error_points)
    }

    /// Uniform time grid over the process domain.
    pub fn time_grid<T: Real>(&self, problem: &Problem<T>) -> Vec<T> {
        let d = problem.process().domain();
        linspace(d.start(), d.end(), self.time_points)
    }

    fn validate(&self) -> Result<()> {
        if self.moment_points < 3 || self.error_points < 3 || self.time_points < 3 {
            return Err(Error::invalid("grid", "every grid needs at least 3 points"));
        }
        Ok(())
    }

    /// `∫ p^k f_1^N(p, t) dp` on the moment grid.
    pub fn moment_k<T: Real>(&self, problem: &Problem<T>, t: T, k: i32) -> Result<T> {
        self.validate()?;
        let ps = self.moment_grid::<T>();
        let slice = problem.slice(t, self.path_for(problem))?;
        let ys = ps
            .iter()
            .map(|&p| Ok(p.powi(k) * slice.density(p)?))
            .collect::<Result<Vec<T>>>()?;
        Ok(simpson_uniform(&ys, uniform_step(&ps)))
    }

    /// Mean and variance of `P_N(t)` from its density.
    pub fn moments_n<T: Real>(&self, problem: &Problem<T>, t: T) -> Result<(T, T)> {
        let profile = self.profile_on(problem, &[t], self.path_for(problem))?;
        Ok((profile.mean[0], profile.variance[0]))
    }

    /// Moments on the given times along `path`.
    pub fn profile_on<T: Real>(
        &self,
        problem: &Problem<T>,
        t_grid: &[T],
        path: DensityPath,
    ) -> Result<MomentProfile<T>> {
        self.validate()?;
        let ps = self.moment_grid::<T>();
        let grid = density_grid(problem, &ps, t_grid, path)?;
        let (mean, variance) = grid
            .values
            .iter()
            .map(|row| moments_from_values(&ps, row))
            .unzip();
        Ok(MomentProfile {
            t_grid: t_grid.to_vec(),
            mean,
            variance,
        })
    }

    /// Moments of `P_N` over the configured time grid.
    pub fn profile<T: Real>(&self, problem: &Problem<T>) -> Result<MomentProfile<T>> {
        self.profile_on(problem, &self.time_grid(problem), self.path_for(problem))
    }

    /// Moments of the exact Wiener-driven solution over the configured time grid.
    pub fn exact_profile<T: Real>(&self, problem: &Problem<T>) -> Result<MomentProfile<T>> {
        self.profile_on(problem, &self.time_grid(problem), DensityPath::Exact)
    }

    /// `∫_0^1 |f_a - f_b| dp` at time `t` on the error grid.
    pub fn l1_distance<T: Real>(
        &self,
        a: (&Problem<T>, DensityPath),
        b: (&Problem<T>, DensityPath),
        t: T,
    ) -> Result<T> {
        self.validate()?;
        let ps = self.error_grid::<T>();
        let (sa, sb) = (a.0.slice(t, a.1)?, b.0.slice(t, b.1)?);
        let inner = &ps[1..ps.len() - 1];
        let mut diff = Vec::with_capacity(ps.len());
        diff.push(T::zero());
        for &p in inner {
            diff.push((sa.density(p)? - sb.density(p)?).abs());
        }
        diff.push(T::zero());
        Ok(simpson_uniform(&diff, uniform_step(&ps)))
    }

    pub fn e_pdf_exact<T: Real>(&self, problem: &Problem<T>, t: T) -> Result<T> {
        self.l1_distance(
            (problem, DensityPath::Exact),
            (problem, self.path_for(problem)),
            t,
        )
    }

    pub fn e_pdf_consecutive<T: Real>(&self, problem: &Problem<T>, t: T, n: usize) -> Result<T> {
        let (hi, lo) = consecutive(problem, n)?;
        self.l1_distance((&hi, self.path_for(&hi)), (&lo, self.path_for(&lo)), t)
    }

    pub fn e_moment_exact<T: Real>(&self, problem: &Problem<T>, kind: MomentKind) -> Result<T> {
        let exact = self.exact_profile(problem)?;
        self.profile(problem)?.distance(&exact, kind)
    }

    pub fn e_moment_consecutive<T: Real>(
        &self,
        problem: &Problem<T>,
        kind: MomentKind,
        n: usize,
    ) -> Result<T> {
        let (hi, lo) = consecutive(problem, n)?;
        self.profile(&hi)?.distance(&self.profile(&lo)?, kind)
    }

    /// Pointwise errors at each time and truncation order, in row-major order
    /// (`times` outer). Consecutive measures need every order `≥ 2`.
    pub fn pointwise_table<T: Real>(
        &self,
        problem: &Problem<T>,
        kind: ErrorKind,
        times: &[T],
        orders: &[usize],
    ) -> Result<Vec<ErrorReport<T>>> {
        if !kind.is_pointwise() {
            return Err(Error::invalid("kind", format!("{kind} is not a pointwise measure")));
        }
        let jobs: Vec<(T, usize)> = times
            .iter()
            .flat_map(|&t| orders.iter().map(move |&n| (t, n)))
            .collect();
        jobs.par_iter()
            .map(|&(t, n)| {
                let value = match kind {
                    ErrorKind::DensityVsExact => {
                        self.e_pdf_exact(&problem.with_truncation(n)?, t)?
                    }
                    _ => self.e_pdf_consecutive(problem, t, n)?,
                };
                Ok(ErrorReport {
                    kind,
                    t: Some(t),
                    truncation: n,
                    value,
                })
            })
            .collect()
    }

    /// Time-integrated mean and variance errors for each order, sharing the
    /// moment profiles between orders. Reports come as `(mean, variance)` pairs.
    pub fn moment_table<T: Real>(
        &self,
        problem: &Problem<T>,
        against_exact: bool,
        orders: &[usize],
    ) -> Result<Vec<(ErrorReport<T>, ErrorReport<T>)>> {
        let mut needed: Vec<usize> = orders.to_vec();
        if !against_exact {
            if let Some(&n) = orders.iter().find(|&&n| n < 2) {
                return Err(Error::invalid("N", format!("consecutive errors need N >= 2, got {n}")));
            }
            needed.extend(orders.iter().map(|n| n - 1));
        }
        needed.sort_unstable();
        needed.dedup();
        let profiles = needed
            .iter()
            .map(|&n| Ok((n, self.profile(&problem.with_truncation(n)?)?)))
            .collect::<Result<Vec<_>>>()?;
        let find = |n: usize| &profiles.iter().find(|(m, _)| *m == n).expect("profile computed").1;
        let exact = if against_exact {
            Some(self.exact_profile(problem)?)
        } else {
            None
        };
        orders
            .iter()
            .map(|&n| {
                let reference = exact.as_ref().unwrap_or_else(|| find(n - 1));
                let (km, kv) = if against_exact {
                    (ErrorKind::MeanVsExact, ErrorKind::VarianceVsExact)
                } else {
                    (ErrorKind::MeanConsecutive, ErrorKind::VarianceConsecutive)
                };
                let report = |kind, value| ErrorReport {
                    kind,
                    t: None,
                    truncation: n,
                    value,
                };
                Ok((
                    report(km, find(n).distance(reference, MomentKind::Mean)?),
                    report(kv, find(n).distance(reference, MomentKind::Variance)?),
                ))
            })
            .collect()
    }
}

fn consecutive<T: Real>(problem: &Problem<T>, n: usize) -> Result<(Problem<T>, Problem<T>)> {
    if n < 2 {
        return Err(Error::invalid("N", format!("consecutive errors need N >= 2, got {n}")));
    }
    Ok((problem.with_truncation(n)?, problem.with_truncation(n - 1)?))
}

/// `∫ p^k f_1^N(p, t) dp` with the default grids.
pub fn moment_k<T: Real>(problem: &Problem<T>, t: T, k: i32) -> Result<T> {
    StatsConfig::default().moment_k(problem, t, k)
}

/// Mean and variance of `P_N(t)` with the default grids.
pub fn moments_n<T: Real>(problem: &Problem<T>, t: T) -> Result<(T, T)> {
    StatsConfig::default().moments_n(problem, t)
}

pub fn e_pdf_exact<T: Real>(problem: &Problem<T>, t: T) -> Result<T> {
    StatsConfig::default().e_pdf_exact(problem, t)
}

pub fn e_pdf_consecutive<T: Real>(problem: &Problem<T>, t: T, n: usize) -> Result<T> {
    StatsConfig::default().e_pdf_consecutive(problem, t, n)
}

pub fn e_moment_exact<T: Real>(problem: &Problem<T>, kind: MomentKind) -> Result<T> {
    StatsConfig::default().e_moment_exact(problem, kind)
}

pub fn e_moment_consecutive<T: Real>(problem: &Problem<T>, kind: MomentKind, n: usize) -> Result<T> {
    StatsConfig::default().e_moment_consecutive(problem, kind, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InitialLaw;
    use crate::integrate::adaptive_simpson;
    use crate::kle::KleProcess;
    use approx::assert_abs_diff_eq;

    fn example1(n: usize) -> Problem<f64> {
        let law = InitialLaw::truncated_beta(7.0, 10.0, 0.1, 0.9).unwrap();
        Problem::new(KleProcess::wiener(1.5).unwrap(), law, n).unwrap()
    }

    fn example2(n: usize) -> Problem<f64> {
        let law = InitialLaw::truncated_exponential(0.1, 0.1, 0.9).unwrap();
        Problem::new(KleProcess::brownian_bridge(), law, n).unwrap()
    }

    fn coarse() -> StatsConfig {
        StatsConfig {
            moment_points: 801,
            error_points: 801,
            time_points: 31,
            path: None,
        }
    }

    #[test]
    fn initial_moments_match_direct_quadrature() {
        let problem = example1(2);
        let law = problem.initial();
        let mean = adaptive_simpson(|p| p * law.pdf(p), 0.1, 0.9, 1e-13);
        let second = adaptive_simpson(|p| p * p * law.pdf(p), 0.1, 0.9, 1e-13);
        let (m, v) = moments_n(&problem, 0.0).unwrap();
        // the grid does not resolve the jumps at the support ends
        assert_abs_diff_eq!(m, mean, epsilon = 1e-4);
        assert_abs_diff_eq!(v, second - mean * mean, epsilon = 1e-4);
        assert_abs_diff_eq!(moment_k(&problem, 0.0, 0).unwrap(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn moments_stay_in_the_unit_interval() {
        let problem = example2(3);
        for &t in &[0.0, 0.3, 0.7, 1.0] {
            let (m, v) = coarse().moments_n(&problem, t).unwrap();
            assert!(m > 0.1 && m < 0.9 && v >= 0.0);
        }
    }

    #[test]
    fn self_comparisons_vanish() {
        let problem = example1(2);
        let path = problem.default_path();
        let d = coarse()
            .l1_distance((&problem, path), (&problem, path), 1.0)
            .unwrap();
        assert_eq!(d, 0.0);
        let p = coarse().profile(&problem).unwrap();
        assert_eq!(p.distance(&p, MomentKind::Mean).unwrap(), 0.0);
    }

    #[test]
    fn density_error_against_exact_decreases_with_n() {
        let cfg = coarse();
        let errs: Vec<f64> = (1..=3)
            .map(|n| cfg.e_pdf_exact(&example1(n), 0.75).unwrap())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert_abs_diff_eq!(errs[0], 0.0595, epsilon = 1e-3);
    }

    #[test]
    fn consecutive_errors() {
        let cfg = coarse();
        let e = cfg.e_pdf_consecutive(&example2(1), 0.25, 2).unwrap();
        assert!(e > 0.0 && e < 0.01);
        assert!(cfg.e_pdf_consecutive(&example2(1), 0.25, 1).is_err());
        let table = cfg.moment_table(&example2(1), false, &[2, 3]).unwrap();
        assert!(table[0].0.value >= table[1].0.value);
        assert_eq!(table[1].1.kind, ErrorKind::VarianceConsecutive);
        let direct = cfg
            .e_moment_consecutive(&example2(1), MomentKind::Variance, 3)
            .unwrap();
        assert_eq!(table[1].1.value, direct);
    }

    #[test]
    fn exact_measures_need_a_reference() {
        let err = coarse().e_pdf_exact(&example2(2), 0.5).unwrap_err();
        assert!(matches!(err, Error::NoExactReference(_)));
    }

    #[test]
    fn pointwise_table_layout() {
        let cfg = coarse();
        let rows = cfg
            .pointwise_table(&example1(1), ErrorKind::DensityVsExact, &[0.5, 1.0], &[1, 2])
            .unwrap();
        let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.t.unwrap(), r.truncation)).collect();
        assert_eq!(keys, vec![(0.5, 1), (0.5, 2), (1.0, 1), (1.0, 2)]);
        assert!(cfg
            .pointwise_table(&example1(1), ErrorKind::MeanVsExact, &[0.5], &[1])
            .is_err());
    }

    #[test]
    fn kind_labels_round_trip() {
        for k in ErrorKind::ALL {
            assert_eq!(ErrorKind::from_label(k.label()), Some(k));
        }
    }
}
